#pragma once

#include "civ/boundary/spec.hpp"
#include "civ/pdg/graphs.hpp"
#include "civ/pdg/paramtree.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace civ::boundary {

struct InterfaceSurface
{
  /// Configured kernel imports actually called from driver code.
  std::vector<std::string> imports;
  /// Address-taken driver functions listed as exports.
  std::vector<std::string> exports;
  /// Globals accessed from both compartments.
  std::vector<std::string> globals;

  bool has_import(const std::string& f) const;
  bool has_export(const std::string& f) const;
  bool has_global(const std::string& g) const;
};

InterfaceSurface interface_surface(const pdg::ProgramGraphs& graphs, const BoundarySpec& spec);

enum class ItemKind
{
  ImportParam,
  ImportReturn,
  ExportParam,
  ExportReturn,
  Global,
};

std::string to_string(ItemKind kind);

/// One boundary-crossing value: a parameter, return value or global, expanded field by field.
struct SharedItem
{
  ItemKind kind = ItemKind::ImportParam;
  std::string name;
  int slot = -1;
  pdg::ParamTree tree;
  std::vector<std::set<int>> cells;
  std::vector<bool> driver_access;
  std::vector<bool> kernel_access;
};

struct FieldRecord
{
  std::string item;
  std::string path;
  std::string type;
  bool accessed = false;
  bool shared = false;
};

struct SharedFieldSet
{
  std::vector<SharedItem> items;
  std::size_t deep = 0;
  std::size_t accessed = 0;
  std::size_t shared = 0;

  bool is_accessed(std::size_t item, int node) const;
  bool is_shared(std::size_t item, int node) const;
  /// Abstract locations of every shared tree node.
  std::set<int> shared_cells() const;
  std::vector<FieldRecord> records() const;
};

/// Deep-copy, driver-accessed and shared field counts over every interface
/// parameter, return value and boundary global (multiplicity preserved).
SharedFieldSet oversharing_metrics(const pdg::ProgramGraphs& graphs, const BoundarySpec& spec,
                                   const InterfaceSurface& surface);

} // namespace civ::boundary
