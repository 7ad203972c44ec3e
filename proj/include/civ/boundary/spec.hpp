#pragma once

#include "civ/frontend/lower.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace civ::boundary {

enum class ApiClass
{
  LockAcquire,
  LockRelease,
  SpinlockAcquire,
  Alloc,
  Dealloc,
  Sleepable,
  SensitiveApi,
  StringApi,
};

std::string to_string(ApiClass c);
std::optional<ApiClass> api_class_from_string(const std::string& name);
const std::vector<ApiClass>& all_api_classes();

struct ApiEntry
{
  std::string function;
  /// Risky argument positions (size for alloc, lock object for lock APIs, ...).
  std::vector<int> positions;
  /// Allocation flags argument; -1 means the last argument.
  int flags_position = -1;
  SourcePos pos;
};

struct CompartmentRule
{
  /// File glob when it contains `/`, `*`, `?`, `[` or ends in `.mker`; otherwise a function or global name.
  std::string pattern;
  frontend::Compartment compartment = frontend::Compartment::Kernel;
  SourcePos pos;

  bool is_glob() const;
};

struct NamedEntry
{
  std::string name;
  SourcePos pos;
};

struct TaggedUnion
{
  std::string type;
  std::string selector;
  SourcePos pos;
};

struct BoundarySpec
{
  std::string path;
  std::vector<CompartmentRule> compartment_rules;
  std::vector<NamedEntry> kernel_imports;
  std::vector<NamedEntry> driver_exports;
  /// Functions defined outside the analyzed corpus.
  std::vector<NamedEntry> externals;
  std::map<ApiClass, std::vector<ApiEntry>> api_classes;
  std::vector<NamedEntry> lock_types;
  std::vector<std::int64_t> atomic_flag_values;
  std::vector<std::string> atomic_flag_names;
  std::vector<TaggedUnion> tagged_unions;
  bool taint_top_level_pointers = false;
  std::vector<Warning> warnings;

  const ApiEntry* api(ApiClass c, const std::string& function) const;
  bool in_class(ApiClass c, const std::string& function) const { return api(c, function) != nullptr; }
  bool is_import(const std::string& function) const;
  bool is_export(const std::string& function) const;
  /// Type name (struct tag or typedef alias) is configured as a lock type.
  bool is_lock_type(const frontend::TypeRef& type) const;
  /// Constant flags operand marks a non-sleeping allocation.
  bool is_atomic_flag(const frontend::Operand& op) const;
  /// Every function name the config declares (imports, exports, externals, API classes).
  std::set<std::string> declared_functions() const;
};

/// Parses TOML text; ConfigError on malformed input or violated invariants.
BoundarySpec parse_boundary_config(const std::string& text, const std::string& path = "<config>");
BoundarySpec load_boundary_config(const std::string& path);

/// Compartment of a function or global under the configured compartment rules.
frontend::Compartment compartment_for(const BoundarySpec& spec, const std::string& name, const std::string& file,
                                      std::optional<frontend::Compartment> hint);

/// Assigns compartments, applies tagged-union overrides and records warnings
/// for configured names that match nothing in the program.
void apply_boundary(BoundarySpec& spec, frontend::Program& program,
                    const std::map<std::string, std::optional<frontend::Compartment>>& file_hints = {});

} // namespace civ::boundary
