#pragma once

#include "civ/frontend/ast.hpp"
#include "civ/frontend/ir.hpp"

#include <map>
#include <string>
#include <vector>

namespace civ::frontend {

/// All lowered files of one analysis run plus the shared type table.
struct Program
{
  TypeTable types;
  std::vector<IRModule> modules;
  std::vector<Warning> warnings;

  const IRFunction* find_function(const std::string& name) const;
  IRFunction* find_function(const std::string& name);
  const Global* find_global(const std::string& name) const;
  Global* find_global(const std::string& name);
  /// Declared or defined signature of `name`, or null.
  const Prototype* find_prototype(const std::string& name) const;

  std::vector<const IRFunction*> functions() const;
  std::vector<const Global*> globals() const;

  /// Rebuilds the name indexes; call after modules change.
  void reindex();

private:
  std::map<std::string, std::pair<std::size_t, std::size_t>> function_index_;
  std::map<std::string, std::pair<std::size_t, std::size_t>> global_index_;
  std::map<std::string, Prototype> prototypes_;
};

/// Lowers a set of translation units that share one namespace of types,
/// globals and functions.
Program lower(const std::vector<TranslationUnit>& units);

/// Single-file convenience wrapper.
Program lower(TranslationUnit unit);

/// Parses and lowers files, in order.
Program load_program(const std::vector<SourceFile>& files);

/// Deterministic text form of one module.
std::string dump_ir(const Program& program, const IRModule& module);
std::string dump_ir(const Program& program);
std::string dump_function(const IRFunction& fn);

} // namespace civ::frontend
