#include "civ/boundary/spec.hpp"

#include <toml.hpp>

#include <fnmatch.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace civ::boundary {

using frontend::Compartment;

std::string
to_string(ApiClass c)
{
  switch (c)
  {
  case ApiClass::LockAcquire:
    return "lock_acquire";
  case ApiClass::LockRelease:
    return "lock_release";
  case ApiClass::SpinlockAcquire:
    return "spinlock_acquire";
  case ApiClass::Alloc:
    return "alloc";
  case ApiClass::Dealloc:
    return "dealloc";
  case ApiClass::Sleepable:
    return "sleepable";
  case ApiClass::SensitiveApi:
    return "sensitive_api";
  case ApiClass::StringApi:
    return "string_api";
  }
  return "?";
}

const std::vector<ApiClass>&
all_api_classes()
{
  static const std::vector<ApiClass> all{
    ApiClass::LockAcquire, ApiClass::LockRelease, ApiClass::SpinlockAcquire, ApiClass::Alloc,
    ApiClass::Dealloc,     ApiClass::Sleepable,   ApiClass::SensitiveApi,    ApiClass::StringApi,
  };
  return all;
}

std::optional<ApiClass>
api_class_from_string(const std::string& name)
{
  for (ApiClass c : all_api_classes())
    if (to_string(c) == name)
      return c;
  return std::nullopt;
}

bool
CompartmentRule::is_glob() const
{
  return pattern.find_first_of("/*?[") != std::string::npos ||
         (pattern.size() > 5 && pattern.compare(pattern.size() - 5, 5, ".mker") == 0);
}

const ApiEntry*
BoundarySpec::api(ApiClass c, const std::string& function) const
{
  auto it = api_classes.find(c);
  if (it == api_classes.end())
    return nullptr;
  for (const auto& e : it->second)
    if (e.function == function)
      return &e;
  return nullptr;
}

namespace {

bool
listed(const std::vector<NamedEntry>& list, const std::string& name)
{
  return std::any_of(list.begin(), list.end(), [&](const NamedEntry& e) { return e.name == name; });
}

} // namespace

bool
BoundarySpec::is_import(const std::string& function) const
{
  return listed(kernel_imports, function);
}

bool
BoundarySpec::is_export(const std::string& function) const
{
  return listed(driver_exports, function);
}

bool
BoundarySpec::is_lock_type(const frontend::TypeRef& type) const
{
  if (!type)
    return false;
  if (!type->alias.empty() && listed(lock_types, type->alias))
    return true;
  if (frontend::is_record(type))
    return listed(lock_types, type->record) ||
           listed(lock_types, (type->is_union ? "union " : "struct ") + type->record);
  return false;
}

bool
BoundarySpec::is_atomic_flag(const frontend::Operand& op) const
{
  if (!op.is_const())
    return false;
  if (!op.enum_name.empty() &&
      std::find(atomic_flag_names.begin(), atomic_flag_names.end(), op.enum_name) != atomic_flag_names.end())
    return true;
  return std::find(atomic_flag_values.begin(), atomic_flag_values.end(), op.value) != atomic_flag_values.end();
}

std::set<std::string>
BoundarySpec::declared_functions() const
{
  std::set<std::string> out;
  for (const auto* list : {&kernel_imports, &driver_exports, &externals})
    for (const auto& e : *list)
      out.insert(e.name);
  for (const auto& [c, entries] : api_classes)
    for (const auto& e : entries)
      out.insert(e.function);
  return out;
}

namespace {

class ConfigReader
{
public:
  explicit ConfigReader(std::string path) : path_(std::move(path)) {}

  BoundarySpec
  read(const std::string& text)
  {
    toml::table root;
    try
    {
      root = toml::parse(text, path_);
    }
    catch (const toml::parse_error& e)
    {
      throw ConfigError(std::string(e.description()), pos(e.source()));
    }
    spec_.path = path_;
    for (const auto& [key, node] : root)
    {
      std::string k(key.str());
      const toml::table* table = node.as_table();
      if (!table)
        throw ConfigError("top-level key '" + k + "' must be a table", pos(node.source()));
      if (k == "compartments")
        compartments(*table);
      else if (k == "interface")
        interface(*table);
      else if (k == "api_classes")
        api_classes(*table);
      else if (k == "unions")
        unions(*table);
      else if (k == "options")
        options(*table);
      else
        throw ConfigError("unknown table [" + k + "]", pos(node.source()));
    }
    check_disjoint(ApiClass::LockAcquire, ApiClass::LockRelease);
    check_disjoint(ApiClass::Alloc, ApiClass::Dealloc);
    return std::move(spec_);
  }

private:
  SourcePos
  pos(const toml::source_region& r) const
  {
    SourcePos p;
    p.file = path_;
    p.line = static_cast<int>(r.begin.line);
    p.column = static_cast<int>(r.begin.column);
    return p;
  }

  [[noreturn]] void
  fail(const toml::node& node, const std::string& message) const
  {
    throw ConfigError(message, pos(node.source()));
  }

  std::string
  string_of(const toml::node& node, const std::string& what) const
  {
    auto s = node.value<std::string>();
    if (!s)
      fail(node, what + " must be a string");
    return *s;
  }

  const toml::array&
  array_of(const toml::node& node, const std::string& what) const
  {
    const toml::array* a = node.as_array();
    if (!a)
      fail(node, what + " must be an array");
    return *a;
  }

  std::vector<NamedEntry>
  names(const toml::node& node, const std::string& what) const
  {
    std::vector<NamedEntry> out;
    for (const auto& item : array_of(node, what))
    {
      NamedEntry e{string_of(item, what + " entry"), pos(item.source())};
      if (listed(out, e.name))
        fail(item, "duplicate entry '" + e.name + "' in " + what);
      out.push_back(std::move(e));
    }
    return out;
  }

  Compartment
  compartment_of(const toml::node& node) const
  {
    std::string s = string_of(node, "compartment");
    if (s == "kernel")
      return Compartment::Kernel;
    if (s == "driver")
      return Compartment::Driver;
    fail(node, "compartment must be \"kernel\" or \"driver\", got \"" + s + "\"");
  }

  void
  compartments(const toml::table& t)
  {
    for (const auto& [key, node] : t)
    {
      if (key.str() != "rules")
        fail(node, "unknown key '" + std::string(key.str()) + "' in [compartments]");
      for (const auto& item : array_of(node, "rules"))
      {
        const auto& pair = array_of(item, "rule");
        if (pair.size() != 2)
          fail(item, "rule must be [pattern, compartment]");
        spec_.compartment_rules.push_back(
          CompartmentRule{string_of(*pair.get(0), "rule pattern"), compartment_of(*pair.get(1)), pos(item.source())});
      }
    }
  }

  void
  interface(const toml::table& t)
  {
    for (const auto& [key, node] : t)
    {
      std::string k(key.str());
      if (k == "kernel_imports")
        spec_.kernel_imports = names(node, k);
      else if (k == "driver_exports")
        spec_.driver_exports = names(node, k);
      else if (k == "externals")
        spec_.externals = names(node, k);
      else
        fail(node, "unknown key '" + k + "' in [interface]");
    }
  }

  void
  api_classes(const toml::table& t)
  {
    for (const auto& [key, node] : t)
    {
      std::string k(key.str());
      auto cls = api_class_from_string(k);
      if (!cls)
        fail(node, "unknown API class '" + k + "'");
      auto& entries = spec_.api_classes[*cls];
      for (const auto& item : array_of(node, k))
      {
        ApiEntry e;
        e.pos = pos(item.source());
        if (item.is_string())
        {
          e.function = string_of(item, "API function");
        }
        else
        {
          const auto& parts = array_of(item, "API entry");
          if (parts.empty() || parts.size() > 3)
            fail(item, "API entry must be \"name\" or [name, [positions]] or [name, [positions], flags_position]");
          e.function = string_of(*parts.get(0), "API function");
          if (parts.size() >= 2)
          {
            for (const auto& p : array_of(*parts.get(1), "argument positions"))
            {
              auto v = p.value<std::int64_t>();
              if (!v || *v < 0)
                fail(p, "argument position must be a non-negative integer");
              e.positions.push_back(static_cast<int>(*v));
            }
          }
          if (parts.size() == 3)
          {
            auto v = parts.get(2)->value<std::int64_t>();
            if (!v || *v < 0)
              fail(*parts.get(2), "flags position must be a non-negative integer");
            e.flags_position = static_cast<int>(*v);
          }
        }
        for (const auto& prev : entries)
          if (prev.function == e.function)
            fail(item, "duplicate entry '" + e.function + "' in API class " + k);
        entries.push_back(std::move(e));
      }
    }
  }

  void
  unions(const toml::table& t)
  {
    for (const auto& [key, node] : t)
    {
      if (key.str() != "tagged_unions")
        fail(node, "unknown key '" + std::string(key.str()) + "' in [unions]");
      for (const auto& item : array_of(node, "tagged_unions"))
      {
        const auto& pair = array_of(item, "tagged union");
        if (pair.size() != 2)
          fail(item, "tagged union must be [type, selector_field]");
        spec_.tagged_unions.push_back(TaggedUnion{string_of(*pair.get(0), "union type"),
                                                  string_of(*pair.get(1), "selector field"), pos(item.source())});
      }
    }
  }

  void
  options(const toml::table& t)
  {
    for (const auto& [key, node] : t)
    {
      std::string k(key.str());
      if (k == "taint_top_level_pointers")
      {
        auto b = node.value<bool>();
        if (!b)
          fail(node, "taint_top_level_pointers must be a boolean");
        spec_.taint_top_level_pointers = *b;
      }
      else if (k == "lock_types")
      {
        spec_.lock_types = names(node, k);
      }
      else if (k == "atomic_flag_literals")
      {
        for (const auto& item : array_of(node, k))
        {
          if (auto v = item.value<std::int64_t>(); v && item.is_integer())
            spec_.atomic_flag_values.push_back(*v);
          else if (auto s = item.value<std::string>())
            spec_.atomic_flag_names.push_back(*s);
          else
            fail(item, "atomic flag literal must be an integer or an enum constant name");
        }
      }
      else
      {
        fail(node, "unknown key '" + k + "' in [options]");
      }
    }
  }

  void
  check_disjoint(ApiClass a, ApiClass b) const
  {
    auto ia = spec_.api_classes.find(a);
    if (ia == spec_.api_classes.end())
      return;
    for (const auto& e : ia->second)
      if (const ApiEntry* other = spec_.api(b, e.function))
        throw ConfigError("'" + e.function + "' is listed in both " + to_string(a) + " and " + to_string(b),
                          other->pos);
  }

  std::string path_;
  BoundarySpec spec_;
};

bool
glob_match(const std::string& pattern, const std::string& file)
{
  if (fnmatch(pattern.c_str(), file.c_str(), 0) == 0)
    return true;
  auto slash = file.find_last_of('/');
  return slash != std::string::npos && fnmatch(pattern.c_str(), file.c_str() + slash + 1, 0) == 0;
}

} // namespace

BoundarySpec
parse_boundary_config(const std::string& text, const std::string& path)
{
  return ConfigReader(path).read(text);
}

BoundarySpec
load_boundary_config(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read boundary config '" + path + "'", SourcePos{path, 0, 0, 0});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_boundary_config(ss.str(), path);
}

Compartment
compartment_for(const BoundarySpec& spec, const std::string& name, const std::string& file,
                std::optional<Compartment> hint)
{
  for (const auto& r : spec.compartment_rules)
    if (!r.is_glob() && r.pattern == name)
      return r.compartment;
  for (const auto& r : spec.compartment_rules)
    if (r.is_glob() && glob_match(r.pattern, file))
      return r.compartment;
  return hint.value_or(Compartment::Kernel);
}

void
apply_boundary(BoundarySpec& spec, frontend::Program& program,
               const std::map<std::string, std::optional<Compartment>>& file_hints)
{
  auto hint = [&](const std::string& file) -> std::optional<Compartment> {
    auto it = file_hints.find(file);
    return it == file_hints.end() ? std::nullopt : it->second;
  };
  std::set<std::string> defined;
  std::set<std::string> globals;
  for (auto& m : program.modules)
  {
    for (auto& fn : m.functions)
    {
      fn.compartment = compartment_for(spec, fn.name, m.path, hint(m.path));
      defined.insert(fn.name);
    }
    for (auto& g : m.globals)
    {
      g.compartment = compartment_for(spec, g.name, m.path, hint(m.path));
      globals.insert(g.name);
    }
  }
  for (const auto& u : spec.tagged_unions)
  {
    try
    {
      program.types.set_selector(u.type, u.selector);
    }
    catch (const ConfigError& e)
    {
      throw ConfigError(e.message(), u.pos);
    }
  }
  auto known = [&](const std::string& name) { return defined.count(name) || program.find_prototype(name); };
  auto warn = [&](const SourcePos& pos, const std::string& message) {
    spec.warnings.push_back(Warning{pos, message});
  };
  for (const auto& r : spec.compartment_rules)
    if (!r.is_glob() && !defined.count(r.pattern) && !globals.count(r.pattern))
      warn(r.pos, "compartment rule '" + r.pattern + "' matches no function or global");
  for (const auto& e : spec.kernel_imports)
    if (!known(e.name))
      warn(e.pos, "kernel import '" + e.name + "' is not declared in any loaded file");
  for (const auto& e : spec.driver_exports)
  {
    if (!defined.count(e.name))
      warn(e.pos, "driver export '" + e.name + "' is not defined in any loaded file");
    else if (program.find_function(e.name)->compartment != Compartment::Driver)
      warn(e.pos, "driver export '" + e.name + "' is not in the driver compartment");
  }
  for (const auto& [cls, entries] : spec.api_classes)
    for (const auto& e : entries)
      if (!known(e.function))
        warn(e.pos, to_string(cls) + " function '" + e.function + "' is not declared in any loaded file");
}

} // namespace civ::boundary
