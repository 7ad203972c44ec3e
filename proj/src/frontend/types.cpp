#include "civ/frontend/types.hpp"

#include <functional>
#include <set>

namespace civ::frontend {

TypeRef
void_type()
{
  static const TypeRef kVoid = std::make_shared<Type>();
  return kVoid;
}

TypeRef
int_type(int bits, bool is_signed, std::string alias)
{
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Int;
  t->bits = bits;
  t->is_signed = is_signed;
  t->alias = std::move(alias);
  return t;
}

TypeRef
pointer_to(TypeRef elem)
{
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Pointer;
  t->elem = std::move(elem);
  return t;
}

TypeRef
array_of(TypeRef elem, std::int64_t length)
{
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Array;
  t->elem = std::move(elem);
  t->length = length;
  return t;
}

TypeRef
record_type(const std::string& name, bool is_union)
{
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Record;
  t->record = name;
  t->is_union = is_union;
  return t;
}

TypeRef
function_type(TypeRef ret, std::vector<TypeRef> params)
{
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Function;
  t->elem = std::move(ret);
  t->params = std::move(params);
  return t;
}

TypeRef
with_alias(const TypeRef& type, const std::string& alias)
{
  auto t = std::make_shared<Type>(*type);
  t->alias = alias;
  return t;
}

bool
same_type(const TypeRef& a, const TypeRef& b)
{
  if (a == b)
    return true;
  if (!a || !b || a->kind != b->kind)
    return false;
  switch (a->kind)
  {
  case TypeKind::Void:
    return true;
  case TypeKind::Int:
    return a->bits == b->bits && a->is_signed == b->is_signed;
  case TypeKind::Pointer:
    return same_type(a->elem, b->elem);
  case TypeKind::Array:
    return a->length == b->length && same_type(a->elem, b->elem);
  case TypeKind::Record:
    return a->record == b->record && a->is_union == b->is_union;
  case TypeKind::Function:
    if (a->params.size() != b->params.size() || !same_type(a->elem, b->elem))
      return false;
    for (std::size_t i = 0; i < a->params.size(); ++i)
      if (!same_type(a->params[i], b->params[i]))
        return false;
    return true;
  }
  return false;
}

std::string
type_str(const TypeRef& t)
{
  if (!t)
    return "?";
  if (!t->alias.empty())
    return t->alias;
  switch (t->kind)
  {
  case TypeKind::Void:
    return "void";
  case TypeKind::Int:
  {
    const char* base = t->bits == 8 ? "char" : t->bits == 16 ? "short" : t->bits == 32 ? "int" : "long";
    return (t->is_signed ? "" : "unsigned ") + std::string(base);
  }
  case TypeKind::Pointer:
    if (t->elem && t->elem->kind == TypeKind::Function)
    {
      std::string s = type_str(t->elem->elem) + "(*)(";
      for (std::size_t i = 0; i < t->elem->params.size(); ++i)
        s += (i ? ", " : "") + type_str(t->elem->params[i]);
      return s + ")";
    }
    return type_str(t->elem) + "*";
  case TypeKind::Array:
    return type_str(t->elem) + "[" + std::to_string(t->length) + "]";
  case TypeKind::Record:
    return (t->is_union ? "union " : "struct ") + t->record;
  case TypeKind::Function:
  {
    std::string s = type_str(t->elem) + "(";
    for (std::size_t i = 0; i < t->params.size(); ++i)
      s += (i ? ", " : "") + type_str(t->params[i]);
    return s + ")";
  }
  }
  return "?";
}

bool is_void(const TypeRef& t) { return t && t->kind == TypeKind::Void; }
bool is_integer(const TypeRef& t) { return t && t->kind == TypeKind::Int; }
bool is_pointer(const TypeRef& t) { return t && t->kind == TypeKind::Pointer; }
bool is_scalar(const TypeRef& t) { return is_integer(t) || is_pointer(t); }
bool is_record(const TypeRef& t) { return t && t->kind == TypeKind::Record; }
bool is_array(const TypeRef& t) { return t && t->kind == TypeKind::Array; }
bool is_void_pointer(const TypeRef& t) { return is_pointer(t) && is_void(t->elem); }
bool is_char_pointer(const TypeRef& t) { return is_pointer(t) && is_integer(t->elem) && t->elem->bits == 8; }
bool is_function_pointer(const TypeRef& t) { return is_pointer(t) && t->elem && t->elem->kind == TypeKind::Function; }
bool is_record_pointer(const TypeRef& t) { return is_pointer(t) && is_record(t->elem); }

TypeRef
strip_arrays(TypeRef t)
{
  while (is_array(t))
    t = t->elem;
  return t;
}

std::int64_t
wrap_to(std::int64_t value, const TypeRef& t)
{
  int bits = is_integer(t) ? t->bits : 64;
  if (bits >= 64)
    return value;
  auto u = static_cast<std::uint64_t>(value) & ((std::uint64_t{1} << bits) - 1);
  if (t->is_signed && (u >> (bits - 1)) & 1)
    u |= ~((std::uint64_t{1} << bits) - 1);
  return static_cast<std::int64_t>(u);
}

std::string
to_string(TypeDeclKind kind)
{
  switch (kind)
  {
  case TypeDeclKind::Aggregate:
    return "aggregate";
  case TypeDeclKind::Union:
    return "union";
  case TypeDeclKind::Enum:
    return "enum";
  case TypeDeclKind::ScalarAlias:
    return "scalar-alias";
  }
  return "aggregate";
}

const TypeDecl*
TypeTable::record(const std::string& name) const
{
  auto it = records_.find(name);
  return it == records_.end() ? nullptr : &it->second;
}

const FieldInfo*
TypeTable::field(const std::string& rec, const std::string& field) const
{
  const TypeDecl* decl = record(rec);
  if (!decl)
    return nullptr;
  for (const auto& f : decl->fields)
    if (f.name == field)
      return &f;
  return nullptr;
}

const TypeDecl*
TypeTable::enum_decl(const std::string& name) const
{
  auto it = enums_.find(name);
  return it == enums_.end() ? nullptr : &it->second;
}

std::optional<std::int64_t>
TypeTable::enum_constant(const std::string& name) const
{
  auto it = enum_constants_.find(name);
  if (it == enum_constants_.end())
    return std::nullopt;
  return it->second;
}

TypeRef
TypeTable::typedef_type(const std::string& name) const
{
  auto it = typedefs_.find(name);
  return it == typedefs_.end() ? nullptr : it->second.aliased;
}

const TypeDecl*
TypeTable::typedef_decl(const std::string& name) const
{
  auto it = typedefs_.find(name);
  return it == typedefs_.end() ? nullptr : &it->second;
}

std::int64_t
TypeTable::size_of(const TypeRef& t) const
{
  if (!t)
    return 0;
  switch (t->kind)
  {
  case TypeKind::Void:
  case TypeKind::Function:
    return 1;
  case TypeKind::Int:
    return t->bits / 8;
  case TypeKind::Pointer:
    return 8;
  case TypeKind::Array:
    return t->length * size_of(t->elem);
  case TypeKind::Record:
  {
    const TypeDecl* decl = record(t->record);
    if (!decl)
      return 0;
    std::int64_t total = 0;
    for (const auto& f : decl->fields)
      total = t->is_union ? std::max(total, size_of(f.type)) : total + size_of(f.type);
    return total;
  }
  }
  return 0;
}

std::vector<const TypeDecl*>
TypeTable::all() const
{
  std::vector<const TypeDecl*> out;
  for (const auto* table : {&records_, &enums_, &typedefs_})
    for (const auto& [name, decl] : *table)
      out.push_back(&decl);
  return out;
}

TypeDecl&
TypeTable::declare_record(const std::string& name, bool is_union, const SourcePos& pos)
{
  auto [it, inserted] = records_.try_emplace(name);
  if (inserted)
  {
    it->second.name = name;
    it->second.kind = is_union ? TypeDeclKind::Union : TypeDeclKind::Aggregate;
    it->second.pos = pos;
  }
  else if ((it->second.kind == TypeDeclKind::Union) != is_union)
  {
    throw TypeError("'" + name + "' declared as both struct and union", pos);
  }
  return it->second;
}

void
TypeTable::add_enum(TypeDecl decl)
{
  for (const auto& [name, value] : decl.enumerators)
  {
    auto [it, inserted] = enum_constants_.emplace(name, value);
    if (!inserted && it->second != value)
      throw TypeError("enumerator '" + name + "' redefined with a different value", decl.pos);
  }
  if (!decl.name.empty())
    enums_[decl.name] = std::move(decl);
}

void
TypeTable::add_typedef(TypeDecl decl)
{
  auto it = typedefs_.find(decl.name);
  if (it != typedefs_.end())
  {
    if (!same_type(it->second.aliased, decl.aliased))
      throw TypeError("typedef '" + decl.name + "' redefined with a different type", decl.pos);
    return;
  }
  typedefs_.emplace(decl.name, std::move(decl));
}

void
TypeTable::set_selector(const std::string& rec, const std::string& field_name)
{
  auto it = records_.find(rec);
  if (it == records_.end())
    throw ConfigError("tagged union '" + rec + "' is not declared");
  const FieldInfo* f = field(rec, field_name);
  if (!f || !is_integer(f->type))
    throw ConfigError("selector '" + field_name + "' is not a scalar field of '" + rec + "'");
  it->second.selector_field = field_name;
  it->second.selector_owner = rec;
  if (it->second.kind == TypeDeclKind::Union)
    return;
  // An aggregate's selector governs the unions embedded in it.
  for (const auto& f : it->second.fields)
  {
    TypeRef t = strip_arrays(f.type);
    if (!is_record(t) || !t->is_union)
      continue;
    auto u = records_.find(t->record);
    if (u != records_.end() && !u->second.selector_field)
    {
      u->second.selector_field = field_name;
      u->second.selector_owner = rec;
    }
  }
}

void
TypeTable::check_recursion() const
{
  std::set<std::string> done;
  std::set<std::string> active;
  std::function<void(const TypeDecl&)> visit = [&](const TypeDecl& decl) {
    if (done.count(decl.name))
      return;
    if (active.count(decl.name))
      throw TypeError("'" + decl.name + "' contains itself without pointer indirection", decl.pos);
    active.insert(decl.name);
    for (const auto& f : decl.fields)
    {
      TypeRef t = strip_arrays(f.type);
      if (is_record(t))
        if (const TypeDecl* inner = record(t->record))
          visit(*inner);
    }
    active.erase(decl.name);
    done.insert(decl.name);
  };
  for (const auto& [name, decl] : records_)
    visit(decl);
}

} // namespace civ::frontend
