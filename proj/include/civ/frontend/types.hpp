#pragma once

#include "civ/common.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace civ::frontend {

struct Type;
using TypeRef = std::shared_ptr<const Type>;

enum class TypeKind
{
  Void,
  Int,
  Pointer,
  Array,
  Record,
  Function,
};

struct Type
{
  TypeKind kind = TypeKind::Void;
  int bits = 0;
  bool is_signed = true;
  /// Pointee, array element or function return type.
  TypeRef elem;
  std::int64_t length = 0;
  std::string record;
  bool is_union = false;
  std::vector<TypeRef> params;
  /// Typedef or enum name the type was spelled with, if any.
  std::string alias;
};

TypeRef void_type();
TypeRef int_type(int bits, bool is_signed, std::string alias = {});
TypeRef pointer_to(TypeRef elem);
TypeRef array_of(TypeRef elem, std::int64_t length);
TypeRef record_type(const std::string& name, bool is_union);
TypeRef function_type(TypeRef ret, std::vector<TypeRef> params);
TypeRef with_alias(const TypeRef& type, const std::string& alias);

/// Structural equality; aliases are ignored.
bool same_type(const TypeRef& a, const TypeRef& b);
std::string type_str(const TypeRef& type);

bool is_void(const TypeRef& t);
bool is_integer(const TypeRef& t);
bool is_pointer(const TypeRef& t);
bool is_scalar(const TypeRef& t);
bool is_record(const TypeRef& t);
bool is_array(const TypeRef& t);
bool is_void_pointer(const TypeRef& t);
bool is_char_pointer(const TypeRef& t);
bool is_function_pointer(const TypeRef& t);
/// Pointer to a struct or union.
bool is_record_pointer(const TypeRef& t);
TypeRef strip_arrays(TypeRef t);

/// Truncates `value` to the width and signedness of integer type `t`.
std::int64_t wrap_to(std::int64_t value, const TypeRef& t);

struct FieldInfo
{
  std::string name;
  TypeRef type;
  int ordinal = 0;
  SourcePos pos;
};

enum class TypeDeclKind
{
  Aggregate,
  Union,
  Enum,
  ScalarAlias,
};

std::string to_string(TypeDeclKind kind);

struct TypeDecl
{
  std::string name;
  TypeDeclKind kind = TypeDeclKind::Aggregate;
  std::vector<FieldInfo> fields;
  std::optional<std::string> selector_field;
  /// Record that holds the selector field: the union itself, or the
  /// aggregate the pragma was placed on.
  std::string selector_owner;
  /// ScalarAlias target.
  TypeRef aliased;
  std::vector<std::pair<std::string, std::int64_t>> enumerators;
  bool complete = false;
  SourcePos pos;
};

/// Type declarations shared by all files of one analysis run.
class TypeTable
{
public:
  const TypeDecl* record(const std::string& name) const;
  const FieldInfo* field(const std::string& record, const std::string& field) const;
  const TypeDecl* enum_decl(const std::string& name) const;
  std::optional<std::int64_t> enum_constant(const std::string& name) const;
  TypeRef typedef_type(const std::string& name) const;
  const TypeDecl* typedef_decl(const std::string& name) const;

  std::int64_t size_of(const TypeRef& type) const;

  /// Record, enum and typedef declarations in name order.
  std::vector<const TypeDecl*> all() const;
  const std::map<std::string, TypeDecl>& records() const { return records_; }

  TypeDecl& declare_record(const std::string& name, bool is_union, const SourcePos& pos);
  void add_enum(TypeDecl decl);
  void add_typedef(TypeDecl decl);
  /// Sets the selector field of a union or aggregate; throws ConfigError
  /// when the field is missing or not scalar.
  void set_selector(const std::string& record, const std::string& field);
  /// Rejects records that embed themselves without pointer indirection.
  void check_recursion() const;

private:
  std::map<std::string, TypeDecl> records_;
  std::map<std::string, TypeDecl> enums_;
  std::map<std::string, TypeDecl> typedefs_;
  std::map<std::string, std::int64_t> enum_constants_;
};

} // namespace civ::frontend
