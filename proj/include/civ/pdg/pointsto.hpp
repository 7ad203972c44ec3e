#pragma once

#include "civ/frontend/lower.hpp"
#include "civ/pdg/callgraph.hpp"

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace civ::pdg {

enum class LocKind
{
  Var,
  Global,
  Func,
  Field,
  Alloc,
  /// Stand-in object for memory a pointer parameter or global refers to
  /// when its producer lies outside the analyzed code.
  Placeholder,
  Temp,
  Ret,
};

struct AbsLoc
{
  LocKind kind = LocKind::Var;
  std::string function;
  std::string name;
  int temp = -1;
  int instr = -1;
  int base = -1;
  std::string record;
  std::string field;
  int depth = 0;
  frontend::TypeRef type;
  std::string label;
};

/// Field nesting beyond this depth collapses onto the base object.
inline constexpr int kMaxFieldDepth = 6;

/// Field-sensitive, flow- and context-insensitive inclusion-based points-to.
class PointsTo
{
public:
  PointsTo(const frontend::Program& program, const CallGraph& calls);

  std::size_t size() const { return locs_.size(); }
  const AbsLoc& loc(int id) const { return locs_[static_cast<std::size_t>(id)]; }
  const std::set<int>& pts(int id) const { return pts_[static_cast<std::size_t>(id)]; }

  // Find-only lookups; -1 when the location was never created.
  int var(const std::string& fn, const std::string& name) const;
  int temp(const std::string& fn, int t) const;
  int global(const std::string& name) const;
  int func(const std::string& name) const;
  int ret(const std::string& fn) const;
  int field(int base, const std::string& record, const std::string& field) const;

  /// Location holding an operand's value (variable or temp), or -1.
  int value_loc(const std::string& fn, const frontend::Operand& op) const;
  /// Objects an operand may point to.
  std::set<int> operand_pts(const std::string& fn, const frontend::Operand& op) const;
  /// Outermost object of a field chain.
  int root_of(int id) const;
  /// Every location whose field chain starts at `root`, including itself.
  std::vector<int> rooted_at(int root) const;

  std::string describe(int id) const { return loc(id).label; }

private:
  struct Constraint
  {
    enum class Kind
    {
      Addr,
      Copy,
      Load,
      Store,
      Field,
    };
    Kind kind;
    int dst;
    int src;
    std::string record;
    std::string field;
  };

  int intern(AbsLoc loc, const std::tuple<int, std::string, std::string, int, int, std::string>& key);
  int make_var(const std::string& fn, const std::string& name, frontend::TypeRef type);
  int make_temp(const std::string& fn, int t, frontend::TypeRef type);
  int make_global(const frontend::Global& g);
  int make_func(const std::string& name);
  int make_ret(const std::string& fn, frontend::TypeRef type);
  int make_alloc(const std::string& fn, int instr, frontend::TypeRef type);
  int make_field(int base, const std::string& record, const std::string& field);
  int make_placeholder(const std::string& owner, const std::string& path, frontend::TypeRef type);
  int operand_loc(const std::string& fn, const frontend::Operand& op);
  void seed(int holder, const frontend::TypeRef& type, const std::string& owner, const std::string& path,
            std::set<std::string> seen_records);
  void generate(const frontend::IRFunction& fn, const CallGraph& calls);
  void solve();

  const frontend::Program& program_;
  std::vector<AbsLoc> locs_;
  std::vector<std::set<int>> pts_;
  std::map<std::tuple<int, std::string, std::string, int, int, std::string>, int> index_;
  std::vector<Constraint> constraints_;
};

} // namespace civ::pdg
