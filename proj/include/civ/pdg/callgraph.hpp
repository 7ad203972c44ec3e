#pragma once

#include "civ/frontend/lower.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace civ::pdg {

struct CallSite
{
  std::string caller;
  int instr = -1;

  auto operator<=>(const CallSite&) const = default;
};

/// Direct calls plus indirect calls resolved to every address-taken
/// function with a matching signature.
class CallGraph
{
public:
  explicit CallGraph(const frontend::Program& program);

  /// Defined functions a call instruction may reach.
  const std::vector<std::string>& targets(const std::string& caller, int instr) const;
  /// Call sites that may reach `callee`.
  const std::vector<CallSite>& callers(const std::string& callee) const;
  const std::set<std::string>& address_taken() const { return address_taken_; }
  /// `caller` reaches `callee` through zero or more calls.
  bool reaches(const std::string& caller, const std::string& callee) const;
  /// Defined functions reachable from `fn`, including itself.
  std::set<std::string> reachable_from(const std::string& fn) const;

private:
  std::map<std::pair<std::string, int>, std::vector<std::string>> targets_;
  std::map<std::string, std::vector<CallSite>> callers_;
  std::map<std::string, std::set<std::string>> callees_;
  std::set<std::string> address_taken_;
};

} // namespace civ::pdg
