#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "babelview/air.hpp"

namespace bv {

// Class-hierarchy-analysis call graph. A virtual call to T.m has one edge
// per definition of m reachable from a subtype of T; scall and kcall sites
// have exactly one. Nodes and edge callees are definition signatures, so an
// inherited method is represented by its declaring class.

struct CallEdge {
  Site site;
  Sig caller;
  Sig callee;
  auto operator<=>(const CallEdge&) const = default;
};

struct CallGraph {
  std::set<Sig> nodes;
  std::vector<CallEdge> edges;  // sorted, unique
  std::map<Sig, std::vector<Sig>> out;
  std::set<Sig> entries;  // manifest entries plus generated attacker methods
};

CallGraph build_callgraph(const Program& program);

// Definition signatures a call site can dispatch to.
std::vector<Sig> call_targets(const Program& program, const Instr& call);

bool reachable(const CallGraph& graph, const std::set<Sig>& from, const Sig& to);

// One "caller -> callee @site" line per edge.
std::string dump_edges(const CallGraph& graph);

}  // namespace bv
