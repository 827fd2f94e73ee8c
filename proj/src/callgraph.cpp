#include <algorithm>
#include <sstream>

#include "babelview/callgraph.hpp"

namespace bv {

std::vector<Sig> call_targets(const Program& p, const Instr& call) {
  std::set<Sig> targets;
  if (call.call_kind == CallKind::Virtual) {
    for (const auto& sub : subclasses(p, call.callee.cls)) {
      if (auto def = p.def_sig(Sig{sub, call.callee.name, call.callee.arity})) targets.insert(*def);
    }
  } else {
    if (auto def = p.def_sig(call.callee)) targets.insert(*def);
  }
  if (targets.empty())
    throw AirError("call to a signature absent from program and stubs: " + call.callee.str(),
                   call.pos);
  return {targets.begin(), targets.end()};
}

CallGraph build_callgraph(const Program& p) {
  CallGraph g;
  for (const auto& [cname, cls] : p.classes) {
    for (const auto& m : cls.methods) {
      Sig caller{cname, m.name, m.arity()};
      g.nodes.insert(caller);
      for (int i = 0; i < static_cast<int>(m.body.size()); ++i) {
        const Instr& in = m.body[i];
        if (in.op != Op::Invoke) continue;
        for (const auto& callee : call_targets(p, in)) {
          g.edges.push_back({Site{caller, i}, caller, callee});
          g.nodes.insert(callee);
        }
      }
    }
  }
  for (const auto& [cname, cls] : p.stubs)
    for (const auto& m : cls.methods) g.nodes.insert(Sig{cname, m.name, m.arity()});

  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  for (const auto& e : g.edges) g.out[e.caller].push_back(e.callee);

  for (const auto& e : p.manifest.entry_points)
    if (auto def = p.def_sig(e)) g.entries.insert(*def);
  for (const auto& [cname, cls] : p.classes) {
    if (!is_generated_class(cname)) continue;
    for (const auto& m : cls.methods)
      if (m.name == "attacker") g.entries.insert(Sig{cname, m.name, m.arity()});
  }
  return g;
}

bool reachable(const CallGraph& g, const std::set<Sig>& from, const Sig& to) {
  std::vector<Sig> work(from.begin(), from.end());
  std::set<Sig> seen;
  while (!work.empty()) {
    Sig cur = work.back();
    work.pop_back();
    if (!seen.insert(cur).second) continue;
    if (cur == to) return true;
    auto it = g.out.find(cur);
    if (it == g.out.end()) continue;
    for (const auto& next : it->second) work.push_back(next);
  }
  return false;
}

std::string dump_edges(const CallGraph& g) {
  std::ostringstream os;
  for (const auto& e : g.edges)
    os << e.caller.str() << " -> " << e.callee.str() << " @" << e.site.str() << "\n";
  return os.str();
}

}  // namespace bv
