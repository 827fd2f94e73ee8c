#include <algorithm>

#include "babelview/instrument.hpp"

#include "babelview/callgraph.hpp"

namespace bv {

namespace {

bool uses_local(const Instr& in, const std::string& local) {
  if (in.src == local || in.recv == local) return true;
  if (in.op == Op::Return && in.dst == local) return true;
  for (const auto& a : in.args)
    if (a == local) return true;
  return false;
}

bool defines_local(const Instr& in, const std::string& local) {
  return in.op != Op::Return && in.dst == local;
}

bool block_boundary(const Instr& in) {
  return in.op == Op::Label || in.op == Op::Goto || in.op == Op::IfNondet || in.op == Op::Return;
}

std::set<std::string> locals_in_use(const MethodDef& m) {
  std::set<std::string> out;
  for (const auto& l : m.entry_locals()) out.insert(l);
  for (const auto& in : m.body) {
    if (!in.dst.empty()) out.insert(in.dst);
    if (!in.src.empty()) out.insert(in.src);
    if (!in.recv.empty()) out.insert(in.recv);
    for (const auto& a : in.args) out.insert(a);
  }
  return out;
}

// Minimal-arity constructor of the generated class, the stable choice for
// layout-created Webviews.
const MethodDef* minimal_constructor(const Program& p, const std::string& cls) {
  const ClassDef* c = p.find_class(cls);
  const MethodDef* best = nullptr;
  for (const auto& m : c->methods) {
    if (!m.is_constructor()) continue;
    if (!best || m.arity() < best->arity()) best = &m;
  }
  return best;
}

}  // namespace

Program rewrite_constructors(const Program& p,
                             const std::map<std::string, std::string>& mapping,
                             std::vector<std::string>* lints) {
  Program out = p;
  for (auto& [cname, cls] : out.classes) {
    if (is_generated_class(cname)) continue;
    for (auto& m : cls.methods) {
      Sig msig{cname, m.name, m.arity()};
      for (int i = 0; i < static_cast<int>(m.body.size()); ++i) {
        Instr& alloc = m.body[i];
        if (alloc.op != Op::New) continue;
        auto mapped = mapping.find(alloc.type);
        if (mapped == mapping.end()) continue;

        // Find the paired constructor call within the basic block.
        int ctor_index = -1;
        for (int j = i + 1; j < static_cast<int>(m.body.size()); ++j) {
          const Instr& in = m.body[j];
          if (block_boundary(in) || defines_local(in, alloc.dst)) break;
          if (in.op == Op::Invoke && in.call_kind == CallKind::Special &&
              in.callee.cls == alloc.type && in.callee.name == "<init>" && !in.args.empty() &&
              in.args[0] == alloc.dst) {
            ctor_index = j;
            break;
          }
        }
        if (ctor_index < 0) {
          if (lints)
            lints->push_back("construction of " + alloc.type + " without a constructor call at " +
                             Site{msig, i}.str());
          continue;
        }
        Instr& ctor = m.body[ctor_index];
        if (!p.resolve_method(mapped->second, "<init>", ctor.callee.arity))
          throw AirError("missing mirrored constructor " + mapped->second + ".<init>/" +
                             std::to_string(ctor.callee.arity),
                         ctor.pos);
        alloc.type = mapped->second;
        ctor.callee.cls = mapped->second;
      }
    }
  }
  return out;
}

Program rewrite_findviewbyid(const Program& p,
                             const std::map<std::string, std::string>& mapping,
                             std::vector<std::string>* lints) {
  Program out = p;
  for (auto& [cname, cls] : out.classes) {
    if (is_generated_class(cname)) continue;
    for (auto& m : cls.methods) {
      Sig msig{cname, m.name, m.arity()};
      for (int i = 0; i < static_cast<int>(m.body.size()); ++i) {
        const Instr probe = m.body[i];
        if (probe.op != Op::Invoke || probe.callee.name != "findViewById" || probe.dst.empty())
          continue;
        const std::string r = probe.dst;

        // Locate the cast of the result within the same basic block.
        int cast_index = -1;
        int other_uses = 0;
        for (int j = i + 1; j < static_cast<int>(m.body.size()); ++j) {
          const Instr& in = m.body[j];
          if (block_boundary(in) || defines_local(in, r)) break;
          if (in.op == Op::Cast && in.src == r && cast_index < 0) {
            cast_index = j;
            continue;
          }
          if (uses_local(in, r)) ++other_uses;
        }
        if (cast_index < 0) {
          if (lints)
            lints->push_back("findViewById result not cast to any class at " +
                             Site{msig, i}.str());
          continue;
        }
        const Instr cast = m.body[cast_index];
        auto mapped = mapping.find(cast.type);
        if (mapped == mapping.end()) continue;

        // The result must die at the cast for the pair to be replaceable.
        bool live_after = other_uses > 0;
        for (int j = cast_index + 1; j < static_cast<int>(m.body.size()); ++j) {
          const Instr& in = m.body[j];
          if (uses_local(in, r)) {
            live_after = true;
            break;
          }
          if (defines_local(in, r)) break;
        }
        if (live_after) {
          if (lints)
            lints->push_back("findViewById result has uses besides the Webview cast at " +
                             Site{msig, i}.str());
          continue;
        }

        const MethodDef* ctor = minimal_constructor(out, mapped->second);
        Instr alloc;
        alloc.op = Op::New;
        alloc.dst = cast.dst;
        alloc.type = mapped->second;
        alloc.pos = probe.pos;

        std::vector<std::string> args = {cast.dst};
        std::vector<Instr> arg_defs;
        if (ctor->arity() > 1) {
          auto used = locals_in_use(m);
          int counter = 0;
          for (const auto& prm : ctor->params) {
            std::string tmp;
            do {
              tmp = "fvb$" + std::to_string(counter++);
            } while (used.count(tmp));
            used.insert(tmp);
            Instr def;
            def.dst = tmp;
            def.pos = cast.pos;
            if (prm.type == "string") {
              def.op = Op::ConstString;
            } else if (prm.type == "int") {
              def.op = Op::ConstInt;
            } else {
              def.op = Op::New;
              def.type = prm.type;
              if (!out.resolve_method(prm.type, "<init>", 1))
                throw AirError("cannot synthesize a default " + prm.type +
                               " for the chosen constructor");
            }
            arg_defs.push_back(def);
            if (def.op == Op::New) {
              Instr init;
              init.op = Op::Invoke;
              init.call_kind = CallKind::Special;
              init.callee = Sig{prm.type, "<init>", 1};
              init.args = {tmp};
              init.pos = cast.pos;
              arg_defs.push_back(init);
            }
            args.push_back(tmp);
          }
          if (lints)
            lints->push_back("synthesized default arguments for " + mapped->second + ".<init>/" +
                             std::to_string(ctor->arity()) + " at " + Site{msig, i}.str());
        }

        Instr init;
        init.op = Op::Invoke;
        init.call_kind = CallKind::Special;
        init.callee = Sig{mapped->second, "<init>", ctor->arity()};
        init.args = args;
        init.pos = cast.pos;

        m.body[i] = alloc;
        m.body[cast_index] = init;
        if (!arg_defs.empty())
          m.body.insert(m.body.begin() + cast_index, arg_defs.begin(), arg_defs.end());
      }
    }
  }
  return out;
}

InstrumentResult instrument_program(const Program& p) {
  InstrumentResult result;
  CallGraph graph = build_callgraph(p);
  result.map = map_webviews(p, graph);

  Program work = p;
  for (const auto& [webview, ifaces] : result.map.entries) {
    if (ifaces.empty()) continue;
    std::string bv_name = webview + kBabelViewSuffix;
    result.mapping[webview] = bv_name;
    if (work.classes.count(bv_name)) continue;  // already instrumented
    BabelViewClass bv = generate_babelview(p, webview, ifaces);
    work.classes.emplace(bv_name, bv.cls);
    auto parent = work.classes.find(webview);
    if (parent != work.classes.end()) parent->second.is_final = false;
  }

  work = rewrite_constructors(work, result.mapping, &result.lints);
  work = rewrite_findviewbyid(work, result.mapping, &result.lints);
  validate_program(work);
  result.program = std::move(work);
  return result;
}

}  // namespace bv
