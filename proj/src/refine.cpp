#include <algorithm>
#include <cctype>

#include "babelview/refine.hpp"

namespace bv {

namespace {

// Lattice for string folding. Builder references carry an id into a
// side table holding the accumulated content, so aliases of the same
// StringBuilder stay consistent under mutation.
struct StrVal {
  enum Kind { Bottom, Const, Builder, Top } kind = Bottom;
  std::string s;
  int builder = -1;

  bool operator==(const StrVal&) const = default;
};

struct Content {
  bool known = true;
  std::string s;

  bool operator==(const Content&) const = default;
};

struct FoldState {
  std::map<std::string, StrVal> locals;
  std::map<int, Content> builders;

  bool operator==(const FoldState&) const = default;
};

StrVal join_vals(const StrVal& a, const StrVal& b) {
  if (a == b) return a;
  if (a.kind == StrVal::Bottom) return b;
  if (b.kind == StrVal::Bottom) return a;
  return {StrVal::Top, "", -1};
}

Content join_content(const Content& a, const Content& b) {
  if (a == b) return a;
  return {false, ""};
}

void join_state(FoldState& dst, const FoldState& src, bool& changed) {
  for (const auto& [l, v] : src.locals) {
    auto it = dst.locals.find(l);
    if (it == dst.locals.end()) {
      dst.locals[l] = v;
      changed = true;
    } else {
      StrVal j = join_vals(it->second, v);
      if (!(j == it->second)) {
        it->second = j;
        changed = true;
      }
    }
  }
  for (const auto& [id, c] : src.builders) {
    auto it = dst.builders.find(id);
    if (it == dst.builders.end()) {
      dst.builders[id] = c;
      changed = true;
    } else {
      Content j = join_content(it->second, c);
      if (!(j == it->second)) {
        it->second = j;
        changed = true;
      }
    }
  }
}

class Folder {
 public:
  Folder(const Program& p, const MethodDef& m) : p_(p), m_(m), labels_(label_indices(m)) {}

  StringConstMap run() {
    int n = static_cast<int>(m_.body.size());
    std::vector<std::optional<FoldState>> in_state(n + 1);
    in_state[0].emplace();
    std::set<int> work = {0};
    while (!work.empty()) {
      int i = *work.begin();
      work.erase(work.begin());
      if (i >= n) continue;
      FoldState out = transfer(*in_state[i], m_.body[i], i);
      for (int s : instr_successors(m_, i, labels_)) {
        if (!in_state[s]) {
          in_state[s].emplace(out);
          work.insert(s);
        } else {
          bool changed = false;
          join_state(*in_state[s], out, changed);
          if (changed) work.insert(s);
        }
      }
    }

    StringConstMap out;
    for (int i = 0; i < n; ++i) {
      const Instr& in = m_.body[i];
      if (in.op != Op::Invoke || !in_state[i]) continue;
      for (const auto& a : in.args) {
        auto v = value_of(*in_state[i], a);
        if (v.kind == StrVal::Const) out.resolved[{i, a}] = v.s;
      }
    }
    return out;
  }

 private:
  StrVal value_of(const FoldState& s, const std::string& local) const {
    auto it = s.locals.find(local);
    if (it == s.locals.end()) return {StrVal::Top, "", -1};
    if (it->second.kind == StrVal::Builder) {
      auto bit = s.builders.find(it->second.builder);
      if (bit != s.builders.end() && bit->second.known)
        return {StrVal::Const, bit->second.s, -1};
      return {StrVal::Top, "", -1};
    }
    return it->second;
  }

  FoldState transfer(FoldState s, const Instr& in, int index) const {
    auto top = [&](const std::string& l) { s.locals[l] = {StrVal::Top, "", -1}; };
    switch (in.op) {
      case Op::ConstString:
        s.locals[in.dst] = {StrVal::Const, in.str_val, -1};
        break;
      case Op::ConstInt:
        top(in.dst);
        break;
      case Op::Assign:
      case Op::Cast: {
        auto it = s.locals.find(in.src);
        StrVal v = it == s.locals.end() ? StrVal{StrVal::Top, "", -1} : it->second;
        s.locals[in.dst] = v;
        break;
      }
      case Op::New:
        if (in.type == "StringBuilder") {
          s.locals[in.dst] = {StrVal::Builder, "", index};
          s.builders[index] = {true, ""};
        } else {
          top(in.dst);
        }
        break;
      case Op::Get:
        top(in.dst);
        break;
      case Op::Put: {
        // A builder stored to the heap escapes.
        auto it = s.locals.find(in.src);
        if (it != s.locals.end() && it->second.kind == StrVal::Builder)
          s.builders[it->second.builder] = {false, ""};
        break;
      }
      case Op::Invoke:
        transfer_call(s, in);
        break;
      default:
        break;
    }
    return s;
  }

  void transfer_call(FoldState& s, const Instr& in) const {
    auto def = p_.def_sig(in.callee);
    std::string dcls = def ? def->cls : "";
    std::string dname = def ? def->name : "";

    if (dcls == "StringBuilder") {
      auto recv = s.locals.find(in.args[0]);
      int id = (recv != s.locals.end() && recv->second.kind == StrVal::Builder)
                   ? recv->second.builder
                   : -1;
      if (dname == "<init>") return;
      if (dname == "append") {
        if (id >= 0) {
          StrVal arg = value_of(s, in.args[1]);
          auto& content = s.builders[id];
          if (content.known && arg.kind == StrVal::Const) content.s += arg.s;
          else content = {false, ""};
          if (!in.dst.empty()) s.locals[in.dst] = {StrVal::Builder, "", id};
        } else if (!in.dst.empty()) {
          s.locals[in.dst] = {StrVal::Top, "", -1};
        }
        return;
      }
      if (dname == "toString") {
        if (!in.dst.empty()) s.locals[in.dst] = value_of(s, in.args[0]);
        return;
      }
      if (dname == "setLength") {
        if (id >= 0) s.builders[id] = {false, ""};
        return;
      }
    }

    // Any other call: builder arguments escape, the result is unknown.
    for (const auto& a : in.args) {
      auto it = s.locals.find(a);
      if (it != s.locals.end() && it->second.kind == StrVal::Builder)
        s.builders[it->second.builder] = {false, ""};
    }
    if (!in.dst.empty()) s.locals[in.dst] = {StrVal::Top, "", -1};
  }

  const Program& p_;
  const MethodDef& m_;
  std::map<std::string, int> labels_;
};

}  // namespace

StringConstMap fold_strings(const Program& p, const ClassDef& cls, const MethodDef& m) {
  (void)cls;
  return Folder(p, m).run();
}

const StringConstMap& FoldCache::for_method(const Sig& def) {
  auto it = cache_.find(def);
  if (it != cache_.end()) return it->second;
  const ClassDef* cls = program_.find_class(def.cls);
  if (!cls) throw AirError("unknown class: " + def.cls);
  const MethodDef* m = cls->find_method(def.name, def.arity);
  if (!m) throw AirError("unknown method: " + def.str());
  return cache_.emplace(def, fold_strings(program_, *cls, *m)).first->second;
}

bool is_suspicious_term(const std::string& name, const std::set<std::string>& terms) {
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const auto& t : terms) {
    std::string lt;
    for (char c : t) lt += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (!lt.empty() && lower.find(lt) != std::string::npos) return true;
  }
  return false;
}

namespace {

struct PrefSiteInfo {
  bool valid = false;
  std::string key;       // resolved constant
  bool resolved = false;
  std::string value_type;
};

// Inspects the call instruction at a preference/extras site and resolves
// the key operand.
PrefSiteInfo inspect_kv_site(const Program& p, FoldCache& folds, const Site& site,
                             const std::set<std::string>& method_names) {
  PrefSiteInfo info;
  const ClassDef* cls = p.find_class(site.method.cls);
  if (!cls) return info;
  const MethodDef* m = cls->find_method(site.method.name, site.method.arity);
  if (!m || site.index < 0 || site.index >= static_cast<int>(m->body.size())) return info;
  const Instr& in = m->body[site.index];
  if (in.op != Op::Invoke) return info;
  auto def = p.def_sig(in.callee);
  if (!def || !method_names.count(def->name)) return info;
  info.valid = true;
  info.value_type = (def->name == "putInt" || def->name == "getInt") ? "int" : "string";
  if (auto k = folds.for_method(site.method).at(site.index, in.args[1])) {
    info.key = *k;
    info.resolved = true;
  }
  return info;
}

}  // namespace

std::vector<PreferenceLeak> match_preference_flows(const Program& p,
                                                   const std::vector<Flow>& flows,
                                                   FoldCache& folds,
                                                   const SourceSinkConfig& config) {
  // Key-value channels handled by the pairing machinery: preferences and
  // intent extras share it.
  struct Channel {
    const char* put_label;
    const char* get_label;
    std::set<std::string> put_names;
    std::set<std::string> get_names;
  };
  static const std::vector<Channel> channels = {
      {"prefs-put", "prefs-get", {"putString", "putInt"}, {"getString", "getInt"}},
      {"intent-put", "intent-get", {"putExtra"}, {"getStringExtra"}},
  };

  std::vector<PreferenceLeak> out;
  for (const auto& ch : channels) {
    std::vector<std::pair<const Flow*, PrefSiteInfo>> puts, gets;
    for (const auto& f : flows) {
      if (f.sink_label == ch.put_label) {
        auto info = inspect_kv_site(p, folds, f.sink_site, ch.put_names);
        if (info.valid) puts.push_back({&f, info});
      }
      if (f.source_label == ch.get_label) {
        auto info = inspect_kv_site(p, folds, f.source_site, ch.get_names);
        if (info.valid) gets.push_back({&f, info});
      }
    }
    for (const auto& [pf, pi] : puts) {
      for (const auto& [gf, gi] : gets) {
        if (pi.value_type != gi.value_type) continue;
        if (pi.resolved && gi.resolved && pi.key != gi.key) continue;
        PreferenceLeak leak;
        leak.put = *pf;
        leak.get = *gf;
        leak.value_type = pi.value_type;
        leak.key_resolved = pi.resolved && gi.resolved;
        leak.key = pi.resolved ? pi.key : (gi.resolved ? gi.key : "<unresolved>");
        leak.suspicious = is_suspicious_term(leak.key, config.suspicious_keys);
        out.push_back(std::move(leak));
      }
    }
  }
  return out;
}

std::vector<PreferenceKey> report_preference_keys(const Program& p,
                                                  const WebviewInterfaceMap& map,
                                                  const SourceSinkConfig& config) {
  CallGraph graph = build_callgraph(p);
  std::set<Sig> seeds;
  for (auto& im : all_interface_methods(p, map))
    if (auto def = p.def_sig(im.call_sig())) seeds.insert(*def);

  std::set<Sig> seen;
  std::vector<Sig> work(seeds.begin(), seeds.end());
  while (!work.empty()) {
    Sig cur = work.back();
    work.pop_back();
    if (!seen.insert(cur).second) continue;
    auto it = graph.out.find(cur);
    if (it == graph.out.end()) continue;
    for (const auto& next : it->second) work.push_back(next);
  }

  static const std::set<std::string> pref_names = {"getString", "getInt", "putString", "putInt"};
  FoldCache folds(p);
  std::set<PreferenceKey> keys;
  for (const auto& sig : seen) {
    const ClassDef* cls = p.find_class(sig.cls);
    if (!cls || cls->is_external) continue;
    const MethodDef* m = cls->find_method(sig.name, sig.arity);
    if (!m) continue;
    for (int i = 0; i < static_cast<int>(m->body.size()); ++i) {
      const Instr& in = m->body[i];
      if (in.op != Op::Invoke) continue;
      auto def = p.def_sig(in.callee);
      if (!def || !pref_names.count(def->name)) continue;
      if (def->cls != "SharedPreferences" && def->cls != "SharedPreferencesEditor") continue;
      PreferenceKey k;
      auto resolved = folds.for_method(sig).at(i, in.args[1]);
      k.key = resolved ? *resolved : "<unresolved>";
      k.suspicious = resolved && is_suspicious_term(k.key, config.suspicious_keys);
      keys.insert(std::move(k));
    }
  }
  return {keys.begin(), keys.end()};
}

std::set<InterfaceMethod> flag_suspicious_interface_names(const std::set<InterfaceMethod>& methods,
                                                          const SourceSinkConfig& config) {
  std::set<std::string> terms = config.suspicious_keys;
  terms.insert(config.suspicious_methods.begin(), config.suspicious_methods.end());
  std::set<InterfaceMethod> out;
  for (const auto& im : methods)
    if (is_suspicious_term(im.name, terms)) out.insert(im);
  return out;
}

namespace {

struct BackwardCursor {
  Sig method;
  int index;
  std::string local;
  std::vector<Site> context;  // remaining outer frames
};

const MethodDef* method_of(const Program& p, const Sig& sig) {
  const ClassDef* cls = p.find_class(sig.cls);
  return cls ? cls->find_method(sig.name, sig.arity) : nullptr;
}

}  // namespace

IntentFinding resolve_intent_action(const Program& p, const Flow& flow, const CallGraph& graph,
                                    FoldCache& folds) {
  if (flow.sink_label != "start-activity")
    throw AirError("intent resolution applies to start-activity flows only");

  IntentFinding finding;
  finding.flow = flow;

  // Consistency: the interface method that triggered the flow has to be
  // reachable from a generated attacker method.
  if (flow.attribution) {
    std::set<Sig> attacker_entries;
    for (const auto& e : graph.entries)
      if (e.name == "attacker" && is_generated_class(e.cls)) attacker_entries.insert(e);
    if (auto def = p.def_sig(*flow.attribution))
      finding.stack_consistent = reachable(graph, attacker_entries, *def);
  }

  const MethodDef* sink_method = method_of(p, flow.sink_site.method);
  if (!sink_method || flow.sink_site.index >= static_cast<int>(sink_method->body.size()))
    return finding;
  const Instr& sink_instr = sink_method->body[flow.sink_site.index];
  if (sink_instr.op != Op::Invoke || sink_instr.callee.name != "startActivity") return finding;

  // Backward dependency walk to the Intent construction, following copies
  // inside a method and parameter bindings across the recorded call string.
  BackwardCursor cur{flow.sink_site.method, flow.sink_site.index, sink_instr.args[1],
                     flow.context};
  const MethodDef* m = sink_method;
  std::optional<Site> ctor_site;
  int guard = 0;
  while (++guard < 64) {
    bool found_def = false;
    for (int i = cur.index - 1; i >= 0; --i) {
      const Instr& in = m->body[i];
      if ((in.op == Op::Assign || in.op == Op::Cast) && in.dst == cur.local) {
        cur.local = in.src;
        cur.index = i;
        found_def = true;
        break;
      }
      if (in.op == Op::New && in.dst == cur.local) {
        if (in.type != "Intent") return finding;
        // The paired constructor call follows the allocation.
        for (int j = i + 1; j < static_cast<int>(m->body.size()); ++j) {
          const Instr& kc = m->body[j];
          if (kc.op == Op::Invoke && kc.call_kind == CallKind::Special &&
              kc.callee.cls == "Intent" && !kc.args.empty() && kc.args[0] == cur.local) {
            ctor_site = Site{cur.method, j};
            break;
          }
        }
        if (!ctor_site) return finding;
        found_def = true;
        break;
      }
      if ((in.op == Op::Get || in.op == Op::Invoke || in.op == Op::ConstString ||
           in.op == Op::ConstInt) &&
          in.dst == cur.local)
        return finding;  // heap load or opaque producer
    }
    if (ctor_site) break;
    if (found_def) continue;

    // The local is a parameter; step out through the call string.
    if (cur.context.empty()) return finding;
    auto entry = m->entry_locals();
    auto pit = std::find(entry.begin(), entry.end(), cur.local);
    if (pit == entry.end()) return finding;
    size_t param_index = static_cast<size_t>(pit - entry.begin());
    Site caller_site = cur.context.back();
    cur.context.pop_back();
    const MethodDef* caller = method_of(p, caller_site.method);
    if (!caller || caller_site.index >= static_cast<int>(caller->body.size())) return finding;
    const Instr& call = caller->body[caller_site.index];
    if (call.op != Op::Invoke || param_index >= call.args.size()) return finding;
    cur.method = caller_site.method;
    cur.index = caller_site.index;
    cur.local = call.args[param_index];
    m = caller;
  }
  if (!ctor_site) return finding;
  finding.constructor_site = ctor_site;

  const MethodDef* ctor_method = method_of(p, ctor_site->method);
  const Instr& ctor = ctor_method->body[ctor_site->index];
  const StringConstMap& fold = folds.for_method(ctor_site->method);

  // Candidate action values: the constructor argument plus every setAction
  // on the same object. One unresolved or conflicting candidate means the
  // action stays unknown.
  std::vector<std::optional<std::string>> candidates;
  if (ctor.callee.arity == 2) candidates.push_back(fold.at(ctor_site->index, ctor.args[1]));
  std::string obj = ctor.args[0];
  for (int j = ctor_site->index + 1; j < static_cast<int>(ctor_method->body.size()); ++j) {
    const Instr& in = ctor_method->body[j];
    if (in.op != Op::Invoke) {
      if (in.dst == obj && in.op != Op::Return) break;  // object redefined
      continue;
    }
    auto def = p.def_sig(in.callee);
    if (def && def->cls == "Intent" && def->name == "setAction" && in.args[0] == obj) {
      candidates.push_back(fold.at(j, in.args[1]));
      if (!finding.set_action_site) finding.set_action_site = Site{ctor_site->method, j};
    }
  }
  if (!candidates.empty()) {
    bool all_known = true;
    for (const auto& c : candidates) all_known = all_known && c.has_value();
    if (all_known) {
      bool agree = true;
      for (const auto& c : candidates) agree = agree && (*c == *candidates.front());
      if (agree) finding.action = *candidates.front();
    }
  }

  // Store-page evidence for app-launching intents with unresolved actions.
  for (const auto& in : ctor_method->body) {
    if (in.op == Op::ConstString && in.str_val.rfind("market://", 0) == 0)
      finding.store_page = true;
  }
  return finding;
}

}  // namespace bv
