#include <algorithm>
#include <chrono>
#include <deque>

#include "babelview/taint.hpp"

#include "babelview/callgraph.hpp"

// Worklist engine. Each (method, call string) pair owns a summary: the join
// of fact sets flowing into it from its call sites and the facts visible at
// its exits (returned value plus heap effects reachable from parameters).
// Methods re-run when their entry grows or a callee summary changes; the
// fact domain is finite (bounded chains, bounded contexts), so the fixpoint
// terminates. Processing order is deterministic throughout.

namespace bv {

namespace {

constexpr const char* kRetRoot = "\x01ret";

struct FactId {
  AccessPath ap;
  std::string label;
  Site origin;

  auto operator<=>(const FactId&) const = default;
};

using Witness = std::vector<Site>;

struct FactSet {
  std::map<FactId, Witness> facts;

  bool add(const FactId& id, const Witness& w) { return facts.emplace(id, w).second; }

  bool join(const FactSet& o) {
    bool grew = false;
    for (const auto& [id, w] : o.facts) grew |= add(id, w);
    return grew;
  }

  void kill_root(const std::string& base) {
    for (auto it = facts.begin(); it != facts.end();)
      it = it->first.ap.base == base ? facts.erase(it) : std::next(it);
  }

};

using Context = std::vector<int>;
using MethodKey = std::pair<Sig, Context>;

struct Summary {
  FactSet entry;
  FactSet exit;  // facts rooted at kRetRoot or at parameter locals
};

struct InternalMethod {
  const ClassDef* cls = nullptr;
  const MethodDef* def = nullptr;
  std::map<std::string, int> labels;
};

class Engine {
 public:
  Engine(const Program& p, const SourceSinkConfig& cfg, const TaintOptions& opts)
      : p_(p), cfg_(cfg), opts_(opts) {}

  TaintResult run() {
    cfg_.validate_against(p_);
    index_program();
    deadline_ = std::chrono::steady_clock::now() +
                std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                    std::chrono::duration<double>(opts_.timeout_secs));

    for (const auto& e : p_.manifest.entry_points) {
      if (auto def = p_.def_sig(e); def && methods_.count(*def)) enqueue({*def, {}});
    }

    while (!queue_.empty()) {
      if (timed_out()) break;
      MethodKey key = queue_.front();
      queue_.pop_front();
      queued_.erase(key);
      analyze(key);
    }

    TaintResult result;
    result.flows.assign(flows_.begin(), flows_.end());
    result.stats = stats_;
    result.stats.timed_out = stats_.timed_out || timed_out();
    return result;
  }

 private:
  bool timed_out() const { return std::chrono::steady_clock::now() >= deadline_; }

  void index_program() {
    for (const auto& [cname, cls] : p_.classes) {
      for (const auto& m : cls.methods) {
        Sig sig{cname, m.name, m.arity()};
        methods_[sig] = {&cls, &m, label_indices(m)};
        for (int i = 0; i < static_cast<int>(m.body.size()); ++i) {
          if (m.body[i].op == Op::Invoke) {
            int id = static_cast<int>(sites_.size());
            Site site{sig, i};
            sites_.push_back(site);
            site_ids_[site] = id;
          }
        }
      }
    }
  }

  void enqueue(const MethodKey& key) {
    summaries_[key];  // ensure the summary exists
    if (queued_.insert(key).second) queue_.push_back(key);
  }

  Context push_context(const Context& ctx, int site_id) const {
    Context out = ctx;
    out.push_back(site_id);
    while (static_cast<int>(out.size()) > opts_.call_depth) out.erase(out.begin());
    return out;
  }

  static std::vector<FactId> rooted_at(const FactSet& s, const std::string& base) {
    std::vector<FactId> out;
    for (const auto& [id, w] : s.facts)
      if (id.ap.base == base) out.push_back(id);
    return out;
  }

  FactId rebase(const FactId& f, const std::string& base) const {
    FactId out = f;
    out.ap.base = base;
    return out;
  }

  FactId truncate(FactId f) const {
    if (static_cast<int>(f.ap.chain.size()) > opts_.max_access_path) {
      f.ap.chain.resize(opts_.max_access_path);
      f.ap.any_suffix = true;
    }
    return f;
  }

  Witness extend(const Witness& w, const Site& site) const {
    Witness out = w;
    if (out.empty() || !(out.back() == site)) out.push_back(site);
    return out;
  }

  Site normalize_site(const Site& site, const std::vector<Site>& ctx) const {
    if (!is_generated_class(site.method.cls)) return site;
    for (auto it = ctx.rbegin(); it != ctx.rend(); ++it)
      if (!is_generated_class(it->method.cls)) return *it;
    return site;
  }

  std::optional<Sig> derive_attribution(const Witness& w) const {
    for (auto it = w.rbegin(); it != w.rend(); ++it) {
      if (!(it->method.name == "attacker" && is_generated_class(it->method.cls))) continue;
      auto mit = methods_.find(it->method);
      if (mit == methods_.end()) continue;
      const auto& body = mit->second.def->body;
      if (it->index < 0 || it->index >= static_cast<int>(body.size())) continue;
      const Instr& in = body[it->index];
      if (in.op != Op::Invoke) continue;
      if (in.callee.name == "leak" || in.callee.name == "taintSource") continue;
      return in.callee;
    }
    return std::nullopt;
  }

  std::vector<Site> context_sites(const Context& ctx) const {
    std::vector<Site> out;
    for (int id : ctx) out.push_back(sites_[id]);
    return out;
  }

  void record_flow(const std::string& sink_label, const Site& raw_site, const FactId& fact,
                   const Witness& witness, const Context& ctx) {
    Flow f;
    f.source_label = fact.label;
    f.source_site = fact.origin;
    f.sink_label = sink_label;
    f.context = context_sites(ctx);
    f.sink_site = normalize_site(raw_site, f.context);
    f.witness = extend(witness, raw_site);
    f.attribution = derive_attribution(f.witness);
    flows_.insert(std::move(f));
  }

  // One call target's contribution to the post-state, starting from the
  // pre-state with the result local already killed.
  void apply_external(const Sig& def, const MethodDef& target, const Instr& in, const Site& site,
                      const FactSet& pre, FactSet& out, const Context& ctx, bool sole_target) {
    for (const SinkSpec* sink : cfg_.sinks_for(def)) {
      int idx = sink->observed_index();
      if (idx < 0 || idx >= static_cast<int>(in.args.size())) continue;
      for (const auto& [id, w] : pre.facts)
        if (id.ap.base == in.args[idx]) record_flow(sink->label, site, id, w, ctx);
    }

    WrapRule rule = cfg_.wrapper_for(def).value_or(WrapRule::Ignore);
    int recv = target.is_static ? -1 : 0;
    if (rule == WrapRule::Propagate) {
      // Tainted arguments taint the receiver object and the result; a
      // tainted receiver taints the result.
      for (size_t i = recv < 0 ? 0 : 1; i < in.args.size(); ++i) {
        for (const auto& [id, w] : pre.facts) {
          if (id.ap.base != in.args[i]) continue;
          if (recv >= 0) {
            FactId obj{AccessPath{in.args[recv], {}, true}, id.label, id.origin};
            out.add(obj, extend(w, site));
          }
          if (!in.dst.empty()) {
            FactId res{AccessPath{in.dst, {}, true}, id.label, id.origin};
            out.add(res, extend(w, site));
          }
        }
      }
      if (recv >= 0 && !in.dst.empty()) {
        for (const auto& [id, w] : pre.facts) {
          if (id.ap.base != in.args[recv]) continue;
          FactId res = truncate(rebase(id, in.dst));
          out.add(res, extend(w, site));
        }
      }
    } else if (rule == WrapRule::Clear) {
      // A strong clear is only sound when this is the only dispatch target.
      if (recv >= 0 && sole_target) out.kill_root(in.args[recv]);
    }
    // Ignore: result stays killed, everything else unchanged.

    for (const SourceSpec* src : cfg_.sources_for(def)) {
      Witness w = {site};
      if (src->taints == TaintTarget::Return) {
        if (!in.dst.empty())
          out.add(FactId{AccessPath{in.dst, {}, false}, src->label, site}, w);
      } else {
        int idx = src->taints == TaintTarget::Receiver ? 0 : src->arg;
        if (idx >= 0 && idx < static_cast<int>(in.args.size()))
          out.add(FactId{AccessPath{in.args[idx], {}, true}, src->label, site}, w);
      }
    }
  }

  void apply_internal(const Sig& def, const Instr& in, const Site& site, const FactSet& pre,
                      FactSet& out, const MethodKey& caller_key) {
    const InternalMethod& callee = methods_.at(def);
    std::vector<std::string> params = callee.def->entry_locals();
    MethodKey callee_key{def, push_context(caller_key.second, site_ids_.at(site))};

    FactSet mapped;
    for (size_t i = 0; i < in.args.size() && i < params.size(); ++i) {
      for (const auto& [id, w] : pre.facts) {
        if (id.ap.base != in.args[i]) continue;
        mapped.add(rebase(id, params[i]), extend(w, site));
      }
    }

    Summary& sum = summaries_[callee_key];
    dependents_[callee_key].insert(caller_key);
    if (sum.entry.join(mapped)) enqueue(callee_key);

    for (const auto& [id, w] : sum.exit.facts) {
      if (id.ap.base == kRetRoot) {
        if (!in.dst.empty()) out.add(truncate(rebase(id, in.dst)), extend(w, site));
        continue;
      }
      auto pit = std::find(params.begin(), params.end(), id.ap.base);
      if (pit == params.end()) continue;
      size_t arg_index = static_cast<size_t>(pit - params.begin());
      if (arg_index >= in.args.size()) continue;
      out.add(truncate(rebase(id, in.args[arg_index])), extend(w, site));
    }
  }

  FactSet transfer(const MethodKey& key, const Site& site, const Instr& in, const FactSet& pre,
                   FactSet& exit_acc) {
    ++stats_.instruction_visits;
    FactSet out = pre;
    switch (in.op) {
      case Op::ConstString:
      case Op::ConstInt:
      case Op::New:
        out.kill_root(in.dst);
        break;
      case Op::Assign:
      case Op::Cast: {
        out.kill_root(in.dst);
        for (const auto& [id, w] : pre.facts)
          if (id.ap.base == in.src && in.src != in.dst) out.add(rebase(id, in.dst), w);
        break;
      }
      case Op::Get: {
        out.kill_root(in.dst);
        for (const auto& [id, w] : pre.facts) {
          if (id.ap.base != in.recv) continue;
          if (id.ap.chain.empty()) {
            if (id.ap.any_suffix)
              out.add(FactId{AccessPath{in.dst, {}, true}, id.label, id.origin}, extend(w, site));
            continue;
          }
          if (id.ap.chain.front() != in.field) continue;
          FactId derived = id;
          derived.ap.base = in.dst;
          derived.ap.chain.erase(derived.ap.chain.begin());
          out.add(derived, extend(w, site));
        }
        break;
      }
      case Op::Put: {
        for (const auto& [id, w] : pre.facts) {
          if (id.ap.base != in.src) continue;
          FactId stored = id;
          stored.ap.base = in.recv;
          stored.ap.chain.insert(stored.ap.chain.begin(), in.field);
          out.add(truncate(stored), extend(w, site));
        }
        break;
      }
      case Op::Invoke: {
        if (!in.dst.empty()) out.kill_root(in.dst);

        // Attacker-model stubs are recognized by name on generated classes.
        if (is_generated_class(in.callee.cls) && in.callee.name == "taintSource") {
          if (!in.dst.empty())
            out.add(FactId{AccessPath{in.dst, {}, true}, kAttackerSourceLabel, site}, {site});
          break;
        }
        if (is_generated_class(in.callee.cls) && in.callee.name == "leak") {
          if (in.args.size() > 1) {
            for (const auto& [id, w] : pre.facts)
              if (id.ap.base == in.args[1])
                record_flow(kExfiltrationSinkLabel, site, id, w, key.second);
          }
          break;
        }
        if (!opts_.model_attacker && is_generated_class(in.callee.cls) &&
            in.callee.name == "attacker")
          break;

        std::vector<Sig> targets = call_targets(p_, in);
        for (const Sig& def : targets) {
          if (!opts_.model_attacker && is_generated_class(def.cls) && def.name == "attacker")
            continue;
          if (methods_.count(def)) {
            apply_internal(def, in, site, pre, out, key);
          } else {
            const MethodDef* target = p_.resolve_method(def.cls, def.name, def.arity);
            apply_external(def, *target, in, site, pre, out, key.second, targets.size() == 1);
          }
        }
        break;
      }
      case Op::Return: {
        if (!in.dst.empty())
          for (const auto& [id, w] : pre.facts)
            if (id.ap.base == in.dst) exit_acc.add(rebase(id, kRetRoot), w);
        collect_param_exits(key, pre, exit_acc);
        break;
      }
      default:
        break;
    }
    return out;
  }

  void collect_param_exits(const MethodKey& key, const FactSet& state, FactSet& exit_acc) {
    const InternalMethod& im = methods_.at(key.first);
    for (const auto& prm : im.def->entry_locals()) {
      for (const auto& [id, w] : state.facts) {
        if (id.ap.base != prm) continue;
        if (id.ap.chain.empty() && !id.ap.any_suffix) continue;  // value copies stay local
        exit_acc.add(id, w);
      }
    }
  }

  void analyze(const MethodKey& key) {
    auto mit = methods_.find(key.first);
    if (mit == methods_.end()) return;
    const InternalMethod& im = mit->second;
    const MethodDef& m = *im.def;
    ++stats_.method_passes;

    int n = static_cast<int>(m.body.size());
    std::vector<std::optional<FactSet>> in_state(n + 1);
    in_state[0] = summaries_[key].entry;
    FactSet exit_acc;

    std::set<int> work = {0};
    long long local_guard = 0;
    while (!work.empty()) {
      if ((++local_guard & 0xff) == 0 && timed_out()) {
        stats_.timed_out = true;
        break;
      }
      int i = *work.begin();
      work.erase(work.begin());
      if (i >= n) continue;
      Site site{key.first, i};
      FactSet out = transfer(key, site, m.body[i], *in_state[i], exit_acc);
      for (int s : instr_successors(m, i, im.labels)) {
        if (!in_state[s]) {
          in_state[s] = out;
          work.insert(s);
        } else if (in_state[s]->join(out)) {
          work.insert(s);
        }
      }
    }
    if (in_state[n]) collect_param_exits(key, *in_state[n], exit_acc);

    Summary& sum = summaries_[key];
    if (sum.exit.join(exit_acc)) {
      auto dep = dependents_.find(key);
      if (dep != dependents_.end())
        for (const auto& caller : dep->second) enqueue(caller);
    }
  }

  const Program& p_;
  SourceSinkConfig cfg_;
  TaintOptions opts_;
  std::chrono::steady_clock::time_point deadline_;

  std::map<Site, int> site_ids_;
  std::vector<Site> sites_;
  std::map<Sig, InternalMethod> methods_;
  std::map<MethodKey, Summary> summaries_;
  std::map<MethodKey, std::set<MethodKey>> dependents_;
  std::deque<MethodKey> queue_;
  std::set<MethodKey> queued_;
  std::set<Flow> flows_;
  TaintStats stats_;
};

}  // namespace

TaintResult run_taint(const Program& p, const SourceSinkConfig& cfg, const TaintOptions& opts) {
  Engine engine(p, cfg, opts);
  return engine.run();
}

std::vector<Flow> flows_to_sink(const std::vector<Flow>& flows, const std::string& sink_label) {
  std::vector<Flow> out;
  for (const auto& f : flows)
    if (f.sink_label == sink_label) out.push_back(f);
  return out;
}

}  // namespace bv
