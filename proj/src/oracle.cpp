#include <algorithm>

#include "babelview/oracle.hpp"

namespace bv {

OracleOptions::OracleOptions() : config(default_config()) {}

namespace {

struct OValue {
  enum Kind { Null, Int, Str, Obj } kind = Null;
  long long i = 0;
  std::string s;
  int obj = -1;
  std::set<std::string> tags;

  static OValue of_int(long long v) { return {Int, v, "", -1, {}}; }
  static OValue of_str(std::string v) { return {Str, 0, std::move(v), -1, {}}; }
  static OValue of_obj(int ref) { return {Obj, 0, "", ref, {}}; }
};

struct OObject {
  std::string cls;
  std::map<std::string, OValue> fields;
  std::set<std::string> obj_tags;  // taint on the object as a whole

  // stub model state
  std::map<std::string, OValue> kv;  // preference editors and intent extras
  std::string text;                  // StringBuilder content
  std::set<std::string> text_tags;
  bool has_action = false;
  std::string action;
  std::set<std::string> action_tags;
  std::vector<int> registered;  // interface objects added to a Webview
  std::string prefs_name;
};

struct Frame {
  Sig method;  // definition signature for internal frames
  const MethodDef* def = nullptr;
  std::map<std::string, OValue> locals;
  int pc = 0;
  std::string ret_local;  // local in the parent frame receiving the result

  bool injector = false;
  int inj_pos = 0;
  int inj_webview = -1;
};

struct VM {
  std::vector<OObject> heap;
  std::map<std::string, std::map<std::string, OValue>> prefs_world;
  std::vector<Frame> stack;
  size_t entry_index = 0;
  bool injecting = false;
};

class Interp {
 public:
  Interp(const Program& p, const std::vector<Sig>& seq, const OracleOptions& opts)
      : p_(p), seq_(seq), opts_(opts), budget_(opts.max_steps) {
    trace_.sequence = seq;
  }

  OracleTrace run() {
    VM init;
    if (!setup_next_entry(init)) return trace_;
    pending_.push_back(std::move(init));
    while (!pending_.empty()) {
      if (budget_ <= 0) {
        trace_.partial = true;
        break;
      }
      VM vm = std::move(pending_.back());
      pending_.pop_back();
      run_vm(vm);
    }
    trace_.steps_used = opts_.max_steps - budget_;
    return trace_;
  }

 private:
  // Executes one VM until it forks, finishes, or dies on a runtime error.
  void run_vm(VM& vm) {
    while (budget_ > 0) {
      if (vm.stack.empty()) {
        if (!setup_next_entry(vm)) return;  // all entries done
        continue;
      }
      --budget_;
      Frame& frame = vm.stack.back();
      if (frame.injector) {
        if (!step_injector(vm)) return;
        continue;
      }
      const auto& body = frame.def->body;
      if (frame.pc >= static_cast<int>(body.size())) {
        pop_frame(vm, OValue{});  // implicit void return
        continue;
      }
      const Instr& in = body[frame.pc];
      if (in.op == Op::IfNondet) {
        VM taken = vm;
        taken.stack.back().pc = label_of(*frame.def, in.label);
        pending_.push_back(std::move(taken));
        frame.pc++;
        continue;
      }
      if (!step(vm, in)) return;
    }
    trace_.partial = true;
  }

  static int label_of(const MethodDef& m, const std::string& label) {
    for (int i = 0; i < static_cast<int>(m.body.size()); ++i)
      if (m.body[i].op == Op::Label && m.body[i].label == label) return i;
    return static_cast<int>(m.body.size());
  }

  bool setup_next_entry(VM& vm) {
    const auto& entries = p_.manifest.entry_points;
    while (vm.entry_index < entries.size()) {
      Sig e = entries[vm.entry_index++];
      auto def = p_.def_sig(e);
      if (!def) continue;
      const ClassDef* cls = p_.find_class(def->cls);
      const MethodDef* m = cls->find_method(def->name, def->arity);
      if (!m || cls->is_external) continue;

      Frame frame;
      frame.method = *def;
      frame.def = m;
      if (!m->is_static) {
        int recv = alloc(vm, e.cls);
        frame.locals["this"] = OValue::of_obj(recv);
      }
      for (const auto& prm : m->params) frame.locals[prm.name] = default_value(vm, prm.type);
      vm.stack.push_back(std::move(frame));

      // Run the no-argument constructor first when the class has one.
      if (!m->is_static && p_.resolve_method(e.cls, "<init>", 1)) {
        Instr ctor_call;
        ctor_call.op = Op::Invoke;
        ctor_call.call_kind = CallKind::Special;
        ctor_call.callee = Sig{e.cls, "<init>", 1};
        ctor_call.args = {"this"};
        OValue recv = vm.stack.back().locals["this"];
        invoke_on(vm, ctor_call, {recv}, Sig{e.cls, "<entry>", 0});
      }
      return true;
    }
    return false;
  }

  int alloc(VM& vm, const std::string& cls) {
    vm.heap.push_back(OObject{});
    vm.heap.back().cls = cls;
    return static_cast<int>(vm.heap.size()) - 1;
  }

  OValue default_value(VM& vm, const std::string& type) {
    if (type == "int") return OValue::of_int(0);
    if (type == "string") return OValue::of_str("");
    return OValue::of_obj(alloc(vm, type));
  }

  void deep_tags_into(const VM& vm, const OValue& v, std::set<std::string>& out,
                      std::set<int>& seen) const {
    out.insert(v.tags.begin(), v.tags.end());
    if (v.kind != OValue::Obj || v.obj < 0) return;
    if (!seen.insert(v.obj).second) return;
    const OObject& o = vm.heap[v.obj];
    out.insert(o.obj_tags.begin(), o.obj_tags.end());
    out.insert(o.text_tags.begin(), o.text_tags.end());
    out.insert(o.action_tags.begin(), o.action_tags.end());
    for (const auto& [f, fv] : o.fields) deep_tags_into(vm, fv, out, seen);
    for (const auto& [k, kv] : o.kv) deep_tags_into(vm, kv, out, seen);
  }

  std::set<std::string> deep_tags(const VM& vm, const OValue& v) const {
    std::set<std::string> out;
    std::set<int> seen;
    deep_tags_into(vm, v, out, seen);
    return out;
  }

  void record_leaks(const VM& vm, const OValue& v, const std::string& sink_label) {
    for (const auto& tag : deep_tags(vm, v)) trace_.leaks.insert({tag, sink_label});
  }

  // Returns false when the current VM should be abandoned (runtime error).
  bool step(VM& vm, const Instr& in) {
    Frame& frame = vm.stack.back();
    auto local = [&](const std::string& name) -> OValue& { return frame.locals[name]; };
    switch (in.op) {
      case Op::ConstString:
        local(in.dst) = OValue::of_str(in.str_val);
        break;
      case Op::ConstInt:
        local(in.dst) = OValue::of_int(in.int_val);
        break;
      case Op::Assign:
      case Op::Cast:  // casts are type annotations, values pass through
        local(in.dst) = local(in.src);
        break;
      case Op::New:
        local(in.dst) = OValue::of_obj(alloc(vm, in.type));
        break;
      case Op::Get: {
        OValue recv = local(in.recv);
        if (recv.kind != OValue::Obj) return false;
        auto it = vm.heap[recv.obj].fields.find(in.field);
        local(in.dst) = it == vm.heap[recv.obj].fields.end() ? OValue{} : it->second;
        break;
      }
      case Op::Put: {
        OValue recv = local(in.recv);
        if (recv.kind != OValue::Obj) return false;
        vm.heap[recv.obj].fields[in.field] = local(in.src);
        break;
      }
      case Op::Return: {
        OValue result = in.dst.empty() ? OValue{} : local(in.dst);
        pop_frame(vm, result);
        return true;
      }
      case Op::Goto:
        frame.pc = label_of(*frame.def, in.label);
        return true;
      case Op::Label:
        break;
      case Op::Invoke: {
        std::vector<OValue> args;
        args.reserve(in.args.size());
        for (const auto& a : in.args) args.push_back(local(a));
        frame.pc++;
        return invoke_on(vm, in, args, frame.method);
      }
      case Op::IfNondet:
        break;  // handled by the caller
    }
    frame.pc++;
    return true;
  }

  void pop_frame(VM& vm, const OValue& result) {
    std::string ret_local = vm.stack.back().ret_local;
    bool injector = vm.stack.back().injector;
    vm.stack.pop_back();
    if (injector) vm.injecting = false;
    if (!ret_local.empty() && !vm.stack.empty())
      vm.stack.back().locals[ret_local] = result;
  }

  // Dispatches a call; pushes a frame for app code or applies the platform
  // model for external targets.
  bool invoke_on(VM& vm, const Instr& in, const std::vector<OValue>& args, const Sig& caller) {
    Sig resolved = in.callee;
    if (in.call_kind == CallKind::Virtual) {
      if (args.empty() || args[0].kind != OValue::Obj) return false;
      resolved.cls = vm.heap[args[0].obj].cls;
    }
    std::string defined_in;
    const MethodDef* target =
        p_.resolve_method(resolved.cls, resolved.name, resolved.arity, &defined_in);
    if (!target) return false;
    Sig def{defined_in, resolved.name, resolved.arity};
    trace_.call_edges.insert({caller, def});

    // Attacker stubs on generated classes are opaque to the interpreter.
    if (is_generated_class(def.cls) && def.name == "taintSource") {
      if (!in.dst.empty()) {
        OValue v = OValue::of_str("attacker");
        v.tags.insert(kAttackerSourceLabel);
        vm.stack.back().locals[in.dst] = v;
      }
      return true;
    }
    if (is_generated_class(def.cls) && def.name == "leak") {
      if (args.size() > 1) record_leaks(vm, args[1], kExfiltrationSinkLabel);
      return true;
    }

    if (p_.find_class(def.cls)->is_external) {
      OValue result = external_call(vm, def, *target, in, args);
      if (!in.dst.empty()) vm.stack.back().locals[in.dst] = result;
      return true;
    }

    Frame frame;
    frame.method = def;
    frame.def = target;
    frame.ret_local = in.dst;
    auto params = target->entry_locals();
    for (size_t i = 0; i < params.size() && i < args.size(); ++i)
      frame.locals[params[i]] = args[i];
    vm.stack.push_back(std::move(frame));
    return true;
  }

  // Looks ahead in the calling frame for a cast of the result, so layout
  // lookups can produce an instance of the class the app expects. The pc
  // already points past the call when this runs.
  std::string peeked_cast_class(const VM& vm, const Instr& in,
                                const std::string& fallback) const {
    if (in.dst.empty()) return fallback;
    const Frame& frame = vm.stack.back();
    const auto& body = frame.def->body;
    for (int j = frame.pc; j < static_cast<int>(body.size()); ++j) {
      const Instr& next = body[j];
      if (next.op == Op::Cast && next.src == in.dst) return next.type;
      if (next.op == Op::Label || next.op == Op::Goto || next.op == Op::IfNondet ||
          next.op == Op::Return)
        break;
      if (next.dst == in.dst) break;
    }
    return fallback;
  }

  std::string string_of(const OValue& v) const {
    switch (v.kind) {
      case OValue::Str: return v.s;
      case OValue::Int: return std::to_string(v.i);
      case OValue::Obj: return "<obj>";
      case OValue::Null: return "null";
    }
    return "";
  }

  OValue external_call(VM& vm, const Sig& def, const MethodDef& target, const Instr& in,
                       const std::vector<OValue>& args) {
    // Sinks observe the argument values before any mutation.
    for (const SinkSpec* sink : opts_.config.sinks_for(def)) {
      int idx = sink->observed_index();
      if (idx >= 0 && idx < static_cast<int>(args.size()))
        record_leaks(vm, args[idx], sink->label);
    }

    bool modeled = true;
    OValue result;
    OObject* recv = nullptr;
    if (!target.is_static && !args.empty() && args[0].kind == OValue::Obj)
      recv = &vm.heap[args[0].obj];

    if (def.cls == "WebView" && def.name == "addJavascriptInterface") {
      if (recv && args[1].kind == OValue::Obj) {
        recv->registered.push_back(args[1].obj);
        trace_.registrations.insert({recv->cls, vm.heap[args[1].obj].cls});
      }
    } else if (def.cls == "WebView" &&
               (def.name == "loadUrl" || def.name == "postUrl" || def.name == "loadData" ||
                def.name == "loadDataWithBaseURL")) {
      if (recv && !vm.injecting && !seq_.empty() && !recv->registered.empty()) {
        Frame inj;
        inj.injector = true;
        inj.inj_webview = args[0].obj;
        vm.stack.push_back(std::move(inj));
        vm.injecting = true;
      }
    } else if (def.cls == "Activity" && def.name == "findViewById") {
      result = OValue::of_obj(alloc(vm, peeked_cast_class(vm, in, "View")));
    } else if (def.cls == "Activity" && def.name == "getSystemService") {
      result = OValue::of_obj(alloc(vm, peeked_cast_class(vm, in, "Object")));
    } else if (def.cls == "Activity" && def.name == "getSharedPreferences") {
      int ref = alloc(vm, "SharedPreferences");
      vm.heap[ref].prefs_name = string_of(args[1]);
      result = OValue::of_obj(ref);
    } else if (def.cls == "SharedPreferences" && def.name == "edit") {
      int ref = alloc(vm, "SharedPreferencesEditor");
      vm.heap[ref].prefs_name = recv ? recv->prefs_name : "";
      result = OValue::of_obj(ref);
    } else if (def.cls == "SharedPreferences" &&
               (def.name == "getString" || def.name == "getInt")) {
      const auto& store = vm.prefs_world[recv ? recv->prefs_name : ""];
      auto it = store.find(string_of(args[1]));
      result = it != store.end() ? it->second : args[2];
    } else if (def.cls == "SharedPreferencesEditor" &&
               (def.name == "putString" || def.name == "putInt")) {
      vm.prefs_world[recv ? recv->prefs_name : ""][string_of(args[1])] = args[2];
      result = args[0];
    } else if (def.cls == "StringBuilder") {
      if (def.name == "append" && recv) {
        recv->text += string_of(args[1]);
        auto tags = deep_tags(vm, args[1]);
        recv->text_tags.insert(tags.begin(), tags.end());
        result = args[0];
      } else if (def.name == "toString" && recv) {
        result = OValue::of_str(recv->text);
        result.tags = recv->text_tags;
      } else if (def.name == "setLength" && recv) {
        recv->text.clear();
        recv->text_tags.clear();
      }
    } else if (def.cls == "Intent") {
      if (def.name == "<init>" && def.arity == 2 && recv) {
        recv->has_action = true;
        recv->action = string_of(args[1]);
        recv->action_tags = deep_tags(vm, args[1]);
      } else if (def.name == "setAction" && recv) {
        recv->has_action = true;
        recv->action = string_of(args[1]);
        recv->action_tags = deep_tags(vm, args[1]);
      } else if (def.name == "putExtra" && recv) {
        recv->kv[string_of(args[1])] = args[2];
        result = args[0];
      } else if (def.name == "getStringExtra" && recv) {
        auto it = recv->kv.find(string_of(args[1]));
        result = it != recv->kv.end() ? it->second : OValue::of_str("");
      } else if (def.name == "setClassName" && recv) {
        OValue combined = OValue::of_str(string_of(args[1]) + "/" + string_of(args[2]));
        auto t1 = deep_tags(vm, args[1]);
        auto t2 = deep_tags(vm, args[2]);
        combined.tags.insert(t1.begin(), t1.end());
        combined.tags.insert(t2.begin(), t2.end());
        recv->kv["<class>"] = combined;
        result = args[0];
      }
    } else if (def.cls == "TelephonyManager" && def.name == "getDeviceId") {
      result = OValue::of_str("490154203237518");
    } else if (def.cls == "TelephonyManager" && def.name == "getLine1Number") {
      result = OValue::of_str("+15551234567");
    } else if (def.cls == "LocationManager" && def.name == "getLastKnownLocation") {
      result = OValue::of_str("51.4254,-0.5636");
    } else if (def.cls == "ConnectivityManager" && def.name == "getActiveNetworkInfo") {
      result = OValue::of_str("WIFI");
    } else if (def.cls == "SQLiteDatabase" && (def.name == "rawQuery" || def.name == "query")) {
      result = OValue::of_str("row:" + string_of(args[1]));
    } else if (def.cls == "FileInputStream" && def.name == "read") {
      result = OValue::of_str("filedata");
    } else if (def.cls == "SmsManager" && def.name == "getDefault") {
      result = OValue::of_obj(alloc(vm, "SmsManager"));
    } else {
      modeled = false;
    }

    if (!modeled) {
      // Generic wrapper semantics.
      WrapRule rule = opts_.config.wrapper_for(def).value_or(WrapRule::Ignore);
      if (rule == WrapRule::Propagate && recv) {
        for (size_t i = 1; i < args.size(); ++i) {
          auto tags = deep_tags(vm, args[i]);
          recv->obj_tags.insert(tags.begin(), tags.end());
        }
        if (target.ret != "void") {
          result = default_value(vm, target.ret);
          result.tags = recv->obj_tags;
        }
      } else if (rule == WrapRule::Clear && recv) {
        recv->obj_tags.clear();
        recv->text_tags.clear();
        recv->action_tags.clear();
        recv->fields.clear();
        recv->kv.clear();
      }
      if (result.kind == OValue::Null && target.ret != "void")
        result = default_value(vm, target.ret);
    } else if (result.kind == OValue::Null && target.ret != "void") {
      result = default_value(vm, target.ret);
    }

    // Configured sources tag their output.
    for (const SourceSpec* src : opts_.config.sources_for(def)) {
      if (src->taints == TaintTarget::Return) {
        result.tags.insert(src->label);
      } else {
        int idx = src->taints == TaintTarget::Receiver ? 0 : src->arg;
        if (idx >= 0 && idx < static_cast<int>(args.size()) && args[idx].kind == OValue::Obj)
          vm.heap[args[idx].obj].obj_tags.insert(src->label);
      }
    }
    return result;
  }

  // Runs one step of the attacker sequence against the Webview's
  // registered interface objects.
  bool step_injector(VM& vm) {
    Frame& frame = vm.stack.back();

    auto rit = frame.locals.find("r");
    if (rit != frame.locals.end()) {
      record_leaks(vm, rit->second, kExfiltrationSinkLabel);
      frame.locals.erase(rit);
    }
    if (frame.inj_pos >= static_cast<int>(seq_.size())) {
      pop_frame(vm, OValue{});
      return true;
    }
    Sig want = seq_[frame.inj_pos++];

    const OObject& wv = vm.heap[frame.inj_webview];
    int chosen = -1;
    for (int ref : wv.registered) {
      const std::string& cls = vm.heap[ref].cls;
      if (!p_.find_class(cls)) continue;
      if (!is_subtype(p_, cls, want.cls)) continue;
      if (!p_.resolve_method(cls, want.name, want.arity)) continue;
      chosen = ref;
      break;
    }
    if (chosen < 0) return true;  // method not available on this Webview

    Instr call;
    call.op = Op::Invoke;
    call.call_kind = CallKind::Virtual;
    call.callee = want;
    call.dst = "r";
    const MethodDef* target = p_.resolve_method(vm.heap[chosen].cls, want.name, want.arity);
    std::vector<OValue> args = {OValue::of_obj(chosen)};
    for (int i = 1; i < want.arity; ++i) {
      OValue v = OValue::of_str("attacker");
      v.tags.insert(kAttackerSourceLabel);
      args.push_back(v);
    }
    if (target->ret == "void") call.dst.clear();
    return invoke_on(vm, call, args, Sig{"<attacker>", "inject", 0});
  }

  const Program& p_;
  std::vector<Sig> seq_;
  OracleOptions opts_;
  OracleTrace trace_;
  std::vector<VM> pending_;
  long long budget_ = 0;
};

}  // namespace

OracleTrace interpret(const Program& p, const std::vector<Sig>& sequence,
                      const OracleOptions& options) {
  return Interp(p, sequence, options).run();
}

std::vector<std::vector<Sig>> enumerate_sequences(const std::vector<Sig>& methods,
                                                  int max_length) {
  std::vector<Sig> sorted = methods;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::vector<Sig>> out = {{}};
  std::vector<std::vector<Sig>> current = {{}};
  for (int len = 1; len <= max_length; ++len) {
    std::vector<std::vector<Sig>> next;
    for (const auto& prefix : current) {
      for (const auto& m : sorted) {
        std::vector<Sig> seq = prefix;
        seq.push_back(m);
        next.push_back(seq);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    current = std::move(next);
  }
  return out;
}

}  // namespace bv
