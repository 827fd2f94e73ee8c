#include <algorithm>

#include "babelview/air.hpp"

namespace bv {

namespace {

// Combined definite-assignment and static-type dataflow per method body.
// A local is present in the state iff it is assigned on every path to the
// program point; its TypeVal is the join over those paths.

using LocalState = std::map<std::string, TypeVal>;

TypeVal join_types(const Program& p, const TypeVal& a, const TypeVal& b) {
  if (a == b) return a;
  if (a.kind == TypeVal::Bottom) return b;
  if (b.kind == TypeVal::Bottom) return a;
  if (a.kind != b.kind || a.kind == TypeVal::Any) return {TypeVal::Any, ""};
  // both Obj: least common superclass
  std::set<std::string> ancestors;
  for (const auto& c : p.super_chain(a.cls)) ancestors.insert(c);
  for (const auto& c : p.super_chain(b.cls))
    if (ancestors.count(c)) return {TypeVal::Obj, c};
  return {TypeVal::Any, ""};
}

// Returns true if the state changed.
bool join_states(const Program& p, LocalState& dst, const LocalState& src) {
  bool changed = false;
  for (auto it = dst.begin(); it != dst.end();) {
    auto sit = src.find(it->first);
    if (sit == src.end()) {
      it = dst.erase(it);
      changed = true;
      continue;
    }
    TypeVal j = join_types(p, it->second, sit->second);
    if (!(j == it->second)) {
      it->second = j;
      changed = true;
    }
    ++it;
  }
  return changed;
}

TypeVal type_from_name(const std::string& t) {
  if (t == "int") return {TypeVal::Int, ""};
  if (t == "string") return {TypeVal::Str, ""};
  return {TypeVal::Obj, t};
}

struct BodyChecker {
  const Program& p;
  const ClassDef& cls;
  const MethodDef& m;
  bool strict;
  std::set<std::string> immutable;  // parameters and this
  std::map<std::string, int> labels;

  BodyChecker(const Program& prog, const ClassDef& c, const MethodDef& mm, bool strict_checks)
      : p(prog), cls(c), m(mm), strict(strict_checks) {
    for (const auto& l : m.entry_locals()) immutable.insert(l);
    labels = label_indices(m);
  }

  [[noreturn]] void fail(const std::string& msg, const Instr& in) const {
    throw AirError(msg, in.pos);
  }

  void require_defined(const LocalState& s, const std::string& local, const Instr& in) const {
    if (!s.count(local)) fail("local '" + local + "' may be used before assignment", in);
  }

  void require_class_type(const std::string& t, const Instr& in) const {
    if (is_value_type(t) || !p.find_class(t)) fail("unknown or non-class type '" + t + "'", in);
  }

  TypeVal field_access(const LocalState& s, const Instr& in) const {
    require_defined(s, in.recv, in);
    const TypeVal& rt = s.at(in.recv);
    if (rt.kind == TypeVal::Int || rt.kind == TypeVal::Str)
      fail("field access on a value-typed local '" + in.recv + "'", in);
    if (rt.kind == TypeVal::Obj) {
      for (const auto& cname : p.super_chain(rt.cls)) {
        if (const FieldDef* f = p.find_class(cname)->find_field(in.field))
          return type_from_name(f->type);
      }
      if (strict) fail("class '" + rt.cls + "' has no field '" + in.field + "'", in);
    }
    return {TypeVal::Any, ""};
  }

  const MethodDef* check_call(const LocalState& s, const Instr& in) const {
    for (const auto& a : in.args) require_defined(s, a, in);
    if (!p.find_class(in.callee.cls)) fail("unknown class in call: " + in.callee.str(), in);
    const MethodDef* target = p.resolve_method(in.callee.cls, in.callee.name, in.callee.arity);
    if (!target) fail("call to unresolved method " + in.callee.str(), in);
    if (in.call_kind == CallKind::Special) {
      if (!target->is_constructor()) fail("kcall target must be a constructor", in);
    } else if (in.call_kind == CallKind::Virtual) {
      if (target->is_static) fail("vcall to static method " + in.callee.str(), in);
      if (target->is_constructor()) fail("constructors require kcall or scall", in);
    }
    if (!target->is_static && in.args.empty()) fail("instance call without receiver", in);
    if (!in.dst.empty() && target->ret == "void")
      fail("result of void method " + in.callee.str() + " used", in);
    return target;
  }

  void check_def(const std::string& local, const Instr& in) const {
    if (immutable.count(local)) fail("parameter '" + local + "' reassigned", in);
  }

  // Transfer for one instruction; returns the post-state.
  LocalState transfer(LocalState s, const Instr& in) const {
    switch (in.op) {
      case Op::ConstString:
        check_def(in.dst, in);
        s[in.dst] = {TypeVal::Str, ""};
        break;
      case Op::ConstInt:
        check_def(in.dst, in);
        s[in.dst] = {TypeVal::Int, ""};
        break;
      case Op::Assign:
        require_defined(s, in.src, in);
        check_def(in.dst, in);
        s[in.dst] = s.at(in.src);
        break;
      case Op::New:
        require_class_type(in.type, in);
        check_def(in.dst, in);
        s[in.dst] = {TypeVal::Obj, in.type};
        break;
      case Op::Cast:
        require_class_type(in.type, in);
        require_defined(s, in.src, in);
        check_def(in.dst, in);
        s[in.dst] = {TypeVal::Obj, in.type};
        break;
      case Op::Get: {
        TypeVal t = field_access(s, in);
        check_def(in.dst, in);
        s[in.dst] = t;
        break;
      }
      case Op::Put:
        require_defined(s, in.src, in);
        field_access(s, in);
        break;
      case Op::Invoke: {
        const MethodDef* target = check_call(s, in);
        if (!in.dst.empty()) {
          check_def(in.dst, in);
          s[in.dst] = type_from_name(target->ret);
        }
        break;
      }
      case Op::Return: {
        if (m.ret == "void") {
          if (!in.dst.empty()) fail("void method returns a value", in);
        } else {
          if (in.dst.empty()) fail("non-void method returns nothing", in);
          require_defined(s, in.dst, in);
          check_return_type(s.at(in.dst), in);
        }
        break;
      }
      case Op::Goto:
      case Op::IfNondet:
        if (!labels.count(in.label)) fail("unknown label '" + in.label + "'", in);
        break;
      case Op::Label:
        break;
    }
    return s;
  }

  void check_return_type(const TypeVal& t, const Instr& in) const {
    if (t.kind == TypeVal::Any) return;
    if (m.ret == "int") {
      if (t.kind != TypeVal::Int) fail("return type mismatch, expected int", in);
    } else if (m.ret == "string") {
      if (t.kind != TypeVal::Str) fail("return type mismatch, expected string", in);
    } else {
      if (t.kind != TypeVal::Obj || !is_subtype(p, t.cls, m.ret))
        fail("return type mismatch, expected " + m.ret, in);
    }
  }

  std::vector<std::map<std::string, TypeVal>> run() {
    int n = static_cast<int>(m.body.size());
    std::vector<std::optional<LocalState>> in_state(n + 1);
    LocalState init;
    if (!m.is_static) init["this"] = {TypeVal::Obj, cls.name};
    for (const auto& prm : m.params) init[prm.name] = type_from_name(prm.type);
    in_state[0].emplace(std::move(init));

    // Branch targets are validated up front so transfer can rely on them.
    for (const auto& in : m.body)
      if ((in.op == Op::Goto || in.op == Op::IfNondet) && !labels.count(in.label))
        fail("unknown label '" + in.label + "'", in);

    std::set<int> work = {0};
    while (!work.empty()) {
      int i = *work.begin();
      work.erase(work.begin());
      if (i >= n) continue;
      LocalState out = transfer(*in_state[i], m.body[i]);
      for (int s : instr_successors(m, i, labels)) {
        if (!in_state[s]) {
          in_state[s].emplace(out);
          work.insert(s);
        } else if (join_states(p, *in_state[s], out)) {
          work.insert(s);
        }
      }
    }

    if (in_state[n] && m.ret != "void") {
      Instr marker;
      marker.pos = m.body.empty() ? m.pos : m.body.back().pos;
      fail("non-void method can fall off the end without a return", marker);
    }

    std::vector<std::map<std::string, TypeVal>> out;
    out.reserve(n + 1);
    for (auto& st : in_state) out.push_back(st ? *st : LocalState{});
    return out;
  }
};

void check_hierarchy(const Program& p) {
  for (const auto* group : {&p.classes, &p.stubs}) {
    for (const auto& [name, cls] : *group) {
      if (cls.super.empty()) {
        if (!(cls.is_external && name == "Object"))
          throw AirError("class '" + name + "' must extend a class", cls.pos);
        continue;
      }
      const ClassDef* sup = p.find_class(cls.super);
      if (!sup) throw AirError("unresolved type: " + cls.super, cls.pos);
      if (sup->is_final)
        throw AirError("class '" + name + "' extends final class '" + cls.super + "'", cls.pos);
      // cycle walk
      std::set<std::string> seen = {name};
      const ClassDef* c = sup;
      while (c) {
        if (!seen.insert(c->name).second)
          throw AirError("inheritance cycle through '" + c->name + "'", cls.pos);
        if (c->super.empty()) break;
        c = p.find_class(c->super);
      }
    }
  }
}

void check_members(const Program& p, const ClassDef& cls) {
  std::set<std::string> fnames;
  for (const auto& f : cls.fields) {
    if (!fnames.insert(f.name).second)
      throw AirError("duplicate field '" + f.name + "' in " + cls.name, f.pos);
    if (f.type == "void" || !p.has_type(f.type))
      throw AirError("unresolved type: " + f.type, f.pos);
  }
  std::set<std::pair<std::string, int>> msigs;
  for (const auto& m : cls.methods) {
    if (!msigs.insert({m.name, m.arity()}).second)
      throw AirError("duplicate method " + cls.name + "." + m.name + "/" +
                         std::to_string(m.arity()),
                     m.pos);
    for (const auto& prm : m.params)
      if (prm.type == "void" || !p.has_type(prm.type))
        throw AirError("unresolved type: " + prm.type, m.pos);
    if (m.ret != "void" && !p.has_type(m.ret)) throw AirError("unresolved type: " + m.ret, m.pos);
    if (m.is_constructor()) {
      if (m.is_static) throw AirError("constructor cannot be static", m.pos);
      if (m.ret != "void") throw AirError("constructor must return void", m.pos);
    }
  }
}

void check_manifest(const Program& p) {
  if (p.manifest.target_api < 1) throw AirError("target_api must be at least 1");
  for (const auto& e : p.manifest.entry_points) {
    const ClassDef* c = p.find_class(e.cls);
    if (!c || c->is_external)
      throw AirError("entry point does not name an application class: " + e.str());
    std::string defined_in;
    const MethodDef* m = p.resolve_method(e.cls, e.name, e.arity, &defined_in);
    if (!m || p.find_class(defined_in)->is_external)
      throw AirError("entry point does not resolve to a concrete method: " + e.str());
  }
}

}  // namespace

void validate_program(const Program& p) {
  check_hierarchy(p);
  for (const auto* group : {&p.classes, &p.stubs})
    for (const auto& [name, cls] : *group) check_members(p, cls);
  check_manifest(p);
  for (const auto& [name, cls] : p.classes) {
    for (const auto& m : cls.methods) {
      try {
        BodyChecker(p, cls, m, true).run();
      } catch (const AirError& e) {
        throw AirError("in " + name + "." + m.name + "/" + std::to_string(m.arity()) + ": " +
                           e.what(),
                       e.where);
      }
    }
  }
}

std::vector<std::map<std::string, TypeVal>> infer_local_types(const Program& p,
                                                              const ClassDef& cls,
                                                              const MethodDef& m) {
  return BodyChecker(p, cls, m, false).run();
}

Program link_program(const AirDocument& app, const AirDocument& stubs) {
  Program p;
  if (app.manifest) p.manifest = *app.manifest;
  for (const auto& c : stubs.classes) {
    ClassDef cls = c;
    cls.is_external = true;
    for (auto& m : cls.methods) m.body.clear();
    if (!p.stubs.emplace(cls.name, std::move(cls)).second)
      throw AirError("duplicate class '" + c.name + "'", c.pos);
  }
  for (const auto& c : app.classes) {
    if (p.stubs.count(c.name) || p.classes.count(c.name))
      throw AirError("duplicate class '" + c.name + "'", c.pos);
    ClassDef cls = c;
    cls.is_external = false;
    if (std::none_of(cls.methods.begin(), cls.methods.end(),
                     [](const MethodDef& m) { return m.is_constructor(); })) {
      // Default constructor chaining to the superclass.
      MethodDef ctor;
      ctor.name = "<init>";
      ctor.ret = "void";
      ctor.pos = cls.pos;
      Instr sup;
      sup.op = Op::Invoke;
      sup.call_kind = CallKind::Static;
      sup.callee = Sig{cls.super, "<init>", 1};
      sup.args = {"this"};
      sup.pos = cls.pos;
      Instr ret;
      ret.op = Op::Return;
      ret.pos = cls.pos;
      ctor.body = {sup, ret};
      cls.methods.push_back(std::move(ctor));
    }
    p.classes.emplace(cls.name, std::move(cls));
  }
  validate_program(p);
  return p;
}

}  // namespace bv
