#include "babelview/air.hpp"

namespace bv {

const MethodDef* ClassDef::find_method(const std::string& mname, int marity) const {
  for (const auto& m : methods)
    if (m.name == mname && m.arity() == marity) return &m;
  return nullptr;
}

const FieldDef* ClassDef::find_field(const std::string& fname) const {
  for (const auto& f : fields)
    if (f.name == fname) return &f;
  return nullptr;
}

const ClassDef* Program::find_class(const std::string& name) const {
  if (auto it = classes.find(name); it != classes.end()) return &it->second;
  if (auto it = stubs.find(name); it != stubs.end()) return &it->second;
  return nullptr;
}

bool Program::has_type(const std::string& name) const {
  return is_value_type(name) || find_class(name) != nullptr;
}

std::vector<std::string> Program::super_chain(const std::string& cls) const {
  std::vector<std::string> chain;
  std::set<std::string> seen;  // guards against cycles in unvalidated input
  const ClassDef* c = find_class(cls);
  while (c && seen.insert(c->name).second) {
    chain.push_back(c->name);
    if (c->super.empty()) break;
    c = find_class(c->super);
  }
  return chain;
}

const MethodDef* Program::resolve_method(const std::string& cls, const std::string& name,
                                         int arity, std::string* defined_in) const {
  // Constructors are not inherited.
  if (name == "<init>") {
    const ClassDef* c = find_class(cls);
    if (!c) return nullptr;
    if (const MethodDef* m = c->find_method(name, arity)) {
      if (defined_in) *defined_in = c->name;
      return m;
    }
    return nullptr;
  }
  for (const auto& cname : super_chain(cls)) {
    const ClassDef* c = find_class(cname);
    if (const MethodDef* m = c->find_method(name, arity)) {
      if (defined_in) *defined_in = cname;
      return m;
    }
  }
  return nullptr;
}

std::optional<Sig> Program::def_sig(const Sig& call) const {
  std::string defined_in;
  const MethodDef* m = resolve_method(call.cls, call.name, call.arity, &defined_in);
  if (!m) return std::nullopt;
  return Sig{defined_in, call.name, call.arity};
}

std::set<std::string> subclasses(const Program& p, const std::string& type) {
  if (!p.find_class(type)) throw AirError("unknown type: " + type);
  // Reflexive-transitive closure over the extends relation.
  std::set<std::string> out;
  std::vector<std::string> work = {type};
  while (!work.empty()) {
    std::string cur = work.back();
    work.pop_back();
    if (!out.insert(cur).second) continue;
    for (const auto* group : {&p.classes, &p.stubs}) {
      for (const auto& [name, cls] : *group)
        if (cls.super == cur) work.push_back(name);
    }
  }
  return out;
}

bool is_subtype(const Program& p, const std::string& a, const std::string& b) {
  if (!p.find_class(a)) throw AirError("unknown type: " + a);
  if (!p.find_class(b)) throw AirError("unknown type: " + b);
  for (const auto& c : p.super_chain(a))
    if (c == b) return true;
  return false;
}

std::map<std::string, int> label_indices(const MethodDef& m) {
  std::map<std::string, int> out;
  for (int i = 0; i < static_cast<int>(m.body.size()); ++i)
    if (m.body[i].op == Op::Label) out[m.body[i].label] = i;
  return out;
}

std::vector<int> instr_successors(const MethodDef& m, int index,
                                  const std::map<std::string, int>& labels) {
  const Instr& in = m.body[index];
  auto target = [&](const std::string& l) { return labels.at(l); };
  switch (in.op) {
    case Op::Return:
      return {};
    case Op::Goto:
      return {target(in.label)};
    case Op::IfNondet:
      return {index + 1, target(in.label)};
    default:
      return {index + 1};
  }
}

}  // namespace bv
