#include <algorithm>

#include "babelview/babelview_gen.hpp"

namespace bv {

namespace {

Instr make_invoke(CallKind kind, Sig callee, std::vector<std::string> args,
                  std::string dst = "") {
  Instr in;
  in.op = Op::Invoke;
  in.call_kind = kind;
  in.callee = std::move(callee);
  in.args = std::move(args);
  in.dst = std::move(dst);
  return in;
}

Instr make_return(std::string local = "") {
  Instr in;
  in.op = Op::Return;
  in.dst = std::move(local);
  return in;
}

Instr make_label(std::string name) {
  Instr in;
  in.op = Op::Label;
  in.label = std::move(name);
  return in;
}

Instr make_jump(Op op, std::string target) {
  Instr in;
  in.op = op;
  in.label = std::move(target);
  return in;
}

std::string field_for(const std::string& iface) { return "iface_" + iface; }

// Parent constructors in a stable order: arity first, then parameter types.
std::vector<const MethodDef*> parent_constructors(const Program& p, const std::string& parent) {
  std::vector<const MethodDef*> out;
  const ClassDef* cls = p.find_class(parent);
  for (const auto& m : cls->methods)
    if (m.is_constructor()) out.push_back(&m);
  std::sort(out.begin(), out.end(), [](const MethodDef* a, const MethodDef* b) {
    if (a->arity() != b->arity()) return a->arity() < b->arity();
    std::vector<std::string> ta, tb;
    for (const auto& prm : a->params) ta.push_back(prm.type);
    for (const auto& prm : b->params) tb.push_back(prm.type);
    return ta < tb;
  });
  return out;
}

MethodDef mirror_constructor(const std::string& parent, const MethodDef& parent_ctor) {
  MethodDef ctor;
  ctor.name = "<init>";
  ctor.ret = "void";
  ctor.params = parent_ctor.params;
  std::vector<std::string> args = {"this"};
  for (const auto& prm : ctor.params) args.push_back(prm.name);
  ctor.body.push_back(
      make_invoke(CallKind::Static, Sig{parent, "<init>", parent_ctor.arity()}, args));
  ctor.body.push_back(make_return());
  return ctor;
}

MethodDef override_add_interface(const Program& p, const std::string& parent,
                                 const std::vector<std::string>& ifaces) {
  const MethodDef* decl = p.resolve_method(parent, "addJavascriptInterface", 3);
  MethodDef m;
  m.name = "addJavascriptInterface";
  m.params = decl->params;
  m.ret = "void";
  const std::string obj = m.params[0].name;
  std::vector<std::string> args = {"this", m.params[0].name, m.params[1].name};
  m.body.push_back(
      make_invoke(CallKind::Static, Sig{parent, "addJavascriptInterface", 3}, args));

  // One nondeterministic arm per interface class: the object is cast to
  // that class and stored into its field.
  for (size_t i = 0; i < ifaces.size(); ++i) {
    bool last = i + 1 == ifaces.size();
    if (i > 0) m.body.push_back(make_label("d" + std::to_string(i)));
    if (!last) m.body.push_back(make_jump(Op::IfNondet, "d" + std::to_string(i + 1)));
    Instr cast;
    cast.op = Op::Cast;
    cast.dst = "c" + std::to_string(i);
    cast.type = ifaces[i];
    cast.src = obj;
    m.body.push_back(cast);
    Instr put;
    put.op = Op::Put;
    put.recv = "this";
    put.field = field_for(ifaces[i]);
    put.src = cast.dst;
    m.body.push_back(put);
    if (!last) m.body.push_back(make_jump(Op::Goto, "dend"));
  }
  if (ifaces.size() > 1) m.body.push_back(make_label("dend"));
  m.body.push_back(make_return());
  return m;
}

MethodDef override_load(const std::string& bv_name, const std::string& parent,
                        const MethodDef& decl) {
  MethodDef m;
  m.name = decl.name;
  m.params = decl.params;
  m.ret = decl.ret;
  std::vector<std::string> args = {"this"};
  for (const auto& prm : m.params) args.push_back(prm.name);
  m.body.push_back(make_invoke(CallKind::Static, Sig{parent, decl.name, decl.arity()}, args));
  m.body.push_back(make_invoke(CallKind::Virtual, Sig{bv_name, "attacker", 1}, {"this"}));
  m.body.push_back(make_return());
  return m;
}

MethodDef attacker_method(const Program& p, const std::string& bv_name,
                          const std::vector<std::string>& ifaces) {
  MethodDef m;
  m.name = "attacker";
  m.ret = "void";

  struct Branch {
    std::string object_local;
    InterfaceMethod im;
  };
  std::vector<Branch> branches;
  std::map<std::string, std::string> object_locals;
  for (size_t i = 0; i < ifaces.size(); ++i) {
    std::string local = "o" + std::to_string(i);
    object_locals[ifaces[i]] = local;
    Instr get;
    get.op = Op::Get;
    get.dst = local;
    get.recv = "this";
    get.field = field_for(ifaces[i]);
    m.body.push_back(get);
    for (const auto& im : class_interface_methods(p, ifaces[i]))
      branches.push_back({local, im});
  }

  m.body.push_back(make_label("loop"));
  m.body.push_back(make_jump(Op::IfNondet, "done"));

  int tmp = 0;
  for (size_t b = 0; b < branches.size(); ++b) {
    bool last = b + 1 == branches.size();
    if (b > 0) m.body.push_back(make_label("b" + std::to_string(b)));
    if (!last) m.body.push_back(make_jump(Op::IfNondet, "b" + std::to_string(b + 1)));
    const Branch& br = branches[b];
    std::vector<std::string> args = {br.object_local};
    for (int prm = 0; prm < br.im.arity - 1; ++prm) {
      std::string t = "t" + std::to_string(tmp++);
      m.body.push_back(
          make_invoke(CallKind::Virtual, Sig{bv_name, "taintSource", 1}, {"this"}, t));
      args.push_back(t);
    }
    std::string result;
    if (br.im.ret != "void") result = "t" + std::to_string(tmp++);
    m.body.push_back(make_invoke(CallKind::Virtual,
                                 Sig{br.im.owner, br.im.name, br.im.arity}, args, result));
    if (!result.empty())
      m.body.push_back(make_invoke(CallKind::Virtual, Sig{bv_name, "leak", 2}, {"this", result}));
    m.body.push_back(make_jump(Op::Goto, "loop"));
  }

  m.body.push_back(make_label("done"));
  m.body.push_back(make_return());
  return m;
}

}  // namespace

BabelViewClass generate_babelview(const Program& p, const std::string& webview,
                                  const std::set<std::string>& interface_classes) {
  if (interface_classes.empty())
    throw AirError("no interface classes registered on " + webview);
  const ClassDef* parent = p.find_class(webview);
  if (!parent) throw AirError("unknown Webview class: " + webview);

  BabelViewClass out;
  out.parent = webview;
  out.interface_classes.assign(interface_classes.begin(), interface_classes.end());

  ClassDef& cls = out.cls;
  cls.name = webview + kBabelViewSuffix;
  cls.super = webview;

  for (const auto& iface : out.interface_classes)
    cls.fields.push_back({field_for(iface), iface, {}});

  for (const MethodDef* ctor : parent_constructors(p, webview))
    cls.methods.push_back(mirror_constructor(webview, *ctor));

  cls.methods.push_back(override_add_interface(p, webview, out.interface_classes));

  for (const char* load : {"loadUrl", "postUrl", "loadData", "loadDataWithBaseURL"}) {
    for (int arity = 2; arity <= 6; ++arity) {
      if (const MethodDef* decl = p.resolve_method(webview, load, arity)) {
        cls.methods.push_back(override_load(cls.name, webview, *decl));
        break;
      }
    }
  }

  cls.methods.push_back(attacker_method(p, cls.name, out.interface_classes));

  MethodDef leak;
  leak.name = "leak";
  leak.params = {{"v", "Object"}};
  leak.ret = "void";
  leak.body.push_back(make_return());
  cls.methods.push_back(std::move(leak));

  MethodDef source;
  source.name = "taintSource";
  source.ret = "Object";
  source.body.push_back(make_return("this"));
  cls.methods.push_back(std::move(source));

  return out;
}

std::string render_airtext(const BabelViewClass& bv) {
  return serialize_class(bv.cls);
}

}  // namespace bv
