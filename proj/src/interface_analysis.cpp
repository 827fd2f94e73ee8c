#include "babelview/interface_analysis.hpp"

#include "babelview/refine.hpp"

namespace bv {

namespace {

// True if any declaration of (name, arity) along the hierarchy carries the
// annotation; annotations are inherited by overrides.
bool annotated_anywhere(const Program& p, const std::string& cls, const std::string& name,
                        int arity) {
  for (const auto& cname : p.super_chain(cls)) {
    if (const MethodDef* m = p.find_class(cname)->find_method(name, arity))
      if (m->annotations.count("JavascriptInterface")) return true;
  }
  return false;
}

bool has_annotated_method(const Program& p, const std::string& cls) {
  for (const auto& cname : p.super_chain(cls)) {
    const ClassDef* c = p.find_class(cname);
    if (c->is_external) continue;
    for (const auto& m : c->methods)
      if (m.annotations.count("JavascriptInterface")) return true;
  }
  return false;
}

}  // namespace

std::vector<InterfaceMethod> class_interface_methods(const Program& p, const std::string& cls) {
  bool all_public = p.manifest.target_api < 17;
  // Nearest definition wins per (name, arity); stub definitions do not count.
  std::map<std::pair<std::string, int>, InterfaceMethod> resolved;
  for (const auto& cname : p.super_chain(cls)) {
    const ClassDef* c = p.find_class(cname);
    if (c->is_external) continue;
    for (const auto& m : c->methods) {
      if (m.is_constructor()) continue;
      auto key = std::make_pair(m.name, m.arity());
      if (resolved.count(key)) continue;
      InterfaceMethod im;
      im.owner = cls;
      im.defined_in = cname;
      im.name = m.name;
      im.arity = m.arity();
      for (const auto& prm : m.params) im.param_types.push_back(prm.type);
      im.ret = m.ret;
      resolved.emplace(key, std::move(im));
    }
  }
  std::vector<InterfaceMethod> out;
  for (auto& [key, im] : resolved) {
    if (all_public || annotated_anywhere(p, cls, key.first, key.second))
      out.push_back(std::move(im));
  }
  return out;
}

WebviewInterfaceMap map_webviews(const Program& p, const CallGraph& graph) {
  (void)graph;  // call sites are scanned directly; the graph pins the phase order
  WebviewInterfaceMap out;
  FoldCache folds(p);

  for (const auto& [cname, cls] : p.classes) {
    if (is_generated_class(cname)) continue;
    for (const auto& m : cls.methods) {
      std::vector<std::map<std::string, TypeVal>> types;
      for (int i = 0; i < static_cast<int>(m.body.size()); ++i) {
        const Instr& in = m.body[i];
        if (in.op != Op::Invoke) continue;
        auto def = p.def_sig(in.callee);
        if (!def || !(def->cls == "WebView" && def->name == "addJavascriptInterface" &&
                      def->arity == 3))
          continue;
        if (types.empty()) types = infer_local_types(p, cls, m);

        // Static types of the receiver and the interface argument. The
        // declared parameter or local type is used as written; an unknown
        // receiver falls back to WebView, an unknown argument to Object.
        const auto& env = types[i];
        auto type_of = [&](const std::string& local, const std::string& fallback) {
          auto it = env.find(local);
          if (it != env.end() && it->second.kind == TypeVal::Obj) return it->second.cls;
          return fallback;
        };
        std::string wtype = type_of(in.args[0], "WebView");
        std::string otype = type_of(in.args[1], "Object");

        Sig caller{cname, m.name, m.arity()};
        WebviewInterfaceMap::Registration reg;
        reg.site = Site{caller, i};
        reg.webview_type = wtype;
        reg.object_type = otype;
        auto binding = folds.for_method(caller).at(i, in.args[2]);
        reg.binding = binding ? *binding : "<dynamic>";
        out.provenance.push_back(std::move(reg));

        std::set<std::string> keys;
        for (const auto& sub : subclasses(p, wtype))
          if (!is_generated_class(sub) && is_subtype(p, sub, "WebView")) keys.insert(sub);
        std::set<std::string> values;
        for (const auto& sub : subclasses(p, otype))
          if (!is_generated_class(sub) && has_annotated_method(p, sub)) values.insert(sub);
        for (const auto& k : keys) out.entries[k].insert(values.begin(), values.end());
      }
    }
  }
  return out;
}

std::set<InterfaceMethod> interface_methods(const Program& p, const WebviewInterfaceMap& map,
                                            const std::string& webview) {
  auto it = map.entries.find(webview);
  if (it == map.entries.end()) throw AirError("not a mapped Webview class: " + webview);
  std::set<InterfaceMethod> out;
  for (const auto& cls : it->second)
    for (auto& im : class_interface_methods(p, cls)) out.insert(std::move(im));
  return out;
}

std::set<InterfaceMethod> all_interface_methods(const Program& p,
                                                const WebviewInterfaceMap& map) {
  std::set<InterfaceMethod> out;
  for (const auto& [webview, classes] : map.entries)
    for (auto& im : interface_methods(p, map, webview)) out.insert(std::move(im));
  return out;
}

}  // namespace bv
