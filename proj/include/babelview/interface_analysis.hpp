#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "babelview/callgraph.hpp"

namespace bv {

// Result of the interface discovery pass: which interface-object classes
// may end up registered on which Webview classes at runtime.

struct WebviewInterfaceMap {
  std::map<std::string, std::set<std::string>> entries;

  struct Registration {
    Site site;
    std::string webview_type;  // static type used for the receiver
    std::string object_type;   // static type used for the interface argument
    std::string binding;       // JavaScript-side name, "<dynamic>" if unresolved
  };
  std::vector<Registration> provenance;

  bool empty() const { return entries.empty(); }
};

WebviewInterfaceMap map_webviews(const Program& program, const CallGraph& graph);

struct InterfaceMethod {
  std::string owner;       // registered interface class (call receiver type)
  std::string defined_in;  // class declaring the body
  std::string name;
  int arity = 0;
  std::vector<std::string> param_types;
  std::string ret = "void";

  Sig call_sig() const { return {owner, name, arity}; }
  auto operator<=>(const InterfaceMethod&) const = default;
};

// Methods of one registered class that JavaScript can call: annotated
// methods (inherited annotations count), or every public method when the
// app targets an API level below 17.
std::vector<InterfaceMethod> class_interface_methods(const Program& program,
                                                     const std::string& cls);

std::set<InterfaceMethod> interface_methods(const Program& program,
                                            const WebviewInterfaceMap& map,
                                            const std::string& webview);

std::set<InterfaceMethod> all_interface_methods(const Program& program,
                                                const WebviewInterfaceMap& map);

}  // namespace bv
