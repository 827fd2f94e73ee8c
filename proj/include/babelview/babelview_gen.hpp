#pragma once

#include <set>
#include <string>
#include <vector>

#include "babelview/interface_analysis.hpp"

namespace bv {

// A generated attacker-model subclass for one Webview class. The subclass
// mirrors every parent constructor, stores registered interface objects in
// typed instance fields, and overrides the content-loading methods so each
// load is followed by the attacker loop: an unbounded nondeterministic
// sequence of interface-method calls with fresh tainted arguments whose
// results feed the leak sink.

struct BabelViewClass {
  ClassDef cls;
  std::string parent;
  std::vector<std::string> interface_classes;  // sorted
};

// Names are reserved for the engine: methods taintSource and leak on the
// generated class act as the attacker-input source and the exfiltration
// sink, and the attacker method is the model entry.
inline const char* kBabelViewSuffix = "$BabelView";

BabelViewClass generate_babelview(const Program& program, const std::string& webview,
                                  const std::set<std::string>& interface_classes);

// Canonical AIR text of the generated class; parses back to the same class.
std::string render_airtext(const BabelViewClass& bv);

}  // namespace bv
