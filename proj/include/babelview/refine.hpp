#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "babelview/callgraph.hpp"
#include "babelview/interface_analysis.hpp"
#include "babelview/taint.hpp"

namespace bv {

// Intra-procedural string constant propagation with a StringBuilder model.
// For each instruction, records the resolved value of every call argument
// in the pre-state; an absent entry means unknown (top).
struct StringConstMap {
  std::map<std::pair<int, std::string>, std::string> resolved;

  std::optional<std::string> at(int index, const std::string& local) const {
    auto it = resolved.find({index, local});
    if (it == resolved.end()) return std::nullopt;
    return it->second;
  }
};

StringConstMap fold_strings(const Program& program, const ClassDef& cls, const MethodDef& method);

// Lazily folded per-method constant maps.
class FoldCache {
 public:
  explicit FoldCache(const Program& program) : program_(program) {}
  const StringConstMap& for_method(const Sig& def);

 private:
  const Program& program_;
  std::map<Sig, StringConstMap> cache_;
};

struct PreferenceLeak {
  Flow put;
  Flow get;
  std::string key;         // "<unresolved>" when folding failed on both ends
  std::string value_type;  // string or int
  bool key_resolved = true;
  bool suspicious = false;
};

std::vector<PreferenceLeak> match_preference_flows(const Program& program,
                                                   const std::vector<Flow>& flows,
                                                   FoldCache& folds,
                                                   const SourceSinkConfig& config);

struct PreferenceKey {
  std::string key;
  bool suspicious = false;
  auto operator<=>(const PreferenceKey&) const = default;
};

// All keys used at preference call sites reachable from interface methods.
std::vector<PreferenceKey> report_preference_keys(const Program& program,
                                                  const WebviewInterfaceMap& map,
                                                  const SourceSinkConfig& config);

bool is_suspicious_term(const std::string& name, const std::set<std::string>& terms);

// Interface methods whose names match the suspicious term lists.
std::set<InterfaceMethod> flag_suspicious_interface_names(const std::set<InterfaceMethod>& methods,
                                                          const SourceSinkConfig& config);

struct IntentFinding {
  Flow flow;
  std::optional<std::string> action;  // nullopt = unknown
  std::optional<Site> constructor_site;
  std::optional<Site> set_action_site;
  bool stack_consistent = false;
  bool store_page = false;  // a market: URL constant feeds the same intent region
};

IntentFinding resolve_intent_action(const Program& program, const Flow& flow,
                                    const CallGraph& graph, FoldCache& folds);

}  // namespace bv
