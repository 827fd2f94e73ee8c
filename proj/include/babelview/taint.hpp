#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "babelview/air.hpp"
#include "babelview/config.hpp"

namespace bv {

// Flow-, field- and context-sensitive forward taint analysis. Heap locations
// are tracked as access paths (a local root plus a bounded field chain);
// context sensitivity comes from call strings of bounded depth. Calls into
// external classes are interpreted through the configured rules.

struct AccessPath {
  std::string base;                // local name, or the return pseudo-root
  std::vector<std::string> chain;  // at most K fields
  bool any_suffix = false;         // truncated chain or opaque tainted object

  auto operator<=>(const AccessPath&) const = default;
};

struct Flow {
  std::string source_label;
  Site source_site;
  std::string sink_label;
  Site sink_site;  // normalized out of generated code when possible
  std::optional<Sig> attribution;  // interface method that enabled the flow
  std::vector<Site> witness;
  std::vector<Site> context;  // call string at the sink

  auto key() const {
    return std::tie(source_label, source_site, sink_label, sink_site, attribution);
  }
  bool operator<(const Flow& o) const { return key() < o.key(); }
  bool operator==(const Flow& o) const { return key() == o.key(); }
};

struct TaintOptions {
  int max_access_path = 3;  // K
  int call_depth = 2;       // C
  double timeout_secs = 900.0;
  bool model_attacker = true;  // analyze generated attacker methods
};

struct TaintStats {
  long long method_passes = 0;
  long long instruction_visits = 0;
  bool timed_out = false;
};

struct TaintResult {
  std::vector<Flow> flows;  // sorted, unique by key
  TaintStats stats;
};

TaintResult run_taint(const Program& program, const SourceSinkConfig& config,
                      const TaintOptions& options = {});

std::vector<Flow> flows_to_sink(const std::vector<Flow>& flows, const std::string& sink_label);

}  // namespace bv
