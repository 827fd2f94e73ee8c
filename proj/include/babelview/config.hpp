#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "babelview/air.hpp"

namespace bv {

// Source/sink/wrapper rules driving the taint analysis plus the suspicious
// term lists used by refinement. Rules are keyed by the defining class of
// the callee, so one entry covers every subclass that inherits the method.

enum class TaintTarget { Return, Receiver, Arg };
enum class ObserveTarget { Receiver, Arg };
enum class WrapRule { Propagate, Clear, Ignore };

struct SourceSpec {
  Sig sig;
  std::string label;
  TaintTarget taints = TaintTarget::Return;
  int arg = 0;  // for TaintTarget::Arg
};

struct SinkSpec {
  Sig sig;
  std::string label;
  ObserveTarget observes = ObserveTarget::Arg;
  int arg = 0;

  // Index into the call argument list (receiver is arg0 on instance calls).
  int observed_index() const { return observes == ObserveTarget::Receiver ? 0 : arg; }
};

struct WrapSpec {
  Sig sig;
  WrapRule rule = WrapRule::Ignore;
};

struct SourceSinkConfig {
  std::vector<SourceSpec> sources;
  std::vector<SinkSpec> sinks;
  std::vector<WrapSpec> wrappers;
  std::set<std::string> suspicious_keys;
  std::set<std::string> suspicious_methods;

  std::vector<const SourceSpec*> sources_for(const Sig& def) const;
  std::vector<const SinkSpec*> sinks_for(const Sig& def) const;
  std::optional<WrapRule> wrapper_for(const Sig& def) const;

  // Every configured signature must resolve against the program.
  void validate_against(const Program& program) const;
};

SourceSinkConfig parse_config(const std::string& text);
SourceSinkConfig default_config();

// Labels reserved for the generated attacker model.
inline const char* kAttackerSourceLabel = "attacker-input";
inline const char* kExfiltrationSinkLabel = "web-exfiltration";

}  // namespace bv
