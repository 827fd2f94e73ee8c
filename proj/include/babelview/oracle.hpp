#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "babelview/config.hpp"

namespace bv {

// Concrete small-step interpreter with taint tags, used as independent
// ground truth. It executes the manifest entry points, exploring both arms
// of every ifnd with a shared step budget, and models an attacker by
// running a given sequence of interface-method calls with tainted
// arguments whenever content is loaded into a Webview that has registered
// interface objects. Calls into platform classes apply the same rule table
// as the static analysis, concretely.

struct OracleTrace {
  std::vector<Sig> sequence;
  std::set<std::pair<std::string, std::string>> leaks;          // (source, sink) labels
  std::set<std::pair<std::string, std::string>> registrations;  // (webview, interface) classes
  std::set<std::pair<Sig, Sig>> call_edges;                     // (caller, callee) definitions
  bool partial = false;  // step budget exhausted before full exploration
  long long steps_used = 0;
};

struct OracleOptions {
  long long max_steps = 100000;
  SourceSinkConfig config;

  OracleOptions();
};

OracleTrace interpret(const Program& program, const std::vector<Sig>& sequence,
                      const OracleOptions& options = {});

// All method sequences with repetition up to the length bound, shortest
// first, lexicographic within a length.
std::vector<std::vector<Sig>> enumerate_sequences(const std::vector<Sig>& methods,
                                                  int max_length);

}  // namespace bv
