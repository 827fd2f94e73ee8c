#pragma once

#include <string>
#include <vector>

#include "babelview/alarms.hpp"
#include "babelview/instrument.hpp"
#include "babelview/oracle.hpp"

namespace bv {

// Whole-app analysis: parse and validate, discover interfaces, generate and
// instrument the attacker model, run the taint analysis, refine, classify,
// and assemble the report. Exit codes: 0 clean, 1 alarms, 2 error/timeout.

struct AnalyzeOptions {
  std::string stubs_text;   // empty selects the built-in platform stubs
  std::string config_text;  // empty selects the built-in rule table
  TaintOptions taint;
};

struct AnalyzeOutcome {
  AlarmReport report;
  int exit_code = 0;
  std::string error;  // filled when exit_code is 2
};

AnalyzeOutcome analyze_app(const std::string& air_text, const std::string& app_id,
                           const AnalyzeOptions& options = {});

// Hard-coded cleartext URLs, the static part of the feasibility assessment.
std::vector<HttpUrlFinding> scan_http_urls(const Program& program);

}  // namespace bv
