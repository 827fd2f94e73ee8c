#include <algorithm>
#include <cctype>

#include "babelview/pipeline.hpp"

#include "babelview/defaults.hpp"

namespace bv {

std::vector<HttpUrlFinding> scan_http_urls(const Program& p) {
  std::vector<HttpUrlFinding> out;
  for (const auto& [cname, cls] : p.classes) {
    if (is_generated_class(cname)) continue;
    for (const auto& m : cls.methods) {
      for (const auto& in : m.body) {
        if (in.op != Op::ConstString) continue;
        const std::string& v = in.str_val;
        static const std::string scheme = "http://";
        if (v.size() < scheme.size()) continue;
        bool match = true;
        for (size_t i = 0; i < scheme.size(); ++i)
          if (std::tolower(static_cast<unsigned char>(v[i])) != scheme[i]) match = false;
        if (match) out.push_back({cname, m.name + "/" + std::to_string(m.arity()), v});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

AnalyzeOutcome analyze_app(const std::string& air_text, const std::string& app_id,
                           const AnalyzeOptions& options) {
  AnalyzeOutcome outcome;
  outcome.report.app_id = app_id;
  try {
    std::string stubs =
        options.stubs_text.empty() ? default_stubs_text() : options.stubs_text;
    std::string config_text =
        options.config_text.empty() ? default_config_text() : options.config_text;
    Program raw = parse_program(air_text, stubs);
    SourceSinkConfig config = parse_config(config_text);
    config.validate_against(raw);

    InstrumentResult inst = instrument_program(raw);
    const Program& program = inst.program;
    CallGraph graph = build_callgraph(program);

    TaintResult taint = run_taint(program, config, options.taint);

    FoldCache folds(program);
    std::vector<PreferenceLeak> pref_leaks =
        match_preference_flows(program, taint.flows, folds, config);
    std::vector<IntentFinding> intent_findings;
    for (const auto& f : flows_to_sink(taint.flows, "start-activity"))
      intent_findings.push_back(resolve_intent_action(program, f, graph, folds));

    AlarmReport& r = outcome.report;
    r.alarms = classify(taint.flows, pref_leaks, intent_findings, program.manifest, inst.map);
    r.webviews = inst.map.entries;
    r.registrations = inst.map.provenance;
    std::set<InterfaceMethod> methods = all_interface_methods(program, inst.map);
    for (const auto& im : methods) r.interface_methods.push_back(im.call_sig().str());
    for (const auto& im : flag_suspicious_interface_names(methods, config))
      r.suspicious_methods.push_back(im.call_sig().str());
    r.preference_keys = report_preference_keys(program, inst.map, config);
    r.http_urls = scan_http_urls(raw);
    r.lints = inst.lints;
    r.stats.method_passes = taint.stats.method_passes;
    r.stats.instruction_visits = taint.stats.instruction_visits;
    r.stats.flow_count = static_cast<long long>(taint.flows.size());
    r.stats.timed_out = taint.stats.timed_out;

    if (taint.stats.timed_out) {
      outcome.exit_code = 2;
      outcome.error = "taint analysis timed out; results are partial";
    } else {
      outcome.exit_code = r.alarms.empty() ? 0 : 1;
    }
  } catch (const AirError& e) {
    outcome.exit_code = 2;
    outcome.error = e.what();
  }
  return outcome;
}

}  // namespace bv
