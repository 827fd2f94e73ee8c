#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "babelview/refine.hpp"

namespace bv {

// Alarm taxonomy. Uncategorized is the catch-all so classification never
// drops a finding.
enum class AlarmCategory {
  OpenFile,
  WriteFile,
  ReadFile,
  TMLeaks,
  PrefTMLeaks,
  PrefConnectivityLeaks,
  SQLiteLeaks,
  SQLiteQuery,
  PrefSQLiteLeaks,
  GPSLeaks,
  PrefGPSLeaks,
  DirectlySendSMS,
  DirectlyMakeCalls,
  CallViaIntent,
  EmailSMSViaIntent,
  TakePicture,
  DownloadPhoto,
  PlayVideoAudio,
  EditCalendar,
  PostToSocial,
  StartApp,
  ApiPriorTo17,
  UnknownIntent,
  FrameConfusion,
  FetchClass,
  FetchConstructor,
  ConstructorInit,
  FetchMethod,
  MethodParameter,
  Uncategorized,
};

const std::vector<AlarmCategory>& all_categories();          // taxonomy order
const std::vector<AlarmCategory>& correlation_categories();  // taxonomy minus Uncategorized
std::string category_name(AlarmCategory c);
std::optional<AlarmCategory> category_from_name(const std::string& name);

struct Alarm {
  AlarmCategory category = AlarmCategory::Uncategorized;
  std::string confidence = "high";
  nlohmann::json evidence;
};

nlohmann::json flow_to_json(const Flow& flow);
Flow flow_from_json(const nlohmann::json& j);

std::vector<Alarm> classify(const std::vector<Flow>& flows,
                            const std::vector<PreferenceLeak>& pref_leaks,
                            const std::vector<IntentFinding>& intent_findings,
                            const Manifest& manifest, const WebviewInterfaceMap& map);

struct HttpUrlFinding {
  std::string cls;
  std::string method;
  std::string url;
  auto operator<=>(const HttpUrlFinding&) const = default;
};

struct ReportStats {
  long long method_passes = 0;
  long long instruction_visits = 0;
  long long flow_count = 0;
  bool timed_out = false;
};

struct AlarmReport {
  std::string app_id;
  std::vector<Alarm> alarms;
  std::map<std::string, std::set<std::string>> webviews;  // phase 1 result
  std::vector<std::string> interface_methods;             // rendered call sigs
  std::vector<std::string> suspicious_methods;
  std::vector<WebviewInterfaceMap::Registration> registrations;
  std::vector<PreferenceKey> preference_keys;
  std::vector<HttpUrlFinding> http_urls;  // static feasibility evidence only
  std::vector<std::string> lints;
  ReportStats stats;
};

// Deterministic: identical reports produce byte-identical text.
nlohmann::json emit_report(const AlarmReport& report);
std::string render_report(const AlarmReport& report);
AlarmReport report_from_json(const nlohmann::json& j);

struct CorpusSummary {
  long long apps = 0;
  std::vector<std::string> app_ids;
  std::map<std::string, long long> counts;  // apps with at least one alarm
  std::vector<std::string> matrix_categories;
  std::vector<std::vector<std::optional<double>>> matrix;  // phi, null if undefined
};

CorpusSummary aggregate_corpus(const std::vector<AlarmReport>& reports);
nlohmann::json corpus_to_json(const CorpusSummary& summary);
std::string render_counts_table(const CorpusSummary& summary);

}  // namespace bv
