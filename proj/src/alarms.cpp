#include <algorithm>
#include <cmath>
#include <sstream>

#include "babelview/alarms.hpp"

namespace bv {

namespace {

const std::vector<std::pair<AlarmCategory, const char*>>& category_table() {
  static const std::vector<std::pair<AlarmCategory, const char*>> table = {
      {AlarmCategory::OpenFile, "OpenFile"},
      {AlarmCategory::WriteFile, "WriteFile"},
      {AlarmCategory::ReadFile, "ReadFile"},
      {AlarmCategory::TMLeaks, "TMLeaks"},
      {AlarmCategory::PrefTMLeaks, "PrefTMLeaks"},
      {AlarmCategory::PrefConnectivityLeaks, "PrefConnectivityLeaks"},
      {AlarmCategory::SQLiteLeaks, "SQLiteLeaks"},
      {AlarmCategory::SQLiteQuery, "SQLiteQuery"},
      {AlarmCategory::PrefSQLiteLeaks, "PrefSQLiteLeaks"},
      {AlarmCategory::GPSLeaks, "GPSLeaks"},
      {AlarmCategory::PrefGPSLeaks, "PrefGPSLeaks"},
      {AlarmCategory::DirectlySendSMS, "DirectlySendSMS"},
      {AlarmCategory::DirectlyMakeCalls, "DirectlyMakeCalls"},
      {AlarmCategory::CallViaIntent, "CallViaIntent"},
      {AlarmCategory::EmailSMSViaIntent, "EmailSMSViaIntent"},
      {AlarmCategory::TakePicture, "TakePicture"},
      {AlarmCategory::DownloadPhoto, "DownloadPhoto"},
      {AlarmCategory::PlayVideoAudio, "PlayVideoAudio"},
      {AlarmCategory::EditCalendar, "EditCalendar"},
      {AlarmCategory::PostToSocial, "PostToSocial"},
      {AlarmCategory::StartApp, "StartApp"},
      {AlarmCategory::ApiPriorTo17, "ApiPriorTo17"},
      {AlarmCategory::UnknownIntent, "UnknownIntent"},
      {AlarmCategory::FrameConfusion, "FrameConfusion"},
      {AlarmCategory::FetchClass, "FetchClass"},
      {AlarmCategory::FetchConstructor, "FetchConstructor"},
      {AlarmCategory::ConstructorInit, "ConstructorInit"},
      {AlarmCategory::FetchMethod, "FetchMethod"},
      {AlarmCategory::MethodParameter, "MethodParameter"},
      {AlarmCategory::Uncategorized, "Uncategorized"},
  };
  return table;
}

}  // namespace

const std::vector<AlarmCategory>& all_categories() {
  static const std::vector<AlarmCategory> cats = [] {
    std::vector<AlarmCategory> out;
    for (const auto& [c, n] : category_table()) out.push_back(c);
    return out;
  }();
  return cats;
}

const std::vector<AlarmCategory>& correlation_categories() {
  static const std::vector<AlarmCategory> cats = [] {
    std::vector<AlarmCategory> out;
    for (const auto& [c, n] : category_table())
      if (c != AlarmCategory::Uncategorized) out.push_back(c);
    return out;
  }();
  return cats;
}

std::string category_name(AlarmCategory c) {
  for (const auto& [cat, name] : category_table())
    if (cat == c) return name;
  return "Uncategorized";
}

std::optional<AlarmCategory> category_from_name(const std::string& name) {
  for (const auto& [cat, cname] : category_table())
    if (name == cname) return cat;
  return std::nullopt;
}

nlohmann::json flow_to_json(const Flow& f) {
  nlohmann::json j;
  j["source"] = {{"label", f.source_label}, {"site", f.source_site.str()}};
  j["sink"] = {{"label", f.sink_label}, {"site", f.sink_site.str()}};
  j["attribution"] = f.attribution ? nlohmann::json(f.attribution->str()) : nlohmann::json();
  nlohmann::json witness = nlohmann::json::array();
  for (const auto& s : f.witness) witness.push_back(s.str());
  j["witness"] = witness;
  nlohmann::json ctx = nlohmann::json::array();
  for (const auto& s : f.context) ctx.push_back(s.str());
  j["context"] = ctx;
  return j;
}

Flow flow_from_json(const nlohmann::json& j) {
  Flow f;
  f.source_label = j.at("source").at("label").get<std::string>();
  f.source_site = Site::parse(j.at("source").at("site").get<std::string>());
  f.sink_label = j.at("sink").at("label").get<std::string>();
  f.sink_site = Site::parse(j.at("sink").at("site").get<std::string>());
  if (!j.at("attribution").is_null())
    f.attribution = Sig::parse(j.at("attribution").get<std::string>());
  for (const auto& s : j.at("witness")) f.witness.push_back(Site::parse(s.get<std::string>()));
  for (const auto& s : j.at("context")) f.context.push_back(Site::parse(s.get<std::string>()));
  return f;
}

namespace {

nlohmann::json pref_leak_to_json(const PreferenceLeak& leak) {
  nlohmann::json j;
  j["put"] = flow_to_json(leak.put);
  j["get"] = flow_to_json(leak.get);
  j["key"] = leak.key;
  j["value_type"] = leak.value_type;
  j["key_resolved"] = leak.key_resolved;
  j["suspicious"] = leak.suspicious;
  return j;
}

nlohmann::json intent_to_json(const IntentFinding& finding) {
  nlohmann::json j;
  j["flow"] = flow_to_json(finding.flow);
  j["action"] = finding.action ? nlohmann::json(*finding.action) : nlohmann::json();
  j["constructor_site"] =
      finding.constructor_site ? nlohmann::json(finding.constructor_site->str())
                               : nlohmann::json();
  j["set_action_site"] = finding.set_action_site ? nlohmann::json(finding.set_action_site->str())
                                                 : nlohmann::json();
  j["stack_consistent"] = finding.stack_consistent;
  j["store_page"] = finding.store_page;
  return j;
}

AlarmCategory pref_category(const std::string& put_source) {
  if (put_source == "tm-device-id" || put_source == "tm-phone")
    return AlarmCategory::PrefTMLeaks;
  if (put_source == "connectivity-info") return AlarmCategory::PrefConnectivityLeaks;
  if (put_source == "sql-content") return AlarmCategory::PrefSQLiteLeaks;
  if (put_source == "gps-location") return AlarmCategory::PrefGPSLeaks;
  return AlarmCategory::Uncategorized;
}

AlarmCategory intent_category(const IntentFinding& finding) {
  if (!finding.action) {
    return finding.store_page ? AlarmCategory::StartApp : AlarmCategory::UnknownIntent;
  }
  const std::string& a = *finding.action;
  if (a == "android.intent.action.CALL" || a == "android.intent.action.DIAL")
    return AlarmCategory::CallViaIntent;
  if (a == "android.intent.action.SENDTO") return AlarmCategory::EmailSMSViaIntent;
  if (a == "android.intent.action.SEND") return AlarmCategory::PostToSocial;
  if (a == "android.media.action.IMAGE_CAPTURE") return AlarmCategory::TakePicture;
  if (a == "android.intent.action.INSERT" || a == "android.intent.action.EDIT")
    return AlarmCategory::EditCalendar;
  if (a == "android.intent.action.MAIN") return AlarmCategory::StartApp;
  return AlarmCategory::Uncategorized;
}

bool is_tm_source(const std::string& label) {
  return label == "tm-device-id" || label == "tm-phone";
}

AlarmCategory exfiltration_category(const std::string& source) {
  if (is_tm_source(source)) return AlarmCategory::TMLeaks;
  if (source == "gps-location") return AlarmCategory::GPSLeaks;
  if (source == "sql-content") return AlarmCategory::SQLiteLeaks;
  if (source == "file-content") return AlarmCategory::ReadFile;
  return AlarmCategory::Uncategorized;
}

AlarmCategory capability_category(const std::string& sink) {
  if (sink == "open-file") return AlarmCategory::OpenFile;
  if (sink == "write-file") return AlarmCategory::WriteFile;
  if (sink == "sql-exec") return AlarmCategory::SQLiteQuery;
  if (sink == "send-sms") return AlarmCategory::DirectlySendSMS;
  if (sink == "place-call") return AlarmCategory::DirectlyMakeCalls;
  if (sink == "save-image") return AlarmCategory::DownloadPhoto;
  if (sink == "play-media") return AlarmCategory::PlayVideoAudio;
  if (sink == "reflect-class") return AlarmCategory::FetchClass;
  if (sink == "reflect-ctor") return AlarmCategory::FetchConstructor;
  if (sink == "ctor-init") return AlarmCategory::ConstructorInit;
  if (sink == "reflect-method") return AlarmCategory::FetchMethod;
  if (sink == "method-invoke") return AlarmCategory::MethodParameter;
  return AlarmCategory::Uncategorized;
}

}  // namespace

std::vector<Alarm> classify(const std::vector<Flow>& flows,
                            const std::vector<PreferenceLeak>& pref_leaks,
                            const std::vector<IntentFinding>& intent_findings,
                            const Manifest& manifest, const WebviewInterfaceMap& map) {
  std::vector<Alarm> alarms;
  auto flow_key = [](const Flow& f) {
    return f.source_label + "|" + f.source_site.str() + "|" + f.sink_label + "|" +
           f.sink_site.str() + "|" + (f.attribution ? f.attribution->str() : "");
  };
  std::set<std::string> consumed;

  for (const auto& leak : pref_leaks) {
    Alarm a;
    a.category = pref_category(leak.put.source_label);
    a.confidence = leak.key_resolved ? "high" : "low";
    a.evidence = pref_leak_to_json(leak);
    a.evidence["kind"] = "preference-pair";
    alarms.push_back(std::move(a));
    consumed.insert(flow_key(leak.put));
    consumed.insert(flow_key(leak.get));
  }

  for (const auto& finding : intent_findings) {
    Alarm a;
    a.category = intent_category(finding);
    a.confidence = finding.stack_consistent ? "high" : "low";
    a.evidence = intent_to_json(finding);
    a.evidence["kind"] = "intent";
    alarms.push_back(std::move(a));
    consumed.insert(flow_key(finding.flow));
  }

  for (const auto& f : flows) {
    if (consumed.count(flow_key(f))) continue;
    Alarm a;
    a.evidence = flow_to_json(f);
    a.evidence["kind"] = "flow";
    if (f.sink_label == kExfiltrationSinkLabel) {
      a.category = exfiltration_category(f.source_label);
    } else if (f.sink_label == "webview-load") {
      a.category = f.source_label == kAttackerSourceLabel ? AlarmCategory::FrameConfusion
                                                          : AlarmCategory::Uncategorized;
    } else if (f.source_label == kAttackerSourceLabel) {
      a.category = capability_category(f.sink_label);
    } else {
      a.category = AlarmCategory::Uncategorized;
    }
    alarms.push_back(std::move(a));
  }

  if (manifest.target_api < 17 && !map.entries.empty()) {
    Alarm a;
    a.category = AlarmCategory::ApiPriorTo17;
    a.evidence = {{"kind", "manifest"}, {"target_api", manifest.target_api}};
    alarms.push_back(std::move(a));
  }

  std::sort(alarms.begin(), alarms.end(), [](const Alarm& x, const Alarm& y) {
    if (x.category != y.category) return x.category < y.category;
    return x.evidence.dump() < y.evidence.dump();
  });
  return alarms;
}

nlohmann::json emit_report(const AlarmReport& r) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["app"] = r.app_id;

  nlohmann::json alarms = nlohmann::json::array();
  for (const auto& a : r.alarms) {
    alarms.push_back({{"category", category_name(a.category)},
                      {"confidence", a.confidence},
                      {"evidence", a.evidence}});
  }
  j["alarms"] = alarms;

  nlohmann::json webviews = nlohmann::json::object();
  for (const auto& [w, ifaces] : r.webviews)
    webviews[w] = std::vector<std::string>(ifaces.begin(), ifaces.end());
  nlohmann::json regs = nlohmann::json::array();
  for (const auto& reg : r.registrations) {
    regs.push_back({{"site", reg.site.str()},
                    {"webview_type", reg.webview_type},
                    {"object_type", reg.object_type},
                    {"binding", reg.binding}});
  }
  j["interfaces"] = {{"webviews", webviews},
                     {"methods", r.interface_methods},
                     {"suspicious_methods", r.suspicious_methods},
                     {"registrations", regs}};

  nlohmann::json keys = nlohmann::json::array();
  for (const auto& k : r.preference_keys)
    keys.push_back({{"key", k.key}, {"suspicious", k.suspicious}});
  j["preference_keys"] = keys;

  nlohmann::json urls = nlohmann::json::array();
  for (const auto& u : r.http_urls)
    urls.push_back({{"class", u.cls}, {"method", u.method}, {"url", u.url}});
  j["feasibility"] = {{"static_evidence_only", true}, {"http_urls", urls}};

  j["lints"] = r.lints;
  j["stats"] = {{"method_passes", r.stats.method_passes},
                {"instruction_visits", r.stats.instruction_visits},
                {"flows", r.stats.flow_count},
                {"alarm_count", static_cast<long long>(r.alarms.size())},
                {"timed_out", r.stats.timed_out}};
  return j;
}

std::string render_report(const AlarmReport& r) { return emit_report(r).dump(2) + "\n"; }

AlarmReport report_from_json(const nlohmann::json& j) {
  AlarmReport r;
  r.app_id = j.at("app").get<std::string>();
  for (const auto& a : j.at("alarms")) {
    Alarm alarm;
    alarm.category =
        category_from_name(a.at("category").get<std::string>()).value_or(AlarmCategory::Uncategorized);
    alarm.confidence = a.at("confidence").get<std::string>();
    alarm.evidence = a.at("evidence");
    r.alarms.push_back(std::move(alarm));
  }
  const auto& ifs = j.at("interfaces");
  for (auto it = ifs.at("webviews").begin(); it != ifs.at("webviews").end(); ++it) {
    std::set<std::string> classes;
    for (const auto& c : it.value()) classes.insert(c.get<std::string>());
    r.webviews[it.key()] = std::move(classes);
  }
  for (const auto& m : ifs.at("methods")) r.interface_methods.push_back(m.get<std::string>());
  for (const auto& m : ifs.at("suspicious_methods"))
    r.suspicious_methods.push_back(m.get<std::string>());
  for (const auto& reg : ifs.at("registrations")) {
    WebviewInterfaceMap::Registration out;
    out.site = Site::parse(reg.at("site").get<std::string>());
    out.webview_type = reg.at("webview_type").get<std::string>();
    out.object_type = reg.at("object_type").get<std::string>();
    out.binding = reg.at("binding").get<std::string>();
    r.registrations.push_back(std::move(out));
  }
  for (const auto& k : j.at("preference_keys"))
    r.preference_keys.push_back(
        {k.at("key").get<std::string>(), k.at("suspicious").get<bool>()});
  for (const auto& u : j.at("feasibility").at("http_urls"))
    r.http_urls.push_back({u.at("class").get<std::string>(), u.at("method").get<std::string>(),
                           u.at("url").get<std::string>()});
  for (const auto& l : j.at("lints")) r.lints.push_back(l.get<std::string>());
  const auto& stats = j.at("stats");
  r.stats.method_passes = stats.at("method_passes").get<long long>();
  r.stats.instruction_visits = stats.at("instruction_visits").get<long long>();
  r.stats.flow_count = stats.at("flows").get<long long>();
  r.stats.timed_out = stats.at("timed_out").get<bool>();
  return r;
}

CorpusSummary aggregate_corpus(const std::vector<AlarmReport>& reports) {
  if (reports.empty()) throw AirError("corpus aggregation needs at least one report");
  std::vector<const AlarmReport*> sorted;
  for (const auto& r : reports) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const AlarmReport* a, const AlarmReport* b) { return a->app_id < b->app_id; });

  CorpusSummary s;
  s.apps = static_cast<long long>(sorted.size());
  for (const auto* r : sorted) s.app_ids.push_back(r->app_id);

  std::map<AlarmCategory, std::vector<int>> indicators;
  for (AlarmCategory c : all_categories()) indicators[c] = std::vector<int>(sorted.size(), 0);
  for (size_t i = 0; i < sorted.size(); ++i)
    for (const auto& a : sorted[i]->alarms) indicators[a.category][i] = 1;

  for (AlarmCategory c : all_categories()) {
    long long n = 0;
    for (int v : indicators[c]) n += v;
    s.counts[category_name(c)] = n;
  }

  // Phi coefficient over per-app binary indicators; undefined without
  // variance on either side.
  const auto& cats = correlation_categories();
  for (AlarmCategory c : cats) s.matrix_categories.push_back(category_name(c));
  size_t k = cats.size();
  s.matrix.assign(k, std::vector<std::optional<double>>(k));
  auto phi = [&](const std::vector<int>& x, const std::vector<int>& y) -> std::optional<double> {
    long long n = static_cast<long long>(x.size());
    long long sx = 0, sy = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
      sx += x[i];
      sy += y[i];
      sxy += x[i] * y[i];
    }
    long long vx = n * sx - sx * sx;
    long long vy = n * sy - sy * sy;
    if (vx == 0 || vy == 0) return std::nullopt;
    return (static_cast<double>(n) * sxy - static_cast<double>(sx) * sy) /
           std::sqrt(static_cast<double>(vx) * static_cast<double>(vy));
  };
  for (size_t a = 0; a < k; ++a) {
    for (size_t b = a; b < k; ++b) {
      auto v = phi(indicators[cats[a]], indicators[cats[b]]);
      s.matrix[a][b] = v;
      s.matrix[b][a] = v;
    }
  }
  return s;
}

nlohmann::json corpus_to_json(const CorpusSummary& s) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["apps"] = s.apps;
  j["app_ids"] = s.app_ids;
  j["counts"] = s.counts;
  j["matrix_categories"] = s.matrix_categories;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : s.matrix) {
    nlohmann::json out_row = nlohmann::json::array();
    for (const auto& v : row) out_row.push_back(v ? nlohmann::json(*v) : nlohmann::json());
    rows.push_back(out_row);
  }
  j["matrix"] = rows;
  return j;
}

std::string render_counts_table(const CorpusSummary& s) {
  std::ostringstream os;
  const auto& cats = all_categories();
  int per_row = 3;
  for (size_t i = 0; i < cats.size(); ++i) {
    std::string name = category_name(cats[i]);
    long long count = s.counts.at(name);
    os << name;
    for (size_t pad = name.size(); pad < 24; ++pad) os << ' ';
    os << count;
    if ((i + 1) % per_row == 0 || i + 1 == cats.size()) os << "\n";
    else os << "  | ";
  }
  return os.str();
}

}  // namespace bv
