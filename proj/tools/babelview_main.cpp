#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "babelview/callgraph.hpp"
#include "babelview/defaults.hpp"
#include "babelview/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Write via a temporary file so concurrent corpus workers never expose a
// partially written report.
void write_file_atomic(const std::string& path, const std::string& content) {
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

std::string app_id_for(const std::string& path) {
  return fs::path(path).stem().string();
}

struct CommonFlags {
  std::string stubs_path;
  std::string config_path;
  double timeout_secs = 900.0;
  int max_access_path = 3;
  int call_depth = 2;

  void attach(CLI::App* cmd) {
    cmd->add_option("--stubs", stubs_path, "platform stub classes (AIR file)");
    cmd->add_option("--config", config_path, "source/sink/wrapper rules file");
    cmd->add_option("--timeout-secs", timeout_secs, "taint analysis budget (default 900)");
    cmd->add_option("--max-access-path", max_access_path, "access path depth K (default 3)");
    cmd->add_option("--call-depth", call_depth, "call string depth C (default 2)");
  }

  bv::AnalyzeOptions to_options() const {
    bv::AnalyzeOptions opts;
    if (!stubs_path.empty()) opts.stubs_text = read_file(stubs_path);
    if (!config_path.empty()) opts.config_text = read_file(config_path);
    opts.taint.timeout_secs = timeout_secs;
    opts.taint.max_access_path = max_access_path;
    opts.taint.call_depth = call_depth;
    return opts;
  }

  std::string stubs_text() const {
    return stubs_path.empty() ? bv::default_stubs_text() : read_file(stubs_path);
  }
};

int run_analyze(const std::string& input, const std::string& out_path,
                const std::string& app_id, const CommonFlags& flags) {
  bv::AnalyzeOutcome outcome =
      bv::analyze_app(read_file(input), app_id.empty() ? app_id_for(input) : app_id,
                      flags.to_options());
  if (!outcome.error.empty()) std::cerr << "error: " << outcome.error << "\n";
  std::string text = bv::render_report(outcome.report);
  if (out_path.empty()) std::cout << text;
  else write_file_atomic(out_path, text);
  return outcome.exit_code;
}

int run_instrument(const std::string& input, const std::string& out_path, bool emit_generated,
                   const CommonFlags& flags) {
  bv::Program p = bv::parse_program(read_file(input), flags.stubs_text());
  bv::InstrumentResult inst = bv::instrument_program(p);
  for (const auto& lint : inst.lints) std::cerr << "note: " << lint << "\n";
  std::string text;
  if (emit_generated) {
    bool first = true;
    for (const auto& [name, cls] : inst.program.classes) {
      if (!bv::is_generated_class(name)) continue;
      if (!first) text += "\n";
      first = false;
      text += bv::serialize_class(cls);
    }
  } else {
    text = bv::serialize_program(inst.program);
  }
  if (out_path.empty()) std::cout << text;
  else write_file_atomic(out_path, text);
  return 0;
}

int run_corpus(const std::string& dir, const std::string& out_path,
               const std::string& reports_dir, int jobs, bool table, const CommonFlags& flags) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".air")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "error: no .air files under " << dir << "\n";
    return 2;
  }

  bv::AnalyzeOptions opts = flags.to_options();
  std::vector<bv::AlarmReport> reports(files.size());
  std::vector<std::string> errors;
  std::mutex mu;
  std::atomic<size_t> next{0};
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs <= 0) jobs = 1;
  jobs = std::min<int>(jobs, static_cast<int>(files.size()));

  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= files.size()) return;
      bv::AnalyzeOutcome outcome;
      try {
        outcome = bv::analyze_app(read_file(files[i]), app_id_for(files[i]), opts);
      } catch (const std::exception& e) {
        outcome.exit_code = 2;
        outcome.error = e.what();
        outcome.report.app_id = app_id_for(files[i]);
      }
      std::lock_guard<std::mutex> lock(mu);
      reports[i] = outcome.report;
      if (outcome.exit_code == 2)
        errors.push_back(app_id_for(files[i]) + ": " + outcome.error);
      if (!reports_dir.empty()) {
        fs::create_directories(reports_dir);
        write_file_atomic(
            (fs::path(reports_dir) / (app_id_for(files[i]) + ".report.json")).string(),
            bv::render_report(outcome.report));
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  bv::CorpusSummary summary = bv::aggregate_corpus(reports);
  nlohmann::json j = bv::corpus_to_json(summary);
  std::sort(errors.begin(), errors.end());
  j["errors"] = errors;
  std::string text = j.dump(2) + "\n";
  if (out_path.empty()) std::cout << text;
  else write_file_atomic(out_path, text);
  if (table) std::cout << bv::render_counts_table(summary);
  return 0;
}

int run_oracle(const std::string& input, int max_seq, long long max_steps,
               const CommonFlags& flags) {
  bv::Program p = bv::parse_program(read_file(input), flags.stubs_text());
  bv::OracleOptions oracle_opts;
  if (!flags.config_path.empty()) oracle_opts.config = bv::parse_config(read_file(flags.config_path));
  oracle_opts.max_steps = max_steps;

  bv::CallGraph graph = bv::build_callgraph(p);
  bv::WebviewInterfaceMap map = bv::map_webviews(p, graph);
  std::vector<bv::Sig> methods;
  for (const auto& im : bv::all_interface_methods(p, map)) methods.push_back(im.call_sig());

  nlohmann::json traces = nlohmann::json::array();
  std::set<std::pair<std::string, std::string>> union_leaks;
  for (const auto& seq : bv::enumerate_sequences(methods, max_seq)) {
    bv::OracleTrace trace = bv::interpret(p, seq, oracle_opts);
    nlohmann::json t;
    nlohmann::json sig_list = nlohmann::json::array();
    for (const auto& s : trace.sequence) sig_list.push_back(s.str());
    t["sequence"] = sig_list;
    nlohmann::json leaks = nlohmann::json::array();
    for (const auto& [src, snk] : trace.leaks) leaks.push_back({{"source", src}, {"sink", snk}});
    t["leaks"] = leaks;
    nlohmann::json regs = nlohmann::json::array();
    for (const auto& [w, o] : trace.registrations)
      regs.push_back({{"webview", w}, {"interface", o}});
    t["registrations"] = regs;
    t["partial"] = trace.partial;
    t["steps"] = trace.steps_used;
    traces.push_back(t);
    union_leaks.insert(trace.leaks.begin(), trace.leaks.end());
  }
  nlohmann::json j;
  j["traces"] = traces;
  nlohmann::json u = nlohmann::json::array();
  for (const auto& [src, snk] : union_leaks) u.push_back({{"source", src}, {"sink", snk}});
  j["union_leaks"] = u;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_scan_http(const std::string& input, const CommonFlags& flags) {
  bv::Program p = bv::parse_program(read_file(input), flags.stubs_text());
  nlohmann::json j = nlohmann::json::array();
  for (const auto& f : bv::scan_http_urls(p))
    j.push_back({{"class", f.cls}, {"method", f.method}, {"url", f.url}});
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_callgraph(const std::string& input, const CommonFlags& flags) {
  bv::Program p = bv::parse_program(read_file(input), flags.stubs_text());
  std::cout << bv::dump_edges(bv::build_callgraph(p));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Webview JavaScript-bridge impact analysis over AIR programs"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string input, out_path, app_id, reports_dir;
  bool emit_generated = false;
  bool table = false;
  int jobs = 0;
  int max_seq = 3;
  long long max_steps = 100000;

  CLI::App* analyze = app.add_subcommand("analyze", "run the full pipeline on one app");
  analyze->add_option("app", input, "AIR program file")->required();
  analyze->add_option("--out", out_path, "report output path (default stdout)");
  analyze->add_option("--app-id", app_id, "report app id (default file stem)");
  flags.attach(analyze);

  CLI::App* instrument = app.add_subcommand("instrument", "emit the instrumented program");
  instrument->add_option("app", input, "AIR program file")->required();
  instrument->add_option("--out", out_path, "output path (default stdout)");
  instrument->add_flag("--emit-generated", emit_generated, "print only generated classes");
  flags.attach(instrument);

  CLI::App* corpus = app.add_subcommand("corpus", "analyze a directory of apps and aggregate");
  corpus->add_option("dir", input, "directory containing .air files")->required();
  corpus->add_option("--out", out_path, "summary output path (default stdout)");
  corpus->add_option("--reports-dir", reports_dir, "write per-app reports here");
  corpus->add_option("--jobs", jobs, "worker threads (default: hardware)");
  corpus->add_flag("--table", table, "print a per-category count table");
  flags.attach(corpus);

  CLI::App* oracle = app.add_subcommand("oracle", "run the concrete interpreter");
  oracle->add_option("app", input, "AIR program file")->required();
  oracle->add_option("--max-seq", max_seq, "attacker sequence length bound (default 3)");
  oracle->add_option("--max-steps", max_steps, "step budget (default 100000)");
  flags.attach(oracle);

  CLI::App* scan = app.add_subcommand("scan-http", "list hard-coded cleartext URLs");
  scan->add_option("app", input, "AIR program file")->required();
  flags.attach(scan);

  CLI::App* cg = app.add_subcommand("callgraph", "dump the call graph edge list");
  cg->add_option("app", input, "AIR program file")->required();
  flags.attach(cg);

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return run_analyze(input, out_path, app_id, flags);
    if (instrument->parsed()) return run_instrument(input, out_path, emit_generated, flags);
    if (corpus->parsed()) return run_corpus(input, out_path, reports_dir, jobs, table, flags);
    if (oracle->parsed()) return run_oracle(input, max_seq, max_steps, flags);
    if (scan->parsed()) return run_scan_http(input, flags);
    if (cg->parsed()) return run_callgraph(input, flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
