#include <sstream>

#include "babelview/config.hpp"
#include "babelview/defaults.hpp"

namespace bv {

namespace {

// Splits "key=value" and returns value, or nullopt when the key differs.
std::optional<std::string> key_value(const std::string& tok, const std::string& key) {
  if (tok.size() <= key.size() + 1) return std::nullopt;
  if (tok.compare(0, key.size(), key) != 0 || tok[key.size()] != '=') return std::nullopt;
  return tok.substr(key.size() + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw AirError("config line " + std::to_string(line) + ": " + msg);
}

int parse_arg_index(int line, const std::string& v) {
  if (v.size() < 4 || v.compare(0, 3, "arg") != 0) fail(line, "expected argN");
  return std::stoi(v.substr(3));
}

}  // namespace

SourceSinkConfig parse_config(const std::string& text) {
  SourceSinkConfig cfg;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string kind;
    if (!(ls >> kind)) continue;
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);

    if (kind == "source") {
      if (toks.size() != 3) fail(lineno, "source SIG label=L taints=return|receiver|argN");
      SourceSpec s;
      s.sig = Sig::parse(toks[0]);
      if (auto v = key_value(toks[1], "label")) s.label = *v;
      else fail(lineno, "missing label=");
      auto v = key_value(toks[2], "taints");
      if (!v) fail(lineno, "missing taints=");
      if (*v == "return") s.taints = TaintTarget::Return;
      else if (*v == "receiver") s.taints = TaintTarget::Receiver;
      else {
        s.taints = TaintTarget::Arg;
        s.arg = parse_arg_index(lineno, *v);
        if (s.arg < 0 || s.arg >= s.sig.arity) fail(lineno, "taints index out of range");
      }
      cfg.sources.push_back(std::move(s));
    } else if (kind == "sink") {
      if (toks.size() != 3) fail(lineno, "sink SIG label=L observes=argN|receiver");
      SinkSpec s;
      s.sig = Sig::parse(toks[0]);
      if (auto v = key_value(toks[1], "label")) s.label = *v;
      else fail(lineno, "missing label=");
      auto v = key_value(toks[2], "observes");
      if (!v) fail(lineno, "missing observes=");
      if (*v == "receiver") s.observes = ObserveTarget::Receiver;
      else {
        s.observes = ObserveTarget::Arg;
        s.arg = parse_arg_index(lineno, *v);
        if (s.arg < 0 || s.arg >= s.sig.arity) fail(lineno, "observes index out of range");
      }
      cfg.sinks.push_back(std::move(s));
    } else if (kind == "wrap") {
      if (toks.size() != 2) fail(lineno, "wrap SIG rule=propagate|clear|ignore");
      WrapSpec w;
      w.sig = Sig::parse(toks[0]);
      auto v = key_value(toks[1], "rule");
      if (!v) fail(lineno, "missing rule=");
      if (*v == "propagate") w.rule = WrapRule::Propagate;
      else if (*v == "clear") w.rule = WrapRule::Clear;
      else if (*v == "ignore") w.rule = WrapRule::Ignore;
      else fail(lineno, "unknown wrapper rule '" + *v + "'");
      cfg.wrappers.push_back(w);
    } else if (kind == "suspicious") {
      if (toks.size() != 1) fail(lineno, "suspicious key=... or suspicious method=...");
      if (auto v = key_value(toks[0], "key")) cfg.suspicious_keys.insert(*v);
      else if (auto v2 = key_value(toks[0], "method")) cfg.suspicious_methods.insert(*v2);
      else fail(lineno, "suspicious key=... or suspicious method=...");
    } else {
      fail(lineno, "unknown directive '" + kind + "'");
    }
  }

  // A label may cover several signatures of the same kind but must not be
  // used both as a source and as a sink label.
  std::set<std::string> source_labels, sink_labels;
  for (const auto& s : cfg.sources) source_labels.insert(s.label);
  for (const auto& s : cfg.sinks) sink_labels.insert(s.label);
  for (const auto& l : source_labels)
    if (sink_labels.count(l)) throw AirError("config: label '" + l + "' is both source and sink");
  for (const char* reserved : {kAttackerSourceLabel, kExfiltrationSinkLabel})
    if (source_labels.count(reserved) || sink_labels.count(reserved))
      throw AirError(std::string("config: label '") + reserved + "' is reserved");
  return cfg;
}

SourceSinkConfig default_config() {
  return parse_config(default_config_text());
}

std::vector<const SourceSpec*> SourceSinkConfig::sources_for(const Sig& def) const {
  std::vector<const SourceSpec*> out;
  for (const auto& s : sources)
    if (s.sig == def) out.push_back(&s);
  return out;
}

std::vector<const SinkSpec*> SourceSinkConfig::sinks_for(const Sig& def) const {
  std::vector<const SinkSpec*> out;
  for (const auto& s : sinks)
    if (s.sig == def) out.push_back(&s);
  return out;
}

std::optional<WrapRule> SourceSinkConfig::wrapper_for(const Sig& def) const {
  for (const auto& w : wrappers)
    if (w.sig == def) return w.rule;
  return std::nullopt;
}

void SourceSinkConfig::validate_against(const Program& p) const {
  auto check = [&](const Sig& sig) {
    const MethodDef* m = p.resolve_method(sig.cls, sig.name, sig.arity);
    if (!m) throw AirError("configured signature does not resolve: " + sig.str());
  };
  for (const auto& s : sources) check(s.sig);
  for (const auto& s : sinks) check(s.sig);
  for (const auto& w : wrappers) check(w.sig);
}

}  // namespace bv
