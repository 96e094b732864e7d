#include "polyfuse/cli/config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "polyfuse/core/error.hpp"

namespace polyfuse::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorCode::ConfigError, message); }

void collect_leaves(const json& node, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [k, v] : node.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object())
      collect_leaves(v, key, out);
    else
      out.push_back(key);
  }
}

json::json_pointer pointer(const std::string& key) {
  std::string p;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    p += "/" + key.substr(start, dot - start);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return json::json_pointer(p);
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

json infer_scalar(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  long long i = 0;
  if (auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i); ec == std::errc() && p == s.data() + s.size())
    return i;
  double d = 0.0;
  if (auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d); ec == std::errc() && p == s.data() + s.size())
    return d;
  return s;
}

json convert_scalar(const json& like, const std::string& raw, const std::string& key) {
  const std::string s = trim(raw);
  const auto bad = [&](const char* expected) -> json {
    config_error("config key '" + key + "' expects " + expected + ", got '" + raw + "'");
  };
  if (like.is_boolean()) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    return bad("a boolean");
  }
  if (like.is_number_unsigned()) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return bad("a non-negative integer");
    return v;
  }
  if (like.is_number_integer()) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return bad("an integer");
    return v;
  }
  if (like.is_number_float()) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return bad("a number");
    return v;
  }
  if (like.is_string()) return raw;
  return infer_scalar(s);
}

/// Converts the textual inputs of one key to the type of its default value.
json convert(const json& like, const std::vector<std::string>& inputs, const std::string& key) {
  if (like.is_array()) {
    if (inputs.size() == 1 && !trim(inputs[0]).empty() && trim(inputs[0]).front() == '[') {
      json parsed = json::parse(inputs[0], nullptr, false);
      if (parsed.is_discarded() || !parsed.is_array()) config_error("config key '" + key + "' expects a JSON array");
      return parsed;
    }
    json out = json::array();
    const json element = like.empty() ? json() : like.front();
    for (const auto& in : inputs) out.push_back(convert_scalar(element, in, key));
    return out;
  }
  if (inputs.size() != 1) config_error("config key '" + key + "' expects a single value");
  return convert_scalar(like, inputs[0], key);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  if (trim(value).empty()) return out;
  if (trim(value).front() == '[') return {value};
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    out.push_back(trim(value.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

class TreeBuilder {
 public:
  TreeBuilder() : tree_(default_tree()) {
    std::vector<std::string> keys;
    collect_leaves(tree_, "", keys);
    keys_.insert(keys.begin(), keys.end());
  }

  void apply(const std::string& key, const std::vector<std::string>& inputs, const std::string& source) {
    if (!keys_.contains(key)) config_error("unknown config key '" + key + "' (" + source + ")");
    json& slot = tree_[pointer(key)];
    slot = convert(slot, inputs, key);
  }

  void apply_text(const std::string& key, const std::string& value, const std::string& source) {
    if (!keys_.contains(key)) config_error("unknown config key '" + key + "' (" + source + ")");
    const json& slot = tree_[pointer(key)];
    apply(key, slot.is_array() ? split_list(value) : std::vector<std::string>{value}, source);
  }

  std::string key_for_environment(const std::string& name) const {
    for (const auto& k : keys_)
      if (environment_name(k) == name) return k;
    config_error("unknown environment override " + name);
  }

  json take() { return std::move(tree_); }

 private:
  json tree_;
  std::set<std::string> keys_;
};

fs::path absolute_under(const fs::path& root, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return (path.is_absolute() ? path : root / path).lexically_normal();
}

template <class T>
T get(const json& tree, const std::string& key) {
  try {
    return tree.at(pointer(key)).get<T>();
  } catch (const json::exception& e) {
    config_error("config key '" + key + "': " + e.what());
  }
}

std::vector<eval::Configuration> configurations_from(const std::vector<std::string>& sets,
                                                     const std::vector<std::string>& strategies) {
  std::vector<eval::FusionStrategy> parsed;
  for (const auto& s : strategies) {
    const auto strategy = eval::parse_fusion_strategy(s);
    if (strategy == eval::FusionStrategy::unimodal)
      config_error("protocol.strategies lists fusion strategies (early, late)");
    parsed.push_back(strategy);
  }
  if (parsed.empty()) config_error("protocol.strategies must not be empty");
  std::vector<eval::Configuration> out;
  const auto add = [&](const eval::Configuration& c) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  };
  for (const auto& s : sets) {
    const auto set = ModalitySet::parse(s);
    if (set.is_singleton()) add(eval::make_configuration(set, parsed.front()));
  }
  for (auto strategy : parsed)
    for (const auto& s : sets) {
      const auto set = ModalitySet::parse(s);
      if (!set.is_singleton()) add(eval::make_configuration(set, strategy));
    }
  if (out.empty()) config_error("protocol.sets must not be empty");
  return out;
}

}  // namespace

json default_tree() {
  const pipeline::SynthOptions synth;
  json pipeline_tree = pipeline::PipelineSettings{}.to_json();
  pipeline_tree["text"].erase("embeddings");  // paths.embeddings
  json models = eval::ModelSettings{}.to_json();
  models["visual"].erase("input");  // taken from pipeline.visual
  std::vector<std::string> sets;
  for (const auto& s : table_order()) sets.push_back(s.to_string());
  return {
      {"paths",
       {{"manifest", "manifest.jsonl"},
        {"media_root", ""},
        {"cache", "cache"},
        {"output", "output"},
        {"embeddings", "embeddings.vec"},
        {"synth_output", "."},
        {"annotation_log", "annotations/log.jsonl"},
        {"annotation_static", ""}}},
      {"split", {{"train", 0.6}, {"validation", 0.1}, {"test", 0.3}, {"seed", std::uint64_t{1}}}},
      {"features", {{"workers", 1}, {"modalities", {"T", "A", "V"}}}},
      {"pipeline", pipeline_tree},
      {"models", models},
      {"protocol", {{"seed", std::uint64_t{7}}, {"strategies", {"early"}}, {"sets", sets}}},
      {"report", {{"format", "text"}}},
      {"synth",
       {{"scenario", std::string(pipeline::to_string(synth.scenario))},
        {"utterances", synth.utterances},
        {"speakers", synth.speakers},
        {"seed", synth.seed},
        {"modality_noise", synth.modality_noise},
        {"utterance_seconds", synth.utterance_seconds},
        {"gap_seconds", synth.gap_seconds},
        {"annotators", synth.annotators},
        {"frame_width", synth.frame_width},
        {"frame_height", synth.frame_height},
        {"fps", synth.fps},
        {"sample_rate", synth.sample_rate},
        {"embedding_dim", synth.embedding_dim}}},
      {"annotation", {{"host", "127.0.0.1"}, {"port", 8080}, {"annotators", {"a1", "a2", "a3"}}}},
  };
}

std::string environment_name(const std::string& key) {
  std::string out = "POLYFUSE_";
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::pair<std::string, std::string> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) config_error("expected section.key=value, got '" + text + "'");
  return {trim(text.substr(0, eq)), text.substr(eq + 1)};
}

void ensure_writable_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) config_error("cannot create directory " + dir.string());
  const fs::path probe = dir / ".polyfuse_write_probe";
  {
    std::ofstream f(probe);
    if (!f) config_error("directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

RunConfig build_config(const fs::path& root_in, const ConfigSources& sources) {
  TreeBuilder builder;
  if (sources.file) {
    std::ifstream in(*sources.file);
    if (!in) config_error("cannot read config file " + sources.file->string());
    std::vector<CLI::ConfigItem> items;
    try {
      items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::Error& e) {
      config_error("malformed config file " + sources.file->string() + ": " + e.what());
    }
    for (const auto& item : items) {
      if (item.name == "++" || item.name == "--") continue;
      builder.apply(item.fullname(), item.inputs, sources.file->filename().string());
    }
  }
  for (const auto& [name, value] : sources.environment) {
    if (!name.starts_with("POLYFUSE_") || name == "POLYFUSE_ROOT" || name == "POLYFUSE_CONFIG") continue;
    builder.apply_text(builder.key_for_environment(name), value, name);
  }
  for (const auto& [key, value] : sources.overrides) builder.apply_text(key, value, "command line");

  RunConfig c;
  c.tree = builder.take();
  const json& t = c.tree;
  c.root = fs::absolute(root_in).lexically_normal();

  const auto path_of = [&](const std::string& key) { return absolute_under(c.root, get<std::string>(t, key)); };
  c.paths = {path_of("paths.manifest"),       path_of("paths.media_root"),     path_of("paths.cache"),
             path_of("paths.output"),         path_of("paths.synth_output"),   path_of("paths.annotation_log"),
             path_of("paths.annotation_static")};
  for (const char* key : {"paths.manifest", "paths.cache", "paths.output", "paths.synth_output", "paths.annotation_log"})
    if (get<std::string>(t, key).empty()) config_error(std::string("config key '") + key + "' must not be empty");

  c.ratios = {get<double>(t, "split.train"), get<double>(t, "split.validation"), get<double>(t, "split.test")};
  for (double r : c.ratios.as_array())
    if (r < 0.0 || r > 1.0) config_error("split ratios must lie in [0, 1]");
  const double sum = c.ratios.train + c.ratios.validation + c.ratios.test;
  if (std::abs(sum - 1.0) > 1e-9) config_error("split ratios must sum to 1, got " + std::to_string(sum));
  c.split_seed = get<std::uint64_t>(t, "split.seed");

  c.workers = get<int>(t, "features.workers");
  if (c.workers < 1) config_error("features.workers must be at least 1");
  for (const auto& m : get<std::vector<std::string>>(t, "features.modalities")) {
    const Modality parsed = parse_modality(m);
    if (std::find(c.feature_modalities.begin(), c.feature_modalities.end(), parsed) == c.feature_modalities.end())
      c.feature_modalities.push_back(parsed);
  }

  try {
    c.pipeline = pipeline::PipelineSettings::from_json(t.at("pipeline"));
    c.models = eval::ModelSettings::from_json(t.at("models"));
  } catch (const json::exception& e) {
    config_error(std::string("invalid pipeline or model settings: ") + e.what());
  }
  c.pipeline.embeddings = path_of("paths.embeddings");
  c.models.visual.input = c.pipeline.visual;
  if (c.models.visual_micro_batch < 1) config_error("models.visual_micro_batch must be at least 1");

  c.configurations = configurations_from(get<std::vector<std::string>>(t, "protocol.sets"),
                                         get<std::vector<std::string>>(t, "protocol.strategies"));
  c.protocol_seed = get<std::uint64_t>(t, "protocol.seed");
  c.report_format = eval::parse_report_format(get<std::string>(t, "report.format"));

  auto& s = c.synth;
  s.scenario = pipeline::parse_scenario(get<std::string>(t, "synth.scenario"));
  s.utterances = get<int>(t, "synth.utterances");
  s.speakers = get<int>(t, "synth.speakers");
  s.seed = get<std::uint64_t>(t, "synth.seed");
  s.modality_noise = get<double>(t, "synth.modality_noise");
  s.utterance_seconds = get<double>(t, "synth.utterance_seconds");
  s.gap_seconds = get<double>(t, "synth.gap_seconds");
  s.annotators = get<int>(t, "synth.annotators");
  s.frame_width = get<int>(t, "synth.frame_width");
  s.frame_height = get<int>(t, "synth.frame_height");
  s.fps = get<double>(t, "synth.fps");
  s.sample_rate = get<int>(t, "synth.sample_rate");
  s.embedding_dim = get<int>(t, "synth.embedding_dim");

  c.annotation.host = get<std::string>(t, "annotation.host");
  c.annotation.port = get<int>(t, "annotation.port");
  if (c.annotation.port < 0 || c.annotation.port > 65535) config_error("annotation.port must lie in [0, 65535]");
  c.annotation.annotators = get<std::vector<std::string>>(t, "annotation.annotators");
  std::set<std::string> unique(c.annotation.annotators.begin(), c.annotation.annotators.end());
  if (unique.empty() || unique.size() != c.annotation.annotators.size() || unique.contains(""))
    config_error("annotation.annotators must be non-empty and unique");
  return c;
}

}  // namespace polyfuse::cli
