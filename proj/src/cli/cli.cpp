#include "polyfuse/cli/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <optional>

#include "polyfuse/annotation/server.hpp"
#include "polyfuse/annotation/store.hpp"
#include "polyfuse/cli/config.hpp"
#include "polyfuse/core/error.hpp"
#include "polyfuse/core/tensor_file.hpp"
#include "polyfuse/corpus/labels.hpp"
#include "polyfuse/corpus/manifest.hpp"
#include "polyfuse/corpus/statistics.hpp"
#include "polyfuse/corpus/splits.hpp"
#include "polyfuse/eval/protocol.hpp"
#include "polyfuse/pipeline/feature_cache.hpp"
#include "polyfuse/pipeline/synth.hpp"

extern char** environ;

namespace polyfuse::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kEffectiveConfig = "effective_config.json";

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

corpus::CorpusManifest load_corpus(const RunConfig& c) {
  if (c.paths.media_root.empty()) return corpus::load_manifest(c.paths.manifest);
  corpus::CorpusManifest m = corpus::load_manifest(c.paths.manifest, {.verify_media = false});
  m.base_dir = c.paths.media_root;
  corpus::validate(m);
  return m;
}

int cmd_ingest(const RunConfig& c, std::ostream& out) {
  const corpus::CorpusManifest m = load_corpus(c);
  const corpus::CorpusManifest resolved = corpus::resolve_labels(m);
  const corpus::StatisticsReport stats = corpus::compute_statistics(resolved);
  out << "manifest " << c.paths.manifest.string() << ": " << m.videos.size() << " videos, " << m.utterances.size()
      << " utterances, " << m.annotations.size() << " annotation records\n";
  out << corpus::render_statistics(stats);
  ensure_writable_directory(c.paths.output);
  write_text(c.paths.output / "statistics.json", pretty(corpus::to_json(stats)));
  return 0;
}

int cmd_features(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const corpus::CorpusManifest m = load_corpus(c);
  ensure_writable_directory(c.paths.cache);
  ensure_writable_directory(c.paths.output);
  const pipeline::FeatureCache cache(c.paths.cache, c.pipeline);
  json reports = json::array();
  std::size_t failures = 0;
  for (Modality modality : c.feature_modalities) {
    const auto report = cache.build(m, modality, c.workers);
    out << name(modality) << ": built " << report.built << ", skipped " << report.skipped << ", failed "
        << report.failures.size() << " (" << report.pipeline_version << ")\n";
    for (const auto& f : report.failures)
      err << "  " << f.utterance_id << ": " << to_string(f.code) << ": " << f.message << "\n";
    failures += report.failures.size();
    reports.push_back(report.to_json());
  }
  write_text(c.paths.output / "features_report.json", pretty(reports));
  return failures == 0 ? 0 : 3;
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err, bool quiet) {
  const corpus::CorpusManifest m = load_corpus(c);
  ensure_writable_directory(c.paths.output);
  const pipeline::FeatureCache cache(c.paths.cache, c.pipeline);
  const corpus::SplitAssignment split = corpus::make_splits(m, c.ratios, c.split_seed);
  const fs::path artifacts = c.paths.output / "artifacts";
  write_text(c.paths.output / kEffectiveConfig, pretty(c.tree));
  write_text(c.paths.output / "split.json", pretty(corpus::to_json(split)));

  eval::ProtocolOptions options;
  options.seed = c.protocol_seed;
  options.artifacts_dir = artifacts;
  if (!quiet) options.log = [&err](const std::string& line) { err << line << "\n"; };
  const eval::EvaluationReport report = eval::run_protocol(m, split, c.configurations, cache, c.models, options);
  for (const auto& cfg : c.configurations)
    write_text(artifacts / eval::artifact_name(cfg) / kEffectiveConfig, pretty(c.tree));
  write_text(c.paths.output / "report.json", pretty(eval::to_json(report)));
  out << eval::render_report(report, eval::ReportFormat::text_table, c.configurations);
  return 0;
}

corpus::SplitAssignment read_split(const RunConfig& c) {
  const fs::path path = c.paths.output / "split.json";
  if (!fs::exists(path)) throw Error(ErrorCode::IoError, "no split at " + path.string() + "; run train first");
  const auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::IoError, "malformed split file " + path.string());
  return corpus::split_from_json(j);
}

int cmd_evaluate(const RunConfig& c, std::ostream& out) {
  const corpus::CorpusManifest m = load_corpus(c);
  const pipeline::FeatureCache cache(c.paths.cache, c.pipeline);
  const corpus::SplitAssignment split = read_split(c);
  const eval::EvaluationReport report =
      eval::evaluate_artifacts(m, split, c.configurations, cache, c.paths.output / "artifacts");
  write_text(c.paths.output / "evaluation.json", pretty(eval::to_json(report)));
  out << eval::render_report(report, eval::ReportFormat::text_table, c.configurations);
  return 0;
}

int cmd_report(const RunConfig& c, const std::optional<std::string>& input, std::ostream& out) {
  const fs::path path = input ? fs::absolute(c.root / *input) : c.paths.output / "report.json";
  if (!fs::exists(path)) throw Error(ErrorCode::IoError, "no report at " + path.string());
  const auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::IoError, "malformed report " + path.string());
  const eval::EvaluationReport report = eval::report_from_json(j);
  const std::string rendered = eval::render_report(report, c.report_format, c.configurations);
  const bool as_json = c.report_format == eval::ReportFormat::json;
  write_text(c.paths.output / (as_json ? "rendered_report.json" : "rendered_report.txt"), rendered);
  out << rendered;
  return 0;
}

int cmd_synth(const RunConfig& c, std::ostream& out) {
  ensure_writable_directory(c.paths.synth_output);
  const pipeline::SynthCorpus corpus = pipeline::generate_corpus(c.paths.synth_output, c.synth);
  write_text(c.paths.synth_output / "synth_config.json", pretty(c.tree.at("synth")));
  out << "wrote " << to_string(c.synth.scenario) << " corpus: " << corpus.manifest.utterances.size()
      << " utterances, " << corpus.manifest.videos.size() << " videos -> " << corpus.manifest_path.string() << "\n";
  return 0;
}

int cmd_serve(const RunConfig& c, std::ostream& out) {
  const corpus::CorpusManifest m = load_corpus(c);
  fs::create_directories(c.paths.annotation_log.parent_path());
  annotation::AnnotationStore store(m, c.annotation.annotators, c.paths.annotation_log);
  annotation::AnnotationServer server(store, c.paths.annotation_static);
  int port = c.annotation.port;
  if (port == 0) {
    port = server.bind_any_port(c.annotation.host);
    if (port < 0) throw Error(ErrorCode::IoError, "cannot bind " + c.annotation.host);
  } else if (!server.bind(c.annotation.host, port)) {
    throw Error(ErrorCode::IoError, "cannot bind " + c.annotation.host + ":" + std::to_string(port));
  }
  out << "serving annotations for " << m.utterances.size() << " utterances on http://" << c.annotation.host << ":"
      << port << std::endl;
  server.listen_after_bind();
  return 0;
}

int exit_code(ErrorCode code) {
  switch (category(code)) {
    case ErrorCategory::validation:
      return 2;
    case ErrorCategory::media:
      return 3;
    case ErrorCategory::training:
      return 4;
    case ErrorCategory::other:
      break;
  }
  return 1;
}

}  // namespace

std::map<std::string, std::string> process_environment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq != std::string::npos && entry.starts_with("POLYFUSE_")) env[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return env;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const std::map<std::string, std::string>& environment) {
  CLI::App app{"Multimodal sentiment toolkit: corpus ingestion, features, training, reports, annotation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string root;
  std::string config_file;
  std::vector<std::string> assignments;
  bool quiet = false;
  app.add_option("--root", root, "Directory that relative paths refer to (POLYFUSE_ROOT)");
  app.add_option("--config", config_file, "TOML-style config file (POLYFUSE_CONFIG; default <root>/polyfuse.toml)");
  app.add_option("--set", assignments, "Override a config key: section.key=value")->take_all();
  app.add_flag("--quiet,-q", quiet, "Suppress progress output");

  std::vector<std::pair<std::string, std::string>> flagged;
  const auto bind = [&flagged](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(flag, [&flagged, key](const std::string& v) { flagged.emplace_back(key, v); },
                                          help);
  };
  const auto bind_list = [&flagged](CLI::App* sub, const std::string& flag, const std::string& key,
                                    const std::string& help) {
    sub->add_option_function<std::vector<std::string>>(
        flag,
        [&flagged, key](const std::vector<std::string>& v) {
          std::string joined;
          for (const auto& s : v) joined += (joined.empty() ? "" : ",") + s;
          flagged.emplace_back(key, joined);
        },
        help);
  };

  auto* ingest = app.add_subcommand("ingest", "Validate a manifest and print corpus statistics");
  bind(ingest, "--manifest", "paths.manifest", "Manifest path");

  auto* features = app.add_subcommand("features", "Build or refresh the per-utterance feature cache");
  bind(features, "--manifest", "paths.manifest", "Manifest path");
  bind_list(features, "--modality,-m", "features.modalities", "Modalities to extract (T, A, V)");
  bind(features, "--workers,-j", "features.workers", "Worker threads");

  auto* train = app.add_subcommand("train", "Train and evaluate every configured modality set");
  bind(train, "--seed", "protocol.seed", "Base seed for model initialization");
  bind_list(train, "--strategy", "protocol.strategies", "Fusion strategies for multimodal sets (early, late)");
  bind_list(train, "--sets", "protocol.sets", "Modality sets, e.g. T A+V+T");
  bind(train, "--output,-o", "paths.output", "Output directory");

  auto* evaluate = app.add_subcommand("evaluate", "Re-evaluate saved artifacts on the test split");
  bind_list(evaluate, "--strategy", "protocol.strategies", "Fusion strategies for multimodal sets (early, late)");
  bind(evaluate, "--output,-o", "paths.output", "Output directory");

  auto* report = app.add_subcommand("report", "Render a saved evaluation report");
  std::optional<std::string> report_input;
  report->add_option("--input,-i", report_input, "Report JSON (default <output>/report.json)");
  bind(report, "--format,-f", "report.format", "text or json");
  bind_list(report, "--strategy", "protocol.strategies", "Fusion strategies of the rows to render");
  bind(report, "--output,-o", "paths.output", "Output directory");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with media");
  bind(synth, "--scenario", "synth.scenario", "separable, xor_correlated or ramp_temporal");
  bind(synth, "--utterances,-n", "synth.utterances", "Number of utterances");
  bind(synth, "--speakers", "synth.speakers", "Number of speakers");
  bind(synth, "--seed", "synth.seed", "Generator seed");
  bind(synth, "--noise", "synth.modality_noise", "Probability that each modality's cue is flipped");
  bind(synth, "--out", "paths.synth_output", "Output directory");

  auto* serve = app.add_subcommand("serve-annotations", "Serve the annotation HTTP API");
  bind(serve, "--host", "annotation.host", "Interface to bind");
  bind(serve, "--port", "annotation.port", "Port (0 picks a free port)");
  bind_list(serve, "--annotator", "annotation.annotators", "Registered annotator ids");
  bind(serve, "--log", "paths.annotation_log", "Annotation log file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (root.empty()) root = environment.contains("POLYFUSE_ROOT") ? environment.at("POLYFUSE_ROOT") : ".";
    if (config_file.empty() && environment.contains("POLYFUSE_CONFIG")) config_file = environment.at("POLYFUSE_CONFIG");
    ConfigSources sources;
    sources.environment = environment;
    if (!config_file.empty()) {
      const fs::path p(config_file);
      sources.file = p.is_absolute() ? p : fs::path(root) / p;
    } else if (fs::exists(fs::path(root) / "polyfuse.toml")) {
      sources.file = fs::path(root) / "polyfuse.toml";
    }
    for (const auto& a : assignments) sources.overrides.push_back(parse_assignment(a));
    sources.overrides.insert(sources.overrides.end(), flagged.begin(), flagged.end());
    const RunConfig config = build_config(root, sources);

    if (ingest->parsed()) return cmd_ingest(config, out);
    if (features->parsed()) return cmd_features(config, out, err);
    if (train->parsed()) return cmd_train(config, out, err, quiet);
    if (evaluate->parsed()) return cmd_evaluate(config, out);
    if (report->parsed()) return cmd_report(config, report_input, out);
    if (synth->parsed()) return cmd_synth(config, out);
    if (serve->parsed()) return cmd_serve(config, out);
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace polyfuse::cli
