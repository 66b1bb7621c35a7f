#include "cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "zosd/candidates.hpp"
#include "zosd/eval.hpp"
#include "zosd/report.hpp"
#include "zosd/scoring.hpp"
#include "zosd/store.hpp"
#include "zosd/synthetic.hpp"

namespace zosd::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingImage:
    case ErrorCode::MissingDecoderOutput:
    case ErrorCode::MissingTextEmbedding:
    case ErrorCode::Io:
      return kMissingData;
    case ErrorCode::InvalidArgument:
    case ErrorCode::KTooLarge:
    case ErrorCode::InvalidCounts:
    case ErrorCode::InvalidSplit:
    case ErrorCode::OneClassOnly:
    case ErrorCode::EmptySeen:
    case ErrorCode::DuplicateLabel:
    case ErrorCode::BadMagic:
    case ErrorCode::TruncatedFile:
    case ErrorCode::MalformedFile:
    case ErrorCode::DuplicateKey:
    case ErrorCode::NormViolation:
    case ErrorCode::UnsortedPositions:
    case ErrorCode::DimMismatch:
      return kConfigError;
    default:
      return kInternalError;
  }
}

// Raw flag values; unset optionals fall back to the config file, then defaults.
struct Flags {
  std::string config_path;
  std::optional<std::string> images_path;
  std::optional<std::string> text_path;
  std::optional<std::string> logits_path;
  std::vector<std::string> split_paths;
  std::vector<std::string> seen;
  std::optional<std::size_t> k;
  std::optional<double> temperature;
  std::optional<std::string> prompt_template;
  bool no_stopwords = false;
  bool no_dedup_seen = false;
  bool skip_missing = false;
  bool synthetic = false;
  std::optional<std::size_t> dim;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<std::size_t> stored_k;
  std::optional<std::size_t> threads;
  std::optional<std::string> out_dir;
  bool verbose = false;

  std::string image_id;
  std::size_t n_train = 0;
  std::size_t n_target = 0;
  std::size_t n_test = 0;
  std::string dataset = "cifar10";
  std::size_t split_count = 5;
  std::size_t images_per_class = 50;
};

struct RunConfig {
  ScoringConfig scoring;
  bool synthetic = false;
  SyntheticParams synthetic_params;
  std::optional<fs::path> images_path;
  std::optional<fs::path> text_path;
  std::optional<fs::path> logits_path;
  std::vector<fs::path> split_paths;
  std::vector<std::string> seen;
  std::size_t threads = 1;
  std::optional<fs::path> out_dir;
  bool verbose = false;
};

const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {
      "embeddings-images", "embeddings-text", "logits", "split", "seen", "k", "temperature", "template",
      "no-stopwords", "no-dedup-seen", "skip-missing-candidates", "synthetic", "dim", "seed", "epsilon",
      "stored-k", "threads", "out"};
  return keys;
}

template <typename T>
T pick(const std::optional<T>& flag, const json& file, const char* key, T fallback) {
  if (flag) return *flag;
  if (file.contains(key)) {
    try {
      return file.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config key \"") + key + "\" has the wrong type");
    }
  }
  return fallback;
}

bool pick_flag(bool flag, const json& file, const char* key) {
  return flag || pick<bool>(std::nullopt, file, key, false);
}

std::vector<std::string> pick_list(const std::vector<std::string>& flag, const json& file, const char* key) {
  if (!flag.empty()) return flag;
  if (!file.contains(key)) return {};
  const auto& v = file.at(key);
  if (v.is_string()) return {v.get<std::string>()};
  try {
    return v.get<std::vector<std::string>>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key \"") + key + "\" must be a string or list of strings");
  }
}

RunConfig resolve(const Flags& f) {
  json file = json::object();
  if (!f.config_path.empty()) {
    const auto text = read_file(f.config_path);
    try {
      file = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(f.config_path + ": " + e.what());
    }
    if (!file.is_object()) throw ConfigError(f.config_path + ": config must be a JSON object");
    for (const auto& [key, value] : file.items()) {
      if (!config_keys().contains(key)) throw ConfigError(f.config_path + ": unknown key \"" + key + "\"");
    }
  }

  RunConfig rc;
  rc.scoring.k = pick(f.k, file, "k", rc.scoring.k);
  rc.scoring.temperature = pick(f.temperature, file, "temperature", rc.scoring.temperature);
  rc.scoring.prompt_template =
      PromptTemplate(pick(f.prompt_template, file, "template", std::string(PromptTemplate::kDefault)));
  rc.scoring.filter_stopwords = !pick_flag(f.no_stopwords, file, "no-stopwords");
  rc.scoring.dedup_against_seen = !pick_flag(f.no_dedup_seen, file, "no-dedup-seen");
  rc.scoring.skip_missing_candidates = pick_flag(f.skip_missing, file, "skip-missing-candidates");
  rc.scoring.validate();

  rc.synthetic = pick_flag(f.synthetic, file, "synthetic");
  rc.synthetic_params.dim = pick(f.dim, file, "dim", rc.synthetic_params.dim);
  rc.synthetic_params.seed = pick(f.seed, file, "seed", rc.synthetic_params.seed);
  rc.synthetic_params.epsilon = pick(f.epsilon, file, "epsilon", rc.synthetic_params.epsilon);
  rc.synthetic_params.stored_k = pick(f.stored_k, file, "stored-k", rc.synthetic_params.stored_k);
  rc.synthetic_params.prompt_template = rc.scoring.prompt_template;
  rc.synthetic_params.validate();

  auto path_of = [&](const std::optional<std::string>& flag, const char* key) -> std::optional<fs::path> {
    auto v = pick<std::string>(flag, file, key, "");
    if (v.empty()) return std::nullopt;
    return fs::path(v);
  };
  rc.images_path = path_of(f.images_path, "embeddings-images");
  rc.text_path = path_of(f.text_path, "embeddings-text");
  rc.logits_path = path_of(f.logits_path, "logits");
  for (const auto& p : pick_list(f.split_paths, file, "split")) rc.split_paths.emplace_back(p);
  rc.seen = pick_list(f.seen, file, "seen");
  const auto hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  rc.threads = pick(f.threads, file, "threads", hw);
  if (rc.threads == 0) throw ConfigError("--threads must be at least 1");
  rc.out_dir = path_of(f.out_dir, "out");
  rc.verbose = f.verbose;
  return rc;
}

struct Workspace {
  std::vector<SplitSpec> splits;
  std::unique_ptr<EmbeddingBackend> backend;
  CandidateStore candidates;
  BackendInfo info;
};

std::vector<SplitSpec> load_splits(const RunConfig& rc) {
  std::vector<SplitSpec> splits;
  for (const auto& p : rc.split_paths) splits.push_back(read_split(p));
  return splits;
}

Workspace open_workspace(const RunConfig& rc) {
  const bool any_file = rc.images_path || rc.text_path || rc.logits_path;
  if (rc.synthetic == any_file) {
    throw ConfigError(rc.synthetic
                          ? "--synthetic cannot be combined with --embeddings-images/--embeddings-text/--logits"
                          : "select a backend: --synthetic, or --embeddings-images, --embeddings-text and --logits");
  }
  Workspace ws;
  ws.splits = load_splits(rc);
  if (rc.synthetic) {
    if (ws.splits.empty()) throw ConfigError("--synthetic needs at least one --split to know image classes");
    ws.backend = std::make_unique<SyntheticBackend>(rc.synthetic_params, image_classes(ws.splits));
    ws.candidates = synthetic_candidates(ws.splits, rc.synthetic_params);
    ws.info = {true, rc.synthetic_params.dim, rc.synthetic_params.seed, rc.synthetic_params.epsilon};
  } else {
    if (!rc.images_path || !rc.text_path || !rc.logits_path) {
      throw ConfigError("file mode needs --embeddings-images, --embeddings-text and --logits");
    }
    ws.backend = std::make_unique<StoreBackend>(read_store(*rc.images_path), read_store(*rc.text_path));
    ws.candidates = read_candidates(*rc.logits_path);
    ws.info = {};
  }
  return ws;
}

std::vector<Label> seen_for(const RunConfig& rc, const Workspace& ws, std::string_view image_id, bool required) {
  if (!rc.seen.empty()) return seen_labels(rc.seen);
  for (const auto& s : ws.splits) {
    for (const auto& img : s.images) {
      if (img.id == image_id) return seen_labels(s.seen_classes);
    }
  }
  if (!ws.splits.empty()) return seen_labels(ws.splits.front().seen_classes);
  if (required) throw ConfigError("no seen labels: pass --seen or --split");
  return {};
}

void log_diagnostics(spdlog::logger& log, std::span<const Diagnostic> diagnostics) {
  for (const auto& d : diagnostics) log.warn("{}: {} {}", d.image_id, to_string(d.kind), d.detail);
}

int cmd_score(const RunConfig& rc, const Flags& f, std::ostream& out, spdlog::logger& log) {
  auto ws = open_workspace(rc);
  const auto seen = seen_for(rc, ws, f.image_id, true);
  const auto result = run_inference(f.image_id, seen, *ws.backend, ws.candidates, rc.scoring, StopList::english());
  log_diagnostics(log, result.diagnostics);
  out << score_summary_to_json(summarize(result, ws.info, rc.verbose));
  return kOk;
}

int cmd_evaluate(const RunConfig& rc, std::ostream& out, spdlog::logger& log) {
  if (rc.split_paths.empty()) throw ConfigError("evaluate needs at least one --split");
  if (!rc.out_dir) throw ConfigError("evaluate needs --out DIR");
  auto ws = open_workspace(rc);

  EvalOptions options;
  options.threads = rc.threads;
  std::vector<SplitEvaluation> evaluations;
  for (const auto& split : ws.splits) {
    log.info("evaluating {} ({} images)", split.name, split.images.size());
    evaluations.push_back(evaluate(split, *ws.backend, ws.candidates, rc.scoring, StopList::english(), options));
    log_diagnostics(log, evaluations.back().diagnostics);
  }
  const auto report = make_report(std::move(evaluations), rc.scoring, options.histogram_bins);

  // Everything is computed before the first byte is written.
  const auto json_text = eval_report_to_json(report, ws.info);
  const auto summary_csv = eval_report_csv(report);
  const auto hist_csv = histogram_csv(report);
  const auto scores_csv = image_scores_csv(report);
  std::error_code ec;
  fs::create_directories(*rc.out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + rc.out_dir->string());
  write_file_atomic(*rc.out_dir / "report.json", json_text);
  write_file_atomic(*rc.out_dir / "report.csv", summary_csv);
  write_file_atomic(*rc.out_dir / "histograms.csv", hist_csv);
  write_file_atomic(*rc.out_dir / "scores.csv", scores_csv);

  char line[160];
  std::snprintf(line, sizeof line, "zo_clip AUROC %.4f +/- %.4f | msp AUROC %.4f +/- %.4f | %zu split(s)\n",
                report.zo_clip.mean_auroc, report.zo_clip.std_auroc, report.msp.mean_auroc, report.msp.std_auroc,
                report.splits.size());
  out << line;
  return kOk;
}

int cmd_openness(const Flags& f, std::ostream& out) {
  // Two decimals, truncated rather than rounded: the published benchmark figures
  // (13.39, 57.35, ...) are truncations, and rounding would print 13.40 and 57.36.
  // The epsilon absorbs representation error in values like 33.33...
  const double pct = std::trunc(openness(f.n_train, f.n_target, f.n_test) * 100.0 + 1e-9) / 100.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f\n", pct);
  out << buf;
  return kOk;
}

int cmd_candidates(const RunConfig& rc, const Flags& f, std::ostream& out) {
  auto ws = open_workspace(rc);
  const auto* decoded = ws.candidates.find(f.image_id);
  if (decoded == nullptr) {
    throw Error(ErrorCode::MissingDecoderOutput, "no decoder output for image \"" + f.image_id + "\"");
  }
  const auto seen = seen_for(rc, ws, f.image_id, false);
  const auto set = extract_candidates(*decoded, rc.scoring, StopList::english(), seen);
  for (const auto& c : set.candidates) out << c.label.name << '\t' << format_double(c.best_logprob) << '\n';
  return kOk;
}

int cmd_splits(const RunConfig& rc, const Flags& f, std::ostream& out) {
  if (!rc.out_dir) throw ConfigError("splits needs --out DIR");
  std::vector<SplitSpec> splits;
  if (f.dataset == "cifar10") {
    splits = cifar10_splits(f.split_count, f.images_per_class, rc.synthetic_params.seed);
  } else if (f.dataset == "cifar100") {
    splits = cifar100_splits(f.images_per_class);
  } else {
    throw ConfigError("unknown dataset \"" + f.dataset + "\" (expected cifar10 or cifar100)");
  }
  std::error_code ec;
  fs::create_directories(*rc.out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + rc.out_dir->string());
  for (const auto& s : splits) {
    const auto path = *rc.out_dir / (s.name + ".json");
    write_split(s, path);
    out << path.string() << '\n';
  }
  return kOk;
}

int cmd_export_synthetic(const RunConfig& rc, std::ostream& out) {
  if (rc.split_paths.empty()) throw ConfigError("export-synthetic needs at least one --split");
  if (!rc.out_dir) throw ConfigError("export-synthetic needs --out DIR");
  const auto splits = load_splits(rc);
  const auto exported = export_synthetic(splits, rc.synthetic_params);
  std::error_code ec;
  fs::create_directories(*rc.out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + rc.out_dir->string());
  write_store(exported.images, *rc.out_dir / "images.zemb");
  write_store(exported.text, *rc.out_dir / "text.zemb");
  write_candidates(exported.candidates, *rc.out_dir / "logits.jsonl");
  out << "images: " << exported.images.size() << ", prompts: " << exported.text.size()
      << ", decoder outputs: " << exported.candidates.size() << '\n';
  return kOk;
}

void add_backend_options(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config_path, "JSON config file; flags override it");
  app->add_option("--embeddings-images", f.images_path, "Image embedding store");
  app->add_option("--embeddings-text", f.text_path, "Prompt embedding store");
  app->add_option("--logits", f.logits_path, "Candidate logits JSONL");
  app->add_option("--split", f.split_paths, "Split file(s)");
  app->add_flag("--synthetic", f.synthetic, "Use the deterministic synthetic backend");
  app->add_option("--dim", f.dim, "Synthetic embedding width (default 512)");
  app->add_option("--seed", f.seed, "Synthetic seed (default 42)");
  app->add_option("--epsilon", f.epsilon, "Synthetic image noise weight in [0,1] (default 0.1)");
  app->add_option("--stored-k", f.stored_k, "Synthetic decoder entries per position (default 35)");
}

void add_scoring_options(CLI::App* app, Flags& f) {
  app->add_option("--k", f.k, "Top-k words per decoder position (default 35)");
  app->add_option("--temperature", f.temperature, "Logit multiplier before softmax (default 100)");
  app->add_option("--template", f.prompt_template, "Prompt template with one {} marker");
  app->add_flag("--no-stopwords", f.no_stopwords, "Keep stop words among candidates");
  app->add_flag("--no-dedup-seen", f.no_dedup_seen, "Keep candidates that repeat a seen label");
  app->add_flag("--skip-missing-candidates", f.skip_missing, "Drop candidates without a prompt embedding");
  app->add_option("--seen", f.seen, "Seen label names (default: from the split)")->delimiter(',');
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("zosd", sink);
  log->set_pattern("[%l] %v");
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("ZOSD_LOG")) level = spdlog::level::from_str(env);
  log->set_level(level);
  return log;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Zero-shot open-set detection: candidate labels, open-set scores and AUROC evaluation", "zosd"};
  app.require_subcommand(1);

  auto* score = app.add_subcommand("score", "Score one image and print the result as JSON");
  score->add_option("image_id", f.image_id, "Image id")->required();
  score->add_flag("--verbose", f.verbose, "Include the full distribution");
  add_backend_options(score, f);
  add_scoring_options(score, f);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate splits and write report.json/report.csv/histograms.csv");
  add_backend_options(evaluate_cmd, f);
  add_scoring_options(evaluate_cmd, f);
  evaluate_cmd->add_option("--threads", f.threads, "Worker threads (output is identical for any value)");
  evaluate_cmd->add_option("--out", f.out_dir, "Output directory");

  auto* openness_cmd = app.add_subcommand("openness", "Print the openness percentage");
  openness_cmd->add_option("n_train", f.n_train)->required();
  openness_cmd->add_option("n_target", f.n_target)->required();
  openness_cmd->add_option("n_test", f.n_test)->required();

  auto* candidates_cmd = app.add_subcommand("candidates", "Print an image's candidate unseen labels");
  candidates_cmd->add_option("image_id", f.image_id, "Image id")->required();
  add_backend_options(candidates_cmd, f);
  add_scoring_options(candidates_cmd, f);

  auto* splits_cmd = app.add_subcommand("splits", "Write benchmark split files");
  splits_cmd->add_option("--dataset", f.dataset, "cifar10 or cifar100")->capture_default_str();
  splits_cmd->add_option("--count", f.split_count, "Number of cifar10 splits")->capture_default_str();
  splits_cmd->add_option("--images-per-class", f.images_per_class)->capture_default_str();
  splits_cmd->add_option("--seed", f.seed, "Split shuffle seed (default 42)");
  splits_cmd->add_option("--out", f.out_dir, "Output directory");

  auto* export_cmd = app.add_subcommand("export-synthetic", "Write synthetic embedding stores and logits for splits");
  add_backend_options(export_cmd, f);
  export_cmd->add_option("--template", f.prompt_template, "Prompt template with one {} marker");
  export_cmd->add_option("--out", f.out_dir, "Output directory");

  auto log = make_logger(err);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (openness_cmd->parsed()) return cmd_openness(f, out);
    const auto rc = resolve(f);
    if (score->parsed()) return cmd_score(rc, f, out, *log);
    if (evaluate_cmd->parsed()) return cmd_evaluate(rc, out, *log);
    if (candidates_cmd->parsed()) return cmd_candidates(rc, f, out);
    if (splits_cmd->parsed()) return cmd_splits(rc, f, out);
    if (export_cmd->parsed()) return cmd_export_synthetic(rc, out);
    err << "error: no command\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace zosd::cli
