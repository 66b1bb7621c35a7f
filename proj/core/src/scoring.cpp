#include "zosd/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <thread>
#include <unordered_set>

#include "zosd/text.hpp"

namespace zosd {
namespace {

void check_unique(std::span<const Label> labels, LabelKind kind, std::unordered_set<std::string>& keys) {
  for (const auto& l : labels) {
    if (l.kind != kind) {
      throw Error(ErrorCode::InvalidArgument, "label \"" + l.name + "\" should be " + std::string(to_string(kind)));
    }
    if (l.name.empty()) throw Error(ErrorCode::InvalidArgument, "label name is empty");
    if (!keys.insert(fold_key(l.name)).second) {
      throw Error(ErrorCode::DuplicateLabel, "label \"" + l.name + "\" appears twice");
    }
  }
}

}  // namespace

LabelSpace::LabelSpace(std::vector<Label> seen, std::vector<Label> generated, bool allow_seen_overlap)
    : seen_(std::move(seen)), generated_(std::move(generated)) {
  if (seen_.empty()) throw Error(ErrorCode::EmptySeen, "at least one seen label is required");
  std::unordered_set<std::string> seen_keys;
  check_unique(seen_, LabelKind::Seen, seen_keys);
  std::unordered_set<std::string> generated_keys = allow_seen_overlap ? std::unordered_set<std::string>{} : seen_keys;
  check_unique(generated_, LabelKind::Generated, generated_keys);
}

LabelSpace::LabelSpace(std::vector<Label> seen, const CandidateSet& generated, bool allow_seen_overlap)
    : LabelSpace(std::move(seen), generated.labels(), allow_seen_overlap) {}

std::string_view to_string(DiagnosticKind kind) noexcept {
  switch (kind) {
    case DiagnosticKind::EmptyCandidates: return "empty_candidates";
    case DiagnosticKind::ClampedCosine: return "clamped_cosine";
    case DiagnosticKind::SkippedCandidate: return "skipped_candidate";
  }
  return "unknown";
}

ScoreResult open_set_score(const EmbeddingVector& image, const LabelSpace& space, const EmbeddingBackend& backend,
                           const ScoringConfig& config, std::string image_id) {
  config.validate();
  ScoreResult result;
  result.image_id = std::move(image_id);
  result.config_echo = config;

  std::vector<Label> labels;
  std::vector<double> logits;
  labels.reserve(space.size());
  logits.reserve(space.size());

  auto similarity = [&](const EmbeddingVector& text, const Label& label) {
    const double d = dot(image, text);
    if (d > 1.0 || d < -1.0) {
      result.diagnostics.push_back({result.image_id, DiagnosticKind::ClampedCosine,
                                    "\"" + label.name + "\": " + std::to_string(d)});
    }
    return std::clamp(d, -1.0, 1.0);
  };

  for (const auto& label : space.seen()) {
    const auto text = backend.embed_text(render_prompt(config.prompt_template, label));
    logits.push_back(similarity(text, label));
    labels.push_back(label);
  }
  const std::size_t n_seen = labels.size();
  for (const auto& label : space.generated()) {
    auto text = backend.find_text(render_prompt(config.prompt_template, label));
    if (!text) {
      if (!config.skip_missing_candidates) {
        throw Error(ErrorCode::MissingTextEmbedding,
                    "no prompt embedding for generated label \"" + label.name + "\"");
      }
      result.diagnostics.push_back({result.image_id, DiagnosticKind::SkippedCandidate, label.name});
      continue;
    }
    logits.push_back(similarity(*text, label));
    labels.push_back(label);
  }
  if (labels.size() == n_seen) {
    result.diagnostics.push_back({result.image_id, DiagnosticKind::EmptyCandidates, "no generated labels"});
  }

  const auto probs = softmax(logits, config.temperature);
  // S(x) summed over the generated block: exactly 0 when it is empty, and equal
  // to 1 - seen mass up to rounding.
  double generated_mass = 0.0;
  for (std::size_t i = n_seen; i < probs.size(); ++i) generated_mass += probs[i];
  result.score = std::clamp(generated_mass, 0.0, 1.0);

  const auto seen_probs = softmax(std::span<const double>(logits).first(n_seen), config.temperature);
  const auto best = std::max_element(seen_probs.begin(), seen_probs.end());  // first maximum on ties
  result.msp_score = std::clamp(1.0 - *best, 0.0, 1.0);
  result.predicted_seen = labels[static_cast<std::size_t>(best - seen_probs.begin())];

  result.distribution = SoftmaxDistribution(std::move(labels), probs);
  return result;
}

ScoreResult run_inference(std::string_view image_id, std::span<const Label> seen, const EmbeddingBackend& backend,
                          const CandidateStore& candidates, const ScoringConfig& config, const StopList& stoplist) {
  const auto image = backend.embed_image(image_id);
  const auto* decoded = candidates.find(image_id);
  if (decoded == nullptr) {
    throw Error(ErrorCode::MissingDecoderOutput, "no decoder output for image \"" + std::string(image_id) + "\"");
  }
  const auto generated = extract_candidates(*decoded, config, stoplist, seen);
  const LabelSpace space(std::vector<Label>(seen.begin(), seen.end()), generated, !config.dedup_against_seen);
  return open_set_score(image, space, backend, config, std::string(image_id));
}

std::vector<ScoreResult> run_inference_batch(std::span<const std::string> image_ids, std::span<const Label> seen,
                                             const EmbeddingBackend& backend, const CandidateStore& candidates,
                                             const ScoringConfig& config, const StopList& stoplist,
                                             std::size_t threads) {
  const std::size_t n = image_ids.size();
  std::vector<std::optional<ScoreResult>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n || failed.load(std::memory_order_relaxed)) return;
      try {
        slots[i] = run_inference(image_ids[i], seen, backend, candidates, config, stoplist);
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }

  if (failed.load()) {
    // Workers stop early, so the lowest failing index may not have run yet;
    // finish sequentially up to the first recorded error to pick it deterministically.
    for (std::size_t i = 0; i < n; ++i) {
      if (errors[i]) std::rethrow_exception(errors[i]);
      if (!slots[i]) slots[i] = run_inference(image_ids[i], seen, backend, candidates, config, stoplist);
    }
  }

  std::vector<ScoreResult> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<LabelProbability> top_contributors(const ScoreResult& result, double threshold) {
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in [0, 1)");
  }
  std::vector<LabelProbability> out;
  for (const auto& e : result.distribution.entries()) {
    if (e.probability > threshold) out.push_back(e);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const LabelProbability& a, const LabelProbability& b) { return a.probability > b.probability; });
  return out;
}

}  // namespace zosd
