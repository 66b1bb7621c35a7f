#pragma once

// Open-set inference: label space Y_s u Y_u, the distribution P(y|x) over it,
// the open-set score S(x) = 1 - sum_{y in Y_s} P(y|x), and the MSP baseline.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "zosd/backend.hpp"
#include "zosd/candidates.hpp"
#include "zosd/core.hpp"
#include "zosd/stopwords.hpp"
#include "zosd/store.hpp"

namespace zosd {

/// Seen labels followed by generated candidates.
class LabelSpace {
 public:
  /// Throws EmptySeen, InvalidArgument (wrong kind) or DuplicateLabel.
  /// Names must be unique (case-insensitive) within each kind; a generated name
  /// may repeat a seen one only when `allow_seen_overlap` is set, which is what
  /// disabling dedup-against-seen produces.
  LabelSpace(std::vector<Label> seen, std::vector<Label> generated, bool allow_seen_overlap = false);
  LabelSpace(std::vector<Label> seen, const CandidateSet& generated, bool allow_seen_overlap = false);

  std::span<const Label> seen() const noexcept { return seen_; }
  std::span<const Label> generated() const noexcept { return generated_; }
  std::size_t size() const noexcept { return seen_.size() + generated_.size(); }

 private:
  std::vector<Label> seen_;
  std::vector<Label> generated_;
};

enum class DiagnosticKind {
  EmptyCandidates,   // Y_u empty after filtering; S(x) is 0 by construction
  ClampedCosine,     // dot product of unit vectors fell outside [-1, 1]
  SkippedCandidate,  // generated word dropped for lack of a prompt embedding
};

std::string_view to_string(DiagnosticKind kind) noexcept;

struct Diagnostic {
  std::string image_id;
  DiagnosticKind kind;
  std::string detail;
};

struct ScoreResult {
  std::string image_id;
  /// Over seen-then-generated labels.
  SoftmaxDistribution distribution;
  /// S(x): total probability of generated labels.
  double score = 0.0;
  /// 1 - max of the seen-only softmax (higher means more likely unseen).
  double msp_score = 0.0;
  /// Argmax of the seen-only softmax; first label wins ties.
  Label predicted_seen;
  ScoringConfig config_echo;
  std::vector<Diagnostic> diagnostics;
};

/// Scores one image against `space`. Every label is rendered through
/// config.prompt_template and looked up in `backend`.
/// Throws MissingTextEmbedding for a missing seen prompt, or for a missing
/// generated prompt unless config.skip_missing_candidates.
ScoreResult open_set_score(const EmbeddingVector& image, const LabelSpace& space, const EmbeddingBackend& backend,
                           const ScoringConfig& config, std::string image_id = {});

/// extract_candidates followed by open_set_score for a stored image.
/// Throws MissingImage, MissingDecoderOutput and anything the two stages throw.
ScoreResult run_inference(std::string_view image_id, std::span<const Label> seen, const EmbeddingBackend& backend,
                          const CandidateStore& candidates, const ScoringConfig& config, const StopList& stoplist);

/// run_inference over many images on up to `threads` workers. Results are in
/// input order and bit-identical for every thread count; if any image fails,
/// the error of the lowest failing index is rethrown.
std::vector<ScoreResult> run_inference_batch(std::span<const std::string> image_ids, std::span<const Label> seen,
                                             const EmbeddingBackend& backend, const CandidateStore& candidates,
                                             const ScoringConfig& config, const StopList& stoplist,
                                             std::size_t threads);

/// Entries with probability > threshold, by probability descending then label order.
/// Throws InvalidArgument unless 0 <= threshold < 1.
std::vector<LabelProbability> top_contributors(const ScoreResult& result, double threshold);

}  // namespace zosd
