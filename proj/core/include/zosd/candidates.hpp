#pragma once

// Candidate unseen labels from per-position decoder vocabulary rankings, and the
// teacher-forcing cross-entropy of a fixed decoder forward pass.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "zosd/core.hpp"
#include "zosd/stopwords.hpp"

namespace zosd {

struct WordLogprob {
  std::string word;
  double logprob = 0.0;

  friend bool operator==(const WordLogprob&, const WordLogprob&) = default;
};

/// True when `a` must precede `b` inside one position: higher logprob first,
/// equal logprobs by lowercase byte order (surface form as final tiebreak).
bool ranks_before(const WordLogprob& a, const WordLogprob& b);

/// One decoder position's ranked vocabulary entries.
class PositionTopK {
 public:
  PositionTopK() = default;
  /// Throws UnsortedPositions if the order is violated or a word repeats,
  /// NonFinite for NaN/Inf logprobs, InvalidArgument for empty words.
  explicit PositionTopK(std::vector<WordLogprob> entries);
  /// Sorts into canonical order instead of rejecting.
  static PositionTopK from_unsorted(std::vector<WordLogprob> entries);

  std::span<const WordLogprob> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  friend bool operator==(const PositionTopK&, const PositionTopK&) = default;

 private:
  std::vector<WordLogprob> entries_;
};

/// Ranked top-k lists for positions p_1..p_T of one image's generated description.
struct DecoderOutput {
  std::string image_id;
  std::vector<PositionTopK> positions;
  std::size_t stored_k = 0;

  /// Throws InvalidArgument when T == 0, stored_k == 0 or a position exceeds stored_k.
  void validate() const;

  friend bool operator==(const DecoderOutput&, const DecoderOutput&) = default;
};

struct Candidate {
  Label label;  // kind == Generated, original surface form of first occurrence
  double best_logprob = 0.0;
};

/// The generated label set, in first-appearance scan order.
struct CandidateSet {
  std::vector<Candidate> candidates;

  std::size_t size() const noexcept { return candidates.size(); }
  bool empty() const noexcept { return candidates.empty(); }
  std::vector<Label> labels() const;
};

/// Unions the top min(k, available) words of every position, scanning positions
/// left to right and ranks high to low. Duplicates are removed case-insensitively
/// (first occurrence wins), stop words dropped if `filter_stopwords`, and words
/// matching a seen label dropped if `dedup_against_seen`.
/// Throws KTooLarge when config.k > d.stored_k.
CandidateSet extract_candidates(const DecoderOutput& d, const ScoringConfig& config,
                                const StopList& stoplist, std::span<const Label> seen);

/// -sum_t log softmax(logits[t])[targets[t]]; rows must share one width V >= 1.
/// Throws ShapeMismatch, IndexOutOfRange or NonFinite.
double teacher_forcing_loss(std::span<const std::vector<double>> logits,
                            std::span<const std::size_t> targets);

}  // namespace zosd
