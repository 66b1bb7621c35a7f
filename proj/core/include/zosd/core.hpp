#pragma once

// Domain types and the vector/probability math shared by every other module.
// Vectors are stored as float32; every reduction accumulates in double.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zosd/error.hpp"

namespace zosd {

/// Unit-norm dense vector. Only constructible through `normalize` or
/// `EmbeddingVector::from_unit`, so every instance satisfies the norm invariant.
class EmbeddingVector {
 public:
  static constexpr double kNormTolerance = 1e-4;

  EmbeddingVector() = default;

  /// Adopts values that are already unit-norm (within kNormTolerance) without
  /// renormalizing, so the stored bits are preserved. Throws NormViolation.
  static EmbeddingVector from_unit(std::vector<float> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  bool empty() const noexcept { return values_.empty(); }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {}
  friend EmbeddingVector normalize(std::span<const double> raw);

  std::vector<float> values_;
};

/// L2-normalizes `raw`. Throws NonFinite for NaN/Inf and ZeroVector when the
/// norm is zero or underflows.
EmbeddingVector normalize(std::span<const double> raw);
EmbeddingVector normalize(std::span<const float> raw);

/// Euclidean norm, accumulated in double.
double l2_norm(std::span<const float> values) noexcept;

/// Unclamped dot product. Throws DimMismatch.
double dot(const EmbeddingVector& a, const EmbeddingVector& b);

/// Dot product of two unit vectors clamped to [-1, 1]. Throws DimMismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Temperature-scaled softmax with max subtraction:
/// p_i = exp(t*l_i - m) / sum_j exp(t*l_j - m), m = max_j t*l_j.
std::vector<double> softmax(std::span<const double> logits, double temperature);

/// log(sum_i exp(x_i)) with max subtraction. Throws EmptyInput/NonFinite.
double log_sum_exp(std::span<const double> values);

enum class LabelKind { Seen, Generated };

std::string_view to_string(LabelKind kind) noexcept;

struct Label {
  std::string name;
  LabelKind kind = LabelKind::Seen;

  friend bool operator==(const Label&, const Label&) = default;
};

Label seen_label(std::string name);
Label generated_label(std::string name);
std::vector<Label> seen_labels(std::span<const std::string> names);

/// Sentence frame with exactly one `{}` marker.
class PromptTemplate {
 public:
  static constexpr std::string_view kMarker = "{}";
  static constexpr std::string_view kDefault = "This is a photo of a {}.";

  PromptTemplate();
  /// Throws InvalidArgument unless `text` contains exactly one marker.
  explicit PromptTemplate(std::string text);

  const std::string& text() const noexcept { return text_; }
  std::string render(std::string_view label_name) const;

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;

 private:
  std::string text_;
  std::size_t marker_pos_ = 0;
};

/// Substitutes the label name verbatim. Throws InvalidArgument on an empty name.
std::string render_prompt(const PromptTemplate& tmpl, const Label& label);

struct ScoringConfig {
  double temperature = 100.0;
  std::size_t k = 35;
  bool filter_stopwords = true;
  bool dedup_against_seen = true;
  /// Drop generated words whose prompt has no text embedding instead of failing.
  bool skip_missing_candidates = false;
  PromptTemplate prompt_template;

  /// Throws InvalidArgument when temperature <= 0 (or non-finite) or k == 0.
  void validate() const;

  friend bool operator==(const ScoringConfig&, const ScoringConfig&) = default;
};

struct LabelProbability {
  Label label;
  double probability = 0.0;
};

/// Categorical distribution over labels; entries keep the label order they were built in.
class SoftmaxDistribution {
 public:
  static constexpr double kSumTolerance = 1e-6;

  SoftmaxDistribution() = default;
  /// Throws InvalidArgument if a probability lies outside [0,1], the sum is
  /// off by more than kSumTolerance, or the sizes differ.
  SoftmaxDistribution(std::vector<Label> labels, std::vector<double> probabilities);

  std::span<const LabelProbability> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  double mass(LabelKind kind) const noexcept;

 private:
  std::vector<LabelProbability> entries_;
};

}  // namespace zosd
