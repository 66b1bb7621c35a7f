#include "zosd/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace zosd {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnsortedPositions: return "UnsortedPositions";
    case ErrorCode::MissingTextEmbedding: return "MissingTextEmbedding";
    case ErrorCode::MissingImage: return "MissingImage";
    case ErrorCode::MissingDecoderOutput: return "MissingDecoderOutput";
    case ErrorCode::EmptySeen: return "EmptySeen";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::InvalidCounts: return "InvalidCounts";
    case ErrorCode::OneClassOnly: return "OneClassOnly";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InvalidSplit: return "InvalidSplit";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::NormViolation: return "NormViolation";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<float> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "embedding has no components");
  for (float v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "embedding contains NaN or Inf");
  }
  const double norm = l2_norm(values);
  if (std::abs(norm - 1.0) > kNormTolerance) {
    throw Error(ErrorCode::NormViolation, "embedding norm " + std::to_string(norm) + " is not 1");
  }
  return EmbeddingVector(std::move(values));
}

double l2_norm(std::span<const float> values) noexcept {
  double sum = 0.0;
  for (float v : values) sum += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(sum);
}

EmbeddingVector normalize(std::span<const double> raw) {
  if (raw.empty()) throw Error(ErrorCode::EmptyInput, "cannot normalize an empty vector");
  double sum = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "vector contains NaN or Inf");
    sum += v * v;
  }
  // Scale by the max magnitude first when the plain sum of squares under- or overflows.
  double scale = 1.0;
  if (!(sum > std::numeric_limits<double>::min()) || !std::isfinite(sum)) {
    double peak = 0.0;
    for (double v : raw) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) throw Error(ErrorCode::ZeroVector, "cannot normalize the zero vector");
    scale = 1.0 / peak;
    if (!std::isfinite(scale)) throw Error(ErrorCode::ZeroVector, "vector norm underflows");
    sum = 0.0;
    for (double v : raw) sum += (v * scale) * (v * scale);
  }
  const double norm = std::sqrt(sum);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw Error(ErrorCode::ZeroVector, "vector norm underflows");
  std::vector<float> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<float>(raw[i] * scale / norm);
  return EmbeddingVector(std::move(out));
}

EmbeddingVector normalize(std::span<const float> raw) {
  std::vector<double> wide(raw.begin(), raw.end());
  return normalize(std::span<const double>(wide));
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimMismatch,
                "dims " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()) + " differ");
  }
  const auto av = a.values();
  const auto bv = b.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) sum += static_cast<double>(av[i]) * static_cast<double>(bv[i]);
  return sum;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  return std::clamp(dot(a, b), -1.0, 1.0);
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  if (logits.empty()) throw Error(ErrorCode::EmptyInput, "softmax needs at least one logit");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be positive and finite");
  }
  std::vector<double> out(logits.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) throw Error(ErrorCode::NonFinite, "logit is NaN or Inf");
    out[i] = temperature * logits[i];
    if (!std::isfinite(out[i])) throw Error(ErrorCode::NonFinite, "scaled logit overflows");
    peak = std::max(peak, out[i]);
  }
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "log_sum_exp needs at least one value");
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "value is NaN or Inf");
    peak = std::max(peak, v);
  }
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

std::string_view to_string(LabelKind kind) noexcept {
  return kind == LabelKind::Seen ? "seen" : "generated";
}

Label seen_label(std::string name) { return Label{std::move(name), LabelKind::Seen}; }
Label generated_label(std::string name) { return Label{std::move(name), LabelKind::Generated}; }

std::vector<Label> seen_labels(std::span<const std::string> names) {
  std::vector<Label> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(seen_label(n));
  return out;
}

PromptTemplate::PromptTemplate() : PromptTemplate(std::string(kDefault)) {}

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  const auto first = text_.find(kMarker);
  if (first == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "prompt template \"" + text_ + "\" has no {} marker");
  }
  if (text_.find(kMarker, first + kMarker.size()) != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "prompt template \"" + text_ + "\" has more than one {} marker");
  }
  marker_pos_ = first;
}

std::string PromptTemplate::render(std::string_view label_name) const {
  std::string out;
  out.reserve(text_.size() + label_name.size());
  out.append(text_, 0, marker_pos_);
  out.append(label_name);
  out.append(text_, marker_pos_ + kMarker.size());
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, const Label& label) {
  if (label.name.empty()) throw Error(ErrorCode::InvalidArgument, "label name is empty");
  return tmpl.render(label.name);
}

void ScoringConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be positive and finite");
  }
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
}

SoftmaxDistribution::SoftmaxDistribution(std::vector<Label> labels, std::vector<double> probabilities) {
  if (labels.size() != probabilities.size()) {
    throw Error(ErrorCode::InvalidArgument, "label and probability counts differ");
  }
  double sum = 0.0;
  entries_.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = probabilities[i];
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "probability outside [0,1]");
    sum += p;
    entries_.push_back({std::move(labels[i]), p});
  }
  if (!entries_.empty() && std::abs(sum - 1.0) > kSumTolerance) {
    throw Error(ErrorCode::InvalidArgument, "probabilities sum to " + std::to_string(sum));
  }
}

double SoftmaxDistribution::mass(LabelKind kind) const noexcept {
  double sum = 0.0;
  for (const auto& e : entries_) {
    if (e.label.kind == kind) sum += e.probability;
  }
  return sum;
}

}  // namespace zosd
