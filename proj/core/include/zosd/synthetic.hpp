#pragma once

// Deterministic synthetic embeddings and decoder outputs. The generator is
// specified down to the bit so that independent implementations agree:
//
//   h     = FNV-1a 64 over the UTF-8 bytes of the key
//   state = h XOR salt
//   z     = splitmix64(state);  u = z / 2^64  (2^-64 when z == 0)
//   (u1, u2) -> sqrt(-2 ln u1) * (cos 2*pi*u2, sin 2*pi*u2)
//
// filling components in order (the sine half of the last pair is dropped for
// odd dims), then L2-normalizing in double and rounding to float.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zosd/backend.hpp"
#include "zosd/candidates.hpp"
#include "zosd/core.hpp"
#include "zosd/split.hpp"
#include "zosd/store.hpp"

namespace zosd {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = kFnvOffsetBasis;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in (0, 1]: z / 2^64 with 2^-64 substituted for z == 0.
  double next_uniform() noexcept;

  /// Uniform integer in [0, n) by rejection; n > 0.
  std::uint64_t next_below(std::uint64_t n) noexcept;

 private:
  std::uint64_t state_;
};

/// Deterministic pseudo-random unit vector for `key`. Throws InvalidArgument if dim < 2.
EmbeddingVector synthetic_embed(std::string_view key, std::size_t dim, std::uint64_t salt);

/// normalize((1-eps) * embed(prompt(class)) + eps * embed(image_id + "#noise")).
/// eps == 0 returns the class prompt embedding exactly. A cancelling blend is
/// retried with the noise salt incremented until it is non-zero.
EmbeddingVector aligned_synthetic_image(std::string_view class_name, std::string_view image_id, double epsilon,
                                        const PromptTemplate& tmpl, std::size_t dim, std::uint64_t salt);

struct SyntheticParams {
  std::size_t dim = 512;
  std::uint64_t seed = 42;
  double epsilon = 0.1;
  PromptTemplate prompt_template;
  /// Decoder positions T and entries stored per position.
  std::size_t positions = 6;
  std::size_t stored_k = 35;

  /// Throws InvalidArgument.
  void validate() const;
};

/// image id -> class name over every split; throws InvalidArgument if an id maps to two classes.
std::unordered_map<std::string, std::string> image_classes(std::span<const SplitSpec> splits);

/// Backend whose images sit near their class prompt (see aligned_synthetic_image)
/// and whose text embeddings are synthetic_embed(prompt). Text vectors are
/// memoized behind a shared mutex; values never depend on call order.
class SyntheticBackend final : public EmbeddingBackend {
 public:
  /// `image_classes` maps every known image id to its class name.
  SyntheticBackend(SyntheticParams params, std::unordered_map<std::string, std::string> image_classes);

  std::optional<EmbeddingVector> find_image(std::string_view image_id) const override;
  std::optional<EmbeddingVector> find_text(std::string_view prompt) const override;

  const SyntheticParams& params() const noexcept { return params_; }
  const std::unordered_map<std::string, std::string>& image_classes() const noexcept { return image_classes_; }

 private:
  SyntheticParams params_;
  std::unordered_map<std::string, std::string> image_classes_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, EmbeddingVector> text_cache_;
};

/// Caption-like filler vocabulary used by the synthetic decoder (no class names, no stop words).
std::span<const std::string_view> synthetic_filler_words();

/// Decoder output for an image of `class_name`: position 0 ranks the class word
/// first, every position is filled with filler and a few stop words at random
/// log-probabilities, seeded from (image_id, seed).
DecoderOutput synthetic_decoder_output(std::string_view image_id, std::string_view class_name,
                                       const SyntheticParams& params);

CandidateStore synthetic_candidates(std::span<const SplitSpec> splits, const SyntheticParams& params);

/// File-store equivalents of the synthetic backend for `splits`: image vectors
/// for every image, and prompt vectors for every seen/unseen class and every
/// word of the candidate store.
struct SyntheticExport {
  EmbeddingStore images;
  EmbeddingStore text;
  CandidateStore candidates;
};
SyntheticExport export_synthetic(std::span<const SplitSpec> splits, const SyntheticParams& params);

}  // namespace zosd
