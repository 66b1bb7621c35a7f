#include "zosd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <set>

#include "zosd/stopwords.hpp"
#include "zosd/text.hpp"

namespace zosd {

double SplitMix64::next_uniform() noexcept {
  const std::uint64_t z = next();
  if (z == 0) return 0x1p-64;
  return static_cast<double>(z) * 0x1p-64;
}

std::uint64_t SplitMix64::next_below(std::uint64_t n) noexcept {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t z = next();
  while (z >= limit) z = next();
  return z % n;
}

EmbeddingVector synthetic_embed(std::string_view key, std::size_t dim, std::uint64_t salt) {
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "synthetic embeddings need dim >= 2");
  SplitMix64 rng(fnv1a64(key) ^ salt);
  std::vector<double> raw(dim);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < dim; i += 2) {
    const double u1 = rng.next_uniform();
    const double u2 = rng.next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    raw[i] = r * std::cos(kTwoPi * u2);
    if (i + 1 < dim) raw[i + 1] = r * std::sin(kTwoPi * u2);
  }
  return normalize(std::span<const double>(raw));
}

EmbeddingVector aligned_synthetic_image(std::string_view class_name, std::string_view image_id, double epsilon,
                                        const PromptTemplate& tmpl, std::size_t dim, std::uint64_t salt) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in [0,1]");
  auto anchor = synthetic_embed(tmpl.render(class_name), dim, salt);
  if (epsilon == 0.0) return anchor;
  const std::string noise_key = std::string(image_id) + "#noise";
  for (std::uint64_t attempt = 0;; ++attempt) {
    const auto noise = synthetic_embed(noise_key, dim, salt + attempt);
    if (epsilon == 1.0) return noise;
    std::vector<double> blend(dim);
    const auto a = anchor.values();
    const auto n = noise.values();
    for (std::size_t i = 0; i < dim; ++i) {
      blend[i] = (1.0 - epsilon) * static_cast<double>(a[i]) + epsilon * static_cast<double>(n[i]);
    }
    try {
      return normalize(std::span<const double>(blend));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroVector) throw;
    }
  }
}

void SyntheticParams::validate() const {
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "synthetic dim must be at least 2");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in [0,1]");
  if (positions == 0) throw Error(ErrorCode::InvalidArgument, "synthetic decoder needs at least one position");
  if (stored_k < 2) throw Error(ErrorCode::InvalidArgument, "synthetic stored_k must be at least 2");
}

SyntheticBackend::SyntheticBackend(SyntheticParams params, std::unordered_map<std::string, std::string> image_classes)
    : params_(std::move(params)), image_classes_(std::move(image_classes)) {
  params_.validate();
}

std::unordered_map<std::string, std::string> image_classes(std::span<const SplitSpec> splits) {
  std::unordered_map<std::string, std::string> classes;
  for (const auto& s : splits) {
    for (const auto& img : s.images) {
      auto [it, inserted] = classes.emplace(img.id, img.class_name);
      if (!inserted && it->second != img.class_name) {
        throw Error(ErrorCode::InvalidArgument,
                    "image \"" + img.id + "\" is labelled both \"" + it->second + "\" and \"" + img.class_name + "\"");
      }
    }
  }
  return classes;
}

std::optional<EmbeddingVector> SyntheticBackend::find_image(std::string_view image_id) const {
  auto it = image_classes_.find(std::string(image_id));
  if (it == image_classes_.end()) return std::nullopt;
  return aligned_synthetic_image(it->second, image_id, params_.epsilon, params_.prompt_template, params_.dim,
                                 params_.seed);
}

std::optional<EmbeddingVector> SyntheticBackend::find_text(std::string_view prompt) const {
  std::string key(prompt);
  {
    std::shared_lock lock(mutex_);
    if (auto it = text_cache_.find(key); it != text_cache_.end()) return it->second;
  }
  auto v = synthetic_embed(key, params_.dim, params_.seed);
  std::unique_lock lock(mutex_);
  return text_cache_.try_emplace(std::move(key), std::move(v)).first->second;
}

namespace {

constexpr std::string_view kFiller[] = {
    "photo", "image", "picture", "view", "close", "small", "large", "big", "little", "white",
    "black", "red", "blue", "green", "brown", "gray", "yellow", "dark", "bright", "old",
    "young", "standing", "sitting", "lying", "flying", "running", "walking", "parked", "looking", "holding",
    "field", "grass", "road", "street", "sky", "water", "tree", "trees", "building", "wall",
    "ground", "snow", "sand", "beach", "background", "front", "side", "top", "middle", "corner",
    "group", "pair", "couple", "bunch", "pile", "row", "line", "area", "scene", "day",
    "night", "light", "shadow", "window", "door", "table", "floor", "fence", "pole", "sign",
    "man", "woman", "person", "people", "child", "hand", "head", "face", "body", "tail",
    "wooden", "metal", "plastic", "glass", "stone", "paper", "colorful", "blurry", "empty", "busy",
    "outdoor", "indoor", "sunny", "cloudy", "rainy", "wet", "near", "next", "behind", "across",
};

// Function words the synthetic decoder mixes in, as a real captioner would.
constexpr std::string_view kFunctionWords[] = {"a", "the", "of", "with", "on", "in", "is", "and", "an", "at"};

std::vector<std::string_view> filler_pool() {
  std::set<std::string_view> unique(std::begin(kFiller), std::end(kFiller));
  return {unique.begin(), unique.end()};
}

}  // namespace

std::span<const std::string_view> synthetic_filler_words() {
  static const std::vector<std::string_view> pool = filler_pool();
  return pool;
}

DecoderOutput synthetic_decoder_output(std::string_view image_id, std::string_view class_name,
                                       const SyntheticParams& params) {
  params.validate();
  std::vector<std::string_view> pool(synthetic_filler_words().begin(), synthetic_filler_words().end());
  pool.insert(pool.end(), std::begin(kFunctionWords), std::end(kFunctionWords));
  const std::string class_key = fold_key(class_name);
  std::erase_if(pool, [&](std::string_view w) { return fold_key(w) == class_key; });

  SplitMix64 rng(fnv1a64(std::string(image_id) + "#decoder") ^ params.seed);
  DecoderOutput out;
  out.image_id = std::string(image_id);
  out.stored_k = params.stored_k;
  for (std::size_t t = 0; t < params.positions; ++t) {
    // partial Fisher-Yates: the first `take` slots become a uniform sample without replacement
    const bool with_class = (t == 0);
    const std::size_t take = std::min(pool.size(), params.stored_k - (with_class ? 1 : 0));
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    std::vector<WordLogprob> entries;
    entries.reserve(take + 1);
    if (with_class) entries.push_back({std::string(class_name), -0.05});
    for (std::size_t i = 0; i < take; ++i) {
      // log-probabilities in (-10.1, -0.1], strictly below the class word
      entries.push_back({std::string(pool[i]), -0.1 - 10.0 * (1.0 - rng.next_uniform())});
    }
    out.positions.push_back(PositionTopK::from_unsorted(std::move(entries)));
  }
  return out;
}

CandidateStore synthetic_candidates(std::span<const SplitSpec> splits, const SyntheticParams& params) {
  CandidateStore store;
  for (const auto& s : splits) {
    for (const auto& img : s.images) {
      if (store.find(img.id) != nullptr) continue;
      store.insert(synthetic_decoder_output(img.id, img.class_name, params));
    }
  }
  return store;
}

SyntheticExport export_synthetic(std::span<const SplitSpec> splits, const SyntheticParams& params) {
  const SyntheticBackend backend(params, image_classes(splits));
  SyntheticExport out;
  out.candidates = synthetic_candidates(splits, params);

  for (const auto& s : splits) {
    for (const auto& img : s.images) {
      if (out.images.contains(img.id)) continue;
      out.images.insert(img.id, backend.embed_image(img.id));
    }
  }
  auto add_prompt = [&](std::string_view word) {
    auto prompt = params.prompt_template.render(word);
    if (out.text.contains(prompt)) return;
    auto v = backend.embed_text(prompt);
    out.text.insert(std::move(prompt), std::move(v));
  };
  for (const auto& s : splits) {
    for (const auto& c : s.seen_classes) add_prompt(c);
    for (const auto& c : s.unseen_classes) add_prompt(c);
  }
  for (const auto& o : out.candidates.outputs()) {
    for (const auto& p : o.positions) {
      for (const auto& e : p.entries()) add_prompt(e.word);
    }
  }
  return out;
}

}  // namespace zosd
