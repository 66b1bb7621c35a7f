#include "zosd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <unordered_set>

#include "zosd/synthetic.hpp"
#include "zosd/text.hpp"

namespace zosd {

void SplitSpec::validate() const {
  auto fail = [&](const std::string& what) { throw Error(ErrorCode::InvalidSplit, "split \"" + name + "\": " + what); };
  if (seen_classes.empty()) fail("no seen classes");
  if (unseen_classes.empty()) fail("no unseen classes");
  std::unordered_set<std::string> seen_keys;
  for (const auto& c : seen_classes) {
    if (c.empty()) fail("empty class name");
    if (!seen_keys.insert(fold_key(c)).second) fail("seen class \"" + c + "\" listed twice");
  }
  std::unordered_set<std::string> unseen_keys;
  for (const auto& c : unseen_classes) {
    if (c.empty()) fail("empty class name");
    if (seen_keys.contains(fold_key(c))) fail("class \"" + c + "\" is both seen and unseen");
    if (!unseen_keys.insert(fold_key(c)).second) fail("unseen class \"" + c + "\" listed twice");
  }
  std::unordered_set<std::string_view> ids;
  for (const auto& img : images) {
    if (img.id.empty()) fail("empty image id");
    if (!ids.insert(img.id).second) fail("image \"" + img.id + "\" listed twice");
    const bool known = std::find(seen_classes.begin(), seen_classes.end(), img.class_name) != seen_classes.end() ||
                       std::find(unseen_classes.begin(), unseen_classes.end(), img.class_name) != unseen_classes.end();
    if (!known) fail("image \"" + img.id + "\" has unknown class \"" + img.class_name + "\"");
  }
}

bool SplitSpec::is_unseen_class(std::string_view class_name) const {
  return std::find(unseen_classes.begin(), unseen_classes.end(), class_name) != unseen_classes.end();
}

double openness(std::size_t n_train, std::size_t n_target, std::size_t n_test) {
  if (n_train < 1 || n_target < 1 || n_test < n_target) {
    throw Error(ErrorCode::InvalidCounts, "need n_train >= 1 and n_test >= n_target >= 1, got (" +
                                              std::to_string(n_train) + ", " + std::to_string(n_target) + ", " +
                                              std::to_string(n_test) + ")");
  }
  const double ratio = 2.0 * static_cast<double>(n_train) / (static_cast<double>(n_test) + static_cast<double>(n_target));
  return (1.0 - std::sqrt(ratio)) * 100.0;
}

double auroc(std::span<const ImageOutcome> outcomes) {
  std::uint64_t n_pos = 0;
  for (const auto& o : outcomes) {
    if (!std::isfinite(o.score)) throw Error(ErrorCode::NonFinite, "score of \"" + o.image_id + "\" is not finite");
    n_pos += o.is_unseen ? 1 : 0;
  }
  const std::uint64_t n_neg = outcomes.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::OneClassOnly, "AUROC needs both unseen and seen outcomes (" + std::to_string(n_pos) +
                                             " unseen, " + std::to_string(n_neg) + " seen)");
  }

  std::vector<std::size_t> order(outcomes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return outcomes[a].score < outcomes[b].score; });

  // Sum of doubled average ranks over positives: a tie group occupying 1-based
  // ranks i+1..i+g has average rank (2i+g+1)/2.
  std::uint64_t rank_sum_x2 = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && outcomes[order[j]].score == outcomes[order[i]].score) ++j;
    const std::uint64_t rank_x2 = 2 * i + (j - i) + 1;
    for (std::size_t r = i; r < j; ++r) {
      if (outcomes[order[r]].is_unseen) rank_sum_x2 += rank_x2;
    }
    i = j;
  }
  // 2U = 2R - n_pos(n_pos+1) = 2 * #(pos > neg) + #(pos == neg)
  const std::uint64_t u_x2 = rank_sum_x2 - n_pos * (n_pos + 1);
  return static_cast<double>(u_x2) / static_cast<double>(2 * n_pos * n_neg);
}

MeanStd aggregate(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyList, "nothing to aggregate");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / n)};
}

std::vector<std::size_t> histogram(std::span<const double> scores, std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
  std::vector<std::size_t> counts(bins, 0);
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::OutOfRange, "score " + std::to_string(s) + " outside [0,1]");
    const auto b = static_cast<std::size_t>(s * static_cast<double>(bins));
    ++counts[std::min(b, bins - 1)];
  }
  return counts;
}

SplitEvaluation evaluate(const SplitSpec& split, const EmbeddingBackend& backend, const CandidateStore& candidates,
                         const ScoringConfig& config, const StopList& stoplist, const EvalOptions& options) {
  split.validate();
  const auto seen = seen_labels(split.seen_classes);
  std::vector<std::string> ids;
  ids.reserve(split.images.size());
  for (const auto& img : split.images) ids.push_back(img.id);

  const auto results = run_inference_batch(ids, seen, backend, candidates, config, stoplist, options.threads);

  SplitEvaluation out;
  out.name = split.name;
  out.n_seen_classes = split.seen_classes.size();
  out.n_unseen_classes = split.unseen_classes.size();
  std::vector<ImageOutcome> by_score;
  std::vector<ImageOutcome> by_msp;
  std::map<std::string, std::vector<double>> scores_by_class;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& img = split.images[i];
    const auto& r = results[i];
    const bool unseen = split.is_unseen_class(img.class_name);
    (unseen ? out.n_unseen_images : out.n_seen_images) += 1;
    std::size_t n_generated = 0;
    for (const auto& e : r.distribution.entries()) n_generated += e.label.kind == LabelKind::Generated ? 1 : 0;
    out.images.push_back({img.id, img.class_name, unseen, r.score, r.msp_score, r.predicted_seen.name, n_generated});
    by_score.push_back({img.id, r.score, unseen});
    by_msp.push_back({img.id, r.msp_score, unseen});
    scores_by_class[img.class_name].push_back(r.score);
    out.diagnostics.insert(out.diagnostics.end(), r.diagnostics.begin(), r.diagnostics.end());
  }
  out.auroc_score = auroc(by_score);
  out.auroc_msp = auroc(by_msp);
  out.openness_pct = openness(split.seen_classes.size(), split.seen_classes.size(),
                              split.seen_classes.size() + split.unseen_classes.size());

  auto add_histograms = [&](const std::vector<std::string>& classes, bool unseen) {
    for (const auto& c : classes) {
      const auto it = scores_by_class.find(c);
      const std::vector<double> none;
      out.histograms.push_back({c, unseen, histogram(it == scores_by_class.end() ? none : it->second,
                                                     options.histogram_bins)});
    }
  };
  add_histograms(split.seen_classes, false);
  add_histograms(split.unseen_classes, true);
  return out;
}

EvalReport make_report(std::vector<SplitEvaluation> splits, const ScoringConfig& config, std::size_t histogram_bins) {
  if (splits.empty()) throw Error(ErrorCode::EmptyList, "report needs at least one split");
  std::vector<double> s, m, o;
  for (const auto& e : splits) {
    s.push_back(e.auroc_score);
    m.push_back(e.auroc_msp);
    o.push_back(e.openness_pct);
  }
  EvalReport report;
  const auto zs = aggregate(s);
  const auto ms = aggregate(m);
  report.zo_clip = {zs.mean, zs.std};
  report.msp = {ms.mean, ms.std};
  report.openness_pct = aggregate(o).mean;
  report.splits = std::move(splits);
  report.config_echo = config;
  report.histogram_bins = histogram_bins;
  return report;
}

namespace {

constexpr std::string_view kCifar10[] = {"airplane", "automobile", "bird", "cat", "deer",
                                         "dog", "frog", "horse", "ship", "truck"};

constexpr std::string_view kCifar100[] = {
    "apple", "aquarium fish", "baby", "bear", "beaver", "bed", "bee", "beetle", "bicycle", "bottle",
    "bowl", "boy", "bridge", "bus", "butterfly", "camel", "can", "castle", "caterpillar", "cattle",
    "chair", "chimpanzee", "clock", "cloud", "cockroach", "couch", "crab", "crocodile", "cup", "dinosaur",
    "dolphin", "elephant", "flatfish", "forest", "fox", "girl", "hamster", "house", "kangaroo", "keyboard",
    "lamp", "lawn mower", "leopard", "lion", "lizard", "lobster", "man", "maple tree", "motorcycle", "mountain",
    "mouse", "mushroom", "oak tree", "orange", "orchid", "otter", "palm tree", "pear", "pickup truck", "pine tree",
    "plain", "plate", "poppy", "porcupine", "possum", "rabbit", "raccoon", "ray", "road", "rocket",
    "rose", "sea", "seal", "shark", "shrew", "skunk", "skyscraper", "snail", "snake", "spider",
    "squirrel", "streetcar", "sunflower", "sweet pepper", "table", "tank", "telephone", "television", "tiger", "tractor",
    "train", "trout", "tulip", "turtle", "wardrobe", "whale", "willow tree", "wolf", "woman", "worm",
};
static_assert(std::size(kCifar100) == 100);

std::string image_id_for(std::string_view class_name, std::size_t index) {
  std::string id;
  for (char c : class_name) id.push_back(c == ' ' ? '_' : c);
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%04zu", index);
  return id + buf;
}

}  // namespace

std::span<const std::string_view> cifar10_classes() { return kCifar10; }
std::span<const std::string_view> cifar100_classes() { return kCifar100; }

std::vector<SplitImage> make_test_pool(std::span<const std::string> classes, std::size_t per_class) {
  std::vector<SplitImage> out;
  out.reserve(classes.size() * per_class);
  for (const auto& c : classes) {
    for (std::size_t i = 0; i < per_class; ++i) out.push_back({image_id_for(c, i), c});
  }
  return out;
}

std::vector<SplitSpec> cifar10_splits(std::size_t count, std::size_t images_per_class, std::uint64_t seed) {
  std::vector<std::string> all(kCifar10, kCifar10 + std::size(kCifar10));
  const auto pool = make_test_pool(all, images_per_class);
  std::vector<SplitSpec> out;
  for (std::size_t s = 0; s < count; ++s) {
    SplitMix64 rng(seed ^ fnv1a64("cifar10-split-" + std::to_string(s)));
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      std::swap(idx[i], idx[static_cast<std::size_t>(rng.next_below(i + 1))]);
    }
    std::sort(idx.begin(), idx.begin() + 6);
    std::sort(idx.begin() + 6, idx.end());
    SplitSpec split;
    split.name = "cifar10_split_" + std::to_string(s);
    for (std::size_t i = 0; i < idx.size(); ++i) (i < 6 ? split.seen_classes : split.unseen_classes).push_back(all[idx[i]]);
    split.images = pool;
    out.push_back(std::move(split));
  }
  return out;
}

std::vector<SplitSpec> cifar100_splits(std::size_t images_per_class) {
  std::vector<std::string> all(kCifar100, kCifar100 + std::size(kCifar100));
  const auto pool = make_test_pool(all, images_per_class);
  std::vector<SplitSpec> out;
  for (std::size_t s = 0; s < 5; ++s) {
    SplitSpec split;
    split.name = "cifar100_split_" + std::to_string(s);
    for (std::size_t c = 0; c < all.size(); ++c) {
      const bool seen = c >= 20 * s && c < 20 * (s + 1);
      (seen ? split.seen_classes : split.unseen_classes).push_back(all[c]);
    }
    split.images = pool;
    out.push_back(std::move(split));
  }
  return out;
}

}  // namespace zosd
