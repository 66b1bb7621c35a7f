#pragma once

// Benchmark harness: openness, AUROC, split aggregation and score histograms.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "zosd/backend.hpp"
#include "zosd/core.hpp"
#include "zosd/scoring.hpp"
#include "zosd/split.hpp"
#include "zosd/stopwords.hpp"
#include "zosd/store.hpp"

namespace zosd {

/// (1 - sqrt(2 n_train / (n_test + n_target))) * 100.
/// Throws InvalidCounts unless n_train >= 1 and n_test >= n_target >= 1.
double openness(std::size_t n_train, std::size_t n_target, std::size_t n_test);

struct ImageOutcome {
  std::string image_id;
  double score = 0.0;
  bool is_unseen = false;
};

/// Probability that a random unseen outcome outscores a random seen one, ties
/// counting one half. Computed from average ranks in exact integer arithmetic
/// (doubled ranks), so the result is bit-identical to the pairwise count.
/// Throws OneClassOnly, NonFinite.
double auroc(std::span<const ImageOutcome> outcomes);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population (divide by n)
};

/// Throws EmptyList.
MeanStd aggregate(std::span<const double> values);

/// Equal-width bins over [0,1]; bins are [lo, hi) except the last, which is closed.
/// Throws InvalidArgument for bins == 0, OutOfRange for a score outside [0,1].
std::vector<std::size_t> histogram(std::span<const double> scores, std::size_t bins);

inline constexpr std::size_t kDefaultHistogramBins = 20;

struct EvalOptions {
  std::size_t threads = 1;
  std::size_t histogram_bins = kDefaultHistogramBins;
};

struct ImageRecord {
  std::string image_id;
  std::string class_name;
  bool is_unseen = false;
  double score = 0.0;
  double msp_score = 0.0;
  std::string predicted_seen;
  std::size_t n_generated = 0;
};

struct ClassHistogram {
  std::string class_name;
  bool is_unseen = false;
  std::vector<std::size_t> counts;  // of S(x)
};

struct SplitEvaluation {
  std::string name;
  double auroc_score = 0.0;  // S(x)
  double auroc_msp = 0.0;
  std::size_t n_seen_images = 0;
  std::size_t n_unseen_images = 0;
  std::size_t n_seen_classes = 0;
  std::size_t n_unseen_classes = 0;
  double openness_pct = 0.0;
  std::vector<ImageRecord> images;        // split order
  std::vector<ClassHistogram> histograms; // seen classes then unseen, split order
  std::vector<Diagnostic> diagnostics;
};

/// Scores every image of the split (seen-class images are negatives, unseen-class
/// images positives) and computes AUROC for S(x) and for the MSP baseline.
/// Openness uses n_train = n_target = |seen|, n_test = |seen| + |unseen|.
/// Nothing is returned on failure; errors propagate.
SplitEvaluation evaluate(const SplitSpec& split, const EmbeddingBackend& backend, const CandidateStore& candidates,
                         const ScoringConfig& config, const StopList& stoplist, const EvalOptions& options = {});

struct ScorerSummary {
  double mean_auroc = 0.0;
  double std_auroc = 0.0;
};

struct EvalReport {
  std::vector<SplitEvaluation> splits;
  ScorerSummary zo_clip;
  ScorerSummary msp;
  double openness_pct = 0.0;  // mean over splits
  ScoringConfig config_echo;
  std::size_t histogram_bins = kDefaultHistogramBins;
};

/// Throws EmptyList when `splits` is empty.
EvalReport make_report(std::vector<SplitEvaluation> splits, const ScoringConfig& config, std::size_t histogram_bins);

// ---------------------------------------------------------------------------
// benchmark class lists and split generators

std::span<const std::string_view> cifar10_classes();
std::span<const std::string_view> cifar100_classes();

/// Image ids "<class>_<NNNN>" for each class, `per_class` each, classes in order.
std::vector<SplitImage> make_test_pool(std::span<const std::string> classes, std::size_t per_class);

/// `count` CIFAR10-style splits: 6 seen / 4 unseen classes drawn by a seeded
/// shuffle per split.
std::vector<SplitSpec> cifar10_splits(std::size_t count, std::size_t images_per_class, std::uint64_t seed);

/// Five CIFAR100 splits; split i uses classes [20i, 20i+20) as seen, the other 80 as unseen.
std::vector<SplitSpec> cifar100_splits(std::size_t images_per_class);

}  // namespace zosd
