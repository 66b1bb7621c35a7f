#pragma once

// JSON and CSV renderings of score results and evaluation reports (schema_version 1).
// Emission is deterministic: no timestamps, no thread counts, shortest
// round-trip number formatting.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zosd/eval.hpp"
#include "zosd/scoring.hpp"

namespace zosd {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr double kContributorThreshold = 0.1;

struct BackendInfo {
  bool synthetic = false;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;

  friend bool operator==(const BackendInfo&, const BackendInfo&) = default;
};

/// Printed view of one ScoreResult.
struct ScoreSummary {
  std::string image_id;
  double score = 0.0;
  double msp_score = 0.0;
  std::string predicted_seen;
  std::size_t n_seen = 0;
  std::size_t n_generated = 0;
  std::vector<LabelProbability> top_contributors;
  std::optional<std::vector<LabelProbability>> distribution;  // verbose only
  std::vector<Diagnostic> diagnostics;
  ScoringConfig config;
  BackendInfo backend;
};

ScoreSummary summarize(const ScoreResult& result, const BackendInfo& backend, bool verbose,
                       double threshold = kContributorThreshold);

std::string score_summary_to_json(const ScoreSummary& summary);
/// Throws MalformedFile.
ScoreSummary score_summary_from_json(std::string_view text);

std::string eval_report_to_json(const EvalReport& report, const BackendInfo& backend);
/// Restores everything the JSON carries (per-image records are CSV-only).
/// Throws MalformedFile.
EvalReport eval_report_from_json(std::string_view text, BackendInfo* backend = nullptr);

/// split,auroc_zo_clip,auroc_msp,... one row per split plus mean and std rows.
std::string eval_report_csv(const EvalReport& report);
/// split,class,is_unseen,bin,lo,hi,count
std::string histogram_csv(const EvalReport& report);
/// split,image_id,class,is_unseen,score,msp_score,predicted_seen,n_generated
std::string image_scores_csv(const EvalReport& report);

/// Shortest decimal representation that round-trips.
std::string format_double(double value);

}  // namespace zosd
