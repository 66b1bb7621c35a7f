#include "zosd/report.hpp"

#include <charconv>
#include <sstream>

#include "json.hpp"

namespace zosd {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedFile, what); }

ordered_json config_json(const ScoringConfig& c) {
  return {{"temperature", c.temperature},
          {"k", c.k},
          {"template", c.prompt_template.text()},
          {"filter_stopwords", c.filter_stopwords},
          {"stopword_list_version", StopList::kEnglishVersion},
          {"dedup_against_seen", c.dedup_against_seen},
          {"skip_missing_candidates", c.skip_missing_candidates}};
}

ScoringConfig config_from(const ordered_json& j) {
  ScoringConfig c;
  c.temperature = j.at("temperature").get<double>();
  c.k = j.at("k").get<std::size_t>();
  c.prompt_template = PromptTemplate(j.at("template").get<std::string>());
  c.filter_stopwords = j.at("filter_stopwords").get<bool>();
  c.dedup_against_seen = j.at("dedup_against_seen").get<bool>();
  c.skip_missing_candidates = j.at("skip_missing_candidates").get<bool>();
  return c;
}

ordered_json backend_json(const BackendInfo& b) {
  if (!b.synthetic) return {{"kind", "files"}};
  return {{"kind", "synthetic"}, {"dim", b.dim}, {"seed", b.seed}, {"epsilon", b.epsilon}};
}

BackendInfo backend_from(const ordered_json& j) {
  BackendInfo b;
  b.synthetic = j.at("kind").get<std::string>() == "synthetic";
  if (b.synthetic) {
    b.dim = j.at("dim").get<std::size_t>();
    b.seed = j.at("seed").get<std::uint64_t>();
    b.epsilon = j.at("epsilon").get<double>();
  }
  return b;
}

ordered_json metadata_json(const ScoringConfig& c, const BackendInfo& b) {
  return {{"config", config_json(c)},
          {"backend", backend_json(b)},
          {"auroc_positive_class", "unseen"},
          {"score_orientation", "higher means more likely unseen"},
          {"open_set_score", "1 - sum of seen-label probabilities over seen and generated labels"},
          {"msp_score", "1 - max of the seen-only softmax"},
          {"std_convention", "population"}};
}

ordered_json labels_json(const std::vector<LabelProbability>& entries) {
  ordered_json out = ordered_json::array();
  for (const auto& e : entries) {
    out.push_back({{"label", e.label.name}, {"kind", to_string(e.label.kind)}, {"probability", e.probability}});
  }
  return out;
}

std::vector<LabelProbability> labels_from(const ordered_json& j) {
  std::vector<LabelProbability> out;
  for (const auto& e : j) {
    const auto kind = e.at("kind").get<std::string>();
    if (kind != "seen" && kind != "generated") malformed("unknown label kind \"" + kind + "\"");
    out.push_back({Label{e.at("label").get<std::string>(), kind == "seen" ? LabelKind::Seen : LabelKind::Generated},
                   e.at("probability").get<double>()});
  }
  return out;
}

DiagnosticKind diagnostic_kind_from(const std::string& s) {
  for (auto k : {DiagnosticKind::EmptyCandidates, DiagnosticKind::ClampedCosine, DiagnosticKind::SkippedCandidate}) {
    if (to_string(k) == s) return k;
  }
  malformed("unknown diagnostic kind \"" + s + "\"");
}

template <typename F>
auto guarded(std::string_view text, F&& body) {
  try {
    return body(ordered_json::parse(text));
  } catch (const ordered_json::exception& e) {
    malformed(e.what());
  }
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw Error(ErrorCode::Internal, "cannot format number");
  return std::string(buf, end);
}

ScoreSummary summarize(const ScoreResult& result, const BackendInfo& backend, bool verbose, double threshold) {
  ScoreSummary s;
  s.image_id = result.image_id;
  s.score = result.score;
  s.msp_score = result.msp_score;
  s.predicted_seen = result.predicted_seen.name;
  for (const auto& e : result.distribution.entries()) {
    (e.label.kind == LabelKind::Seen ? s.n_seen : s.n_generated) += 1;
  }
  s.top_contributors = top_contributors(result, threshold);
  if (verbose) {
    const auto entries = result.distribution.entries();
    s.distribution = std::vector<LabelProbability>(entries.begin(), entries.end());
  }
  s.diagnostics = result.diagnostics;
  s.config = result.config_echo;
  s.backend = backend;
  return s;
}

std::string score_summary_to_json(const ScoreSummary& s) {
  ordered_json diags = ordered_json::array();
  for (const auto& d : s.diagnostics) diags.push_back({{"kind", to_string(d.kind)}, {"detail", d.detail}});
  ordered_json j = {{"schema_version", kReportSchemaVersion},
                    {"image_id", s.image_id},
                    {"score", s.score},
                    {"msp_score", s.msp_score},
                    {"predicted_seen", s.predicted_seen},
                    {"n_seen", s.n_seen},
                    {"n_generated", s.n_generated},
                    {"top_contributors", labels_json(s.top_contributors)}};
  if (s.distribution) j["distribution"] = labels_json(*s.distribution);
  j["diagnostics"] = std::move(diags);
  j["metadata"] = metadata_json(s.config, s.backend);
  return j.dump(2) + "\n";
}

ScoreSummary score_summary_from_json(std::string_view text) {
  return guarded(text, [](const ordered_json& j) {
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) malformed("unsupported schema_version");
    ScoreSummary s;
    s.image_id = j.at("image_id").get<std::string>();
    s.score = j.at("score").get<double>();
    s.msp_score = j.at("msp_score").get<double>();
    s.predicted_seen = j.at("predicted_seen").get<std::string>();
    s.n_seen = j.at("n_seen").get<std::size_t>();
    s.n_generated = j.at("n_generated").get<std::size_t>();
    s.top_contributors = labels_from(j.at("top_contributors"));
    if (j.contains("distribution")) s.distribution = labels_from(j.at("distribution"));
    for (const auto& d : j.at("diagnostics")) {
      s.diagnostics.push_back({s.image_id, diagnostic_kind_from(d.at("kind").get<std::string>()),
                               d.at("detail").get<std::string>()});
    }
    s.config = config_from(j.at("metadata").at("config"));
    s.backend = backend_from(j.at("metadata").at("backend"));
    return s;
  });
}

std::string eval_report_to_json(const EvalReport& report, const BackendInfo& backend) {
  ordered_json splits = ordered_json::array();
  for (const auto& s : report.splits) {
    ordered_json diags = ordered_json::array();
    for (const auto& d : s.diagnostics) {
      diags.push_back({{"image_id", d.image_id}, {"kind", to_string(d.kind)}, {"detail", d.detail}});
    }
    ordered_json hist = ordered_json::array();
    for (const auto& h : s.histograms) {
      hist.push_back({{"class", h.class_name}, {"is_unseen", h.is_unseen}, {"counts", h.counts}});
    }
    splits.push_back({{"name", s.name},
                      {"auroc", {{"zo_clip", s.auroc_score}, {"msp", s.auroc_msp}}},
                      {"n_seen_images", s.n_seen_images},
                      {"n_unseen_images", s.n_unseen_images},
                      {"n_seen_classes", s.n_seen_classes},
                      {"n_unseen_classes", s.n_unseen_classes},
                      {"openness_pct", s.openness_pct},
                      {"histograms", std::move(hist)},
                      {"diagnostics", std::move(diags)}});
  }
  auto meta = metadata_json(report.config_echo, backend);
  meta["histogram"] = {{"bins", report.histogram_bins},
                       {"range", {0.0, 1.0}},
                       {"edges", "half-open [lo, hi), last bin closed"},
                       {"score", "zo_clip"}};
  ordered_json j = {{"schema_version", kReportSchemaVersion},
                    {"metadata", std::move(meta)},
                    {"splits", std::move(splits)},
                    {"aggregate",
                     {{"n_splits", report.splits.size()},
                      {"openness_pct", report.openness_pct},
                      {"zo_clip", {{"mean_auroc", report.zo_clip.mean_auroc}, {"std_auroc", report.zo_clip.std_auroc}}},
                      {"msp", {{"mean_auroc", report.msp.mean_auroc}, {"std_auroc", report.msp.std_auroc}}}}}};
  return j.dump(2) + "\n";
}

EvalReport eval_report_from_json(std::string_view text, BackendInfo* backend) {
  return guarded(text, [&](const ordered_json& j) {
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) malformed("unsupported schema_version");
    EvalReport r;
    const auto& meta = j.at("metadata");
    r.config_echo = config_from(meta.at("config"));
    r.histogram_bins = meta.at("histogram").at("bins").get<std::size_t>();
    if (backend != nullptr) *backend = backend_from(meta.at("backend"));
    for (const auto& s : j.at("splits")) {
      SplitEvaluation e;
      e.name = s.at("name").get<std::string>();
      e.auroc_score = s.at("auroc").at("zo_clip").get<double>();
      e.auroc_msp = s.at("auroc").at("msp").get<double>();
      e.n_seen_images = s.at("n_seen_images").get<std::size_t>();
      e.n_unseen_images = s.at("n_unseen_images").get<std::size_t>();
      e.n_seen_classes = s.at("n_seen_classes").get<std::size_t>();
      e.n_unseen_classes = s.at("n_unseen_classes").get<std::size_t>();
      e.openness_pct = s.at("openness_pct").get<double>();
      for (const auto& d : s.at("diagnostics")) {
        e.diagnostics.push_back({d.at("image_id").get<std::string>(),
                                 diagnostic_kind_from(d.at("kind").get<std::string>()),
                                 d.at("detail").get<std::string>()});
      }
      for (const auto& h : s.at("histograms")) {
        e.histograms.push_back({h.at("class").get<std::string>(), h.at("is_unseen").get<bool>(),
                                h.at("counts").get<std::vector<std::size_t>>()});
      }
      r.splits.push_back(std::move(e));
    }
    const auto& agg = j.at("aggregate");
    r.openness_pct = agg.at("openness_pct").get<double>();
    r.zo_clip = {agg.at("zo_clip").at("mean_auroc").get<double>(), agg.at("zo_clip").at("std_auroc").get<double>()};
    r.msp = {agg.at("msp").at("mean_auroc").get<double>(), agg.at("msp").at("std_auroc").get<double>()};
    return r;
  });
}

std::string eval_report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "split,auroc_zo_clip,auroc_msp,n_seen_images,n_unseen_images,openness_pct\n";
  for (const auto& s : report.splits) {
    out << csv_field(s.name) << ',' << format_double(s.auroc_score) << ',' << format_double(s.auroc_msp) << ','
        << s.n_seen_images << ',' << s.n_unseen_images << ',' << format_double(s.openness_pct) << '\n';
  }
  out << "mean," << format_double(report.zo_clip.mean_auroc) << ',' << format_double(report.msp.mean_auroc)
      << ",,," << format_double(report.openness_pct) << '\n';
  out << "std," << format_double(report.zo_clip.std_auroc) << ',' << format_double(report.msp.std_auroc) << ",,,\n";
  return out.str();
}

std::string histogram_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "split,class,is_unseen,bin,lo,hi,count\n";
  const double width = 1.0 / static_cast<double>(report.histogram_bins);
  for (const auto& s : report.splits) {
    for (const auto& h : s.histograms) {
      for (std::size_t b = 0; b < h.counts.size(); ++b) {
        const double lo = static_cast<double>(b) * width;
        const double hi = b + 1 == h.counts.size() ? 1.0 : static_cast<double>(b + 1) * width;
        out << csv_field(s.name) << ',' << csv_field(h.class_name) << ',' << (h.is_unseen ? 1 : 0) << ',' << b << ','
            << format_double(lo) << ',' << format_double(hi) << ',' << h.counts[b] << '\n';
      }
    }
  }
  return out.str();
}

std::string image_scores_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "split,image_id,class,is_unseen,score,msp_score,predicted_seen,n_generated\n";
  for (const auto& s : report.splits) {
    for (const auto& r : s.images) {
      out << csv_field(s.name) << ',' << csv_field(r.image_id) << ',' << csv_field(r.class_name) << ','
          << (r.is_unseen ? 1 : 0) << ',' << format_double(r.score) << ',' << format_double(r.msp_score) << ','
          << csv_field(r.predicted_seen) << ',' << r.n_generated << '\n';
    }
  }
  return out.str();
}

}  // namespace zosd
