#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "map_backend.hpp"
#include "zosd/scoring.hpp"
#include "zosd/synthetic.hpp"

using namespace zosd;
using zosd::test_support::MapBackend;
using zosd::test_support::random_unit;
using zosd::test_support::with_cosine;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

const PromptTemplate kTemplate;

EmbeddingVector basis(std::size_t dim, std::size_t i) {
  std::vector<double> v(dim, 0.0);
  v[i] = 1.0;
  return normalize(std::span<const double>(v));
}

// One image plus labels at prescribed cosines.
struct Scene {
  MapBackend backend;
  EmbeddingVector image;
  std::vector<Label> seen;
  std::vector<Label> generated;
};

Scene scene(const std::vector<double>& seen_cos, const std::vector<double>& gen_cos, std::mt19937_64& rng,
            std::size_t dim = 64) {
  Scene s;
  s.image = random_unit(rng, dim);
  for (std::size_t i = 0; i < seen_cos.size(); ++i) {
    s.seen.push_back(seen_label("s" + std::to_string(i)));
    s.backend.texts.emplace(kTemplate.render(s.seen.back().name), with_cosine(s.image, seen_cos[i], rng));
  }
  for (std::size_t i = 0; i < gen_cos.size(); ++i) {
    s.generated.push_back(generated_label("g" + std::to_string(i)));
    s.backend.texts.emplace(kTemplate.render(s.generated.back().name), with_cosine(s.image, gen_cos[i], rng));
  }
  return s;
}

ScoringConfig tau(double t) {
  ScoringConfig c;
  c.temperature = t;
  return c;
}

}  // namespace

TEST(OpenSetScore, EmptyGeneratedIsExactlyZero) {
  std::mt19937_64 rng(1);
  auto s = scene({0.3, 0.1, -0.2}, {}, rng);
  const auto r = open_set_score(s.image, LabelSpace(s.seen, s.generated), s.backend, tau(100), "x");
  EXPECT_EQ(r.score, 0.0);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].kind, DiagnosticKind::EmptyCandidates);
}

TEST(OpenSetScore, EquidistantLabelsGiveOneHalf) {
  MapBackend b;
  const auto image = basis(8, 0);
  std::vector<Label> seen{seen_label("a"), seen_label("b")};
  std::vector<Label> gen{generated_label("c"), generated_label("d")};
  b.texts.emplace(kTemplate.render("a"), basis(8, 1));
  b.texts.emplace(kTemplate.render("b"), basis(8, 2));
  b.texts.emplace(kTemplate.render("c"), basis(8, 3));
  b.texts.emplace(kTemplate.render("d"), basis(8, 4));
  const auto r = open_set_score(image, LabelSpace(seen, gen), b, tau(100));
  EXPECT_EQ(r.score, 0.5);
}

TEST(OpenSetScore, ThreeTermExample) {
  std::mt19937_64 rng(2);
  auto s = scene({0.2, 0.1}, {0.9}, rng);
  const auto r = open_set_score(s.image, LabelSpace(s.seen, s.generated), s.backend, tau(10));
  // e^9 / (e^2 + e^1 + e^9), evaluated by hand: 8103.0839 / 8113.1913
  const double expected = std::exp(9.0) / (std::exp(2.0) + std::exp(1.0) + std::exp(9.0));
  EXPECT_NEAR(expected, 0.9987542, 1e-7);
  EXPECT_NEAR(r.score, expected, 1e-5);
}

TEST(OpenSetScore, ScoreIdentitiesAndMspIgnoresGenerated) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> sc(1 + trial % 5), gc(trial % 7);
    for (auto& c : sc) c = u(rng);
    for (auto& c : gc) c = u(rng);
    auto s = scene(sc, gc, rng, 32);
    const auto r = open_set_score(s.image, LabelSpace(s.seen, s.generated), s.backend, tau(1 + trial % 100));
    double seen_mass = 0.0, gen_mass = 0.0;
    for (const auto& e : r.distribution.entries()) (e.label.kind == LabelKind::Seen ? seen_mass : gen_mass) += e.probability;
    EXPECT_NEAR(r.score, 1.0 - seen_mass, 1e-6);
    EXPECT_NEAR(r.score, gen_mass, 1e-6);
    if (gc.empty()) EXPECT_EQ(r.score, 0.0);

    const auto seen_only = open_set_score(s.image, LabelSpace(s.seen, std::vector<Label>{}), s.backend,
                                          tau(1 + trial % 100));
    EXPECT_EQ(r.msp_score, seen_only.msp_score);
    EXPECT_EQ(r.predicted_seen, seen_only.predicted_seen);
  }
}

TEST(OpenSetScore, OppositeLabelAddsNegligibleMass) {
  std::mt19937_64 rng(4);
  auto s = scene({0.3, 0.2}, {0.25}, rng);
  const auto before = open_set_score(s.image, LabelSpace(s.seen, s.generated), s.backend, tau(100));
  std::vector<double> neg(s.image.dim());
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -s.image.values()[i];
  s.generated.push_back(generated_label("opposite"));
  s.backend.texts.emplace(kTemplate.render("opposite"), normalize(std::span<const double>(neg)));
  const auto after = open_set_score(s.image, LabelSpace(s.seen, s.generated), s.backend, tau(100));
  EXPECT_LT(std::abs(after.score - before.score), 1e-6);
}

TEST(OpenSetScore, ReorderingWithinKindsIsInvariant) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> sc(4), gc(5);
    for (auto& c : sc) c = u(rng);
    for (auto& c : gc) c = u(rng);
    auto s = scene(sc, gc, rng, 32);
    const auto a = open_set_score(s.image, LabelSpace(s.seen, s.generated), s.backend, tau(50));
    auto seen = s.seen;
    auto gen = s.generated;
    std::shuffle(seen.begin(), seen.end(), rng);
    std::shuffle(gen.begin(), gen.end(), rng);
    const auto b = open_set_score(s.image, LabelSpace(seen, gen), s.backend, tau(50));
    EXPECT_NEAR(a.score, b.score, 1e-9);
    EXPECT_NEAR(a.msp_score, b.msp_score, 1e-9);
    EXPECT_EQ(a.predicted_seen, b.predicted_seen);
  }
}

TEST(OpenSetScore, RaisingGeneratedCosineNeverLowersScore) {
  std::mt19937_64 rng(6);
  auto s = scene({0.4, 0.1}, {0.0, 0.2}, rng);
  double last = -1.0;
  for (int step = 0; step <= 20; ++step) {
    const double c = -1.0 + step * 0.1;
    s.backend.texts.insert_or_assign(kTemplate.render("g0"), with_cosine(s.image, c, rng));
    const auto r = open_set_score(s.image, LabelSpace(s.seen, s.generated), s.backend, tau(30));
    EXPECT_GE(r.score, last - 1e-12);
    last = r.score;
  }
}

TEST(OpenSetScore, MspPicksFirstOnTies) {
  MapBackend b;
  const auto image = basis(4, 0);
  b.texts.emplace(kTemplate.render("x"), basis(4, 1));
  b.texts.emplace(kTemplate.render("y"), basis(4, 2));
  const auto r = open_set_score(image, LabelSpace({seen_label("x"), seen_label("y")}, std::vector<Label>{}), b,
                                tau(100));
  EXPECT_EQ(r.predicted_seen.name, "x");
  EXPECT_EQ(r.msp_score, 0.5);
}

TEST(OpenSetScore, MissingPrompts) {
  std::mt19937_64 rng(7);
  auto s = scene({0.3}, {0.2}, rng);
  auto gen = s.generated;
  gen.push_back(generated_label("ghost"));
  EXPECT_EQ(code_of([&] { open_set_score(s.image, LabelSpace(s.seen, gen), s.backend, tau(100)); }),
            ErrorCode::MissingTextEmbedding);
  auto cfg = tau(100);
  cfg.skip_missing_candidates = true;
  const auto r = open_set_score(s.image, LabelSpace(s.seen, gen), s.backend, cfg);
  EXPECT_EQ(r.distribution.size(), 2u);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].kind, DiagnosticKind::SkippedCandidate);

  auto seen = s.seen;
  seen.push_back(seen_label("phantom"));
  EXPECT_EQ(code_of([&] { open_set_score(s.image, LabelSpace(seen, s.generated), s.backend, cfg); }),
            ErrorCode::MissingTextEmbedding);
}

TEST(LabelSpaceRules, Validation) {
  EXPECT_EQ(code_of([] { LabelSpace({}, std::vector<Label>{}); }), ErrorCode::EmptySeen);
  EXPECT_EQ(code_of([] { LabelSpace({seen_label("a"), seen_label("A")}, std::vector<Label>{}); }),
            ErrorCode::DuplicateLabel);
  EXPECT_EQ(code_of([] { LabelSpace({seen_label("a")}, {generated_label("a")}); }), ErrorCode::DuplicateLabel);
  EXPECT_NO_THROW(LabelSpace({seen_label("a")}, {generated_label("a")}, true));
  EXPECT_EQ(code_of([] { LabelSpace({generated_label("a")}, std::vector<Label>{}); }), ErrorCode::InvalidArgument);
}

namespace {

ScoreResult with_distribution(std::vector<Label> labels, std::vector<double> probs) {
  ScoreResult r;
  r.distribution = SoftmaxDistribution(std::move(labels), std::move(probs));
  return r;
}

}  // namespace

TEST(TopContributors, Examples) {
  const auto four = with_distribution({seen_label("a"), seen_label("b"), generated_label("c"), generated_label("d")},
                                      {0.25, 0.25, 0.25, 0.25});
  EXPECT_EQ(top_contributors(four, 0.1).size(), 4u);

  std::vector<Label> twenty;
  for (int i = 0; i < 20; ++i) twenty.push_back(seen_label("l" + std::to_string(i)));
  EXPECT_TRUE(top_contributors(with_distribution(twenty, std::vector<double>(20, 0.05)), 0.1).empty());

  const auto abc = with_distribution({seen_label("c"), seen_label("a"), generated_label("b")}, {0.1, 0.7, 0.2});
  const auto top = top_contributors(abc, 0.1);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].label.name, "a");
  EXPECT_DOUBLE_EQ(top[0].probability, 0.7);
  EXPECT_EQ(top[1].label.name, "b");
  EXPECT_EQ(code_of([&] { top_contributors(abc, 1.0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { top_contributors(abc, -0.1); }), ErrorCode::InvalidArgument);
}

namespace {

const std::vector<std::string> kSixSeen{"airplane", "automobile", "bird", "cat", "deer", "dog"};

SplitSpec boat_dog_split() {
  SplitSpec s;
  s.name = "boat_dog";
  s.seen_classes = kSixSeen;
  s.unseen_classes = {"boat"};
  s.images = {{"boat_0001", "boat"}, {"dog_0001", "dog"}};
  return s;
}

}  // namespace

TEST(RunInference, AlignedSyntheticBoatAndDog) {
  const std::vector<SplitSpec> splits{boat_dog_split()};
  SyntheticParams p;
  SyntheticBackend backend(p, image_classes(splits));
  const auto cands = synthetic_candidates(splits, p);
  const auto seen = seen_labels(kSixSeen);
  const ScoringConfig cfg;

  const auto boat = run_inference("boat_0001", seen, backend, cands, cfg, StopList::english());
  EXPECT_GT(boat.score, 0.5);
  const auto dog = run_inference("dog_0001", seen, backend, cands, cfg, StopList::english());
  EXPECT_LT(dog.score, 0.5);
  EXPECT_EQ(dog.predicted_seen.name, "dog");

  EXPECT_EQ(code_of([&] { run_inference("nope", seen, backend, cands, cfg, StopList::english()); }),
            ErrorCode::MissingImage);
}

TEST(RunInference, EmptyCandidatesAfterFilteringScoreZero) {
  MapBackend b;
  std::mt19937_64 rng(8);
  b.images.emplace("img", random_unit(rng, 16));
  b.texts.emplace(kTemplate.render("cat"), random_unit(rng, 16));
  CandidateStore store;
  DecoderOutput d;
  d.image_id = "img";
  d.stored_k = 2;
  d.positions.emplace_back(std::vector<WordLogprob>{{"the", -0.1}, {"cat", -0.2}});
  store.insert(d);
  ScoringConfig cfg;
  cfg.k = 2;
  const auto r = run_inference("img", seen_labels(std::vector<std::string>{"cat"}), b, store, cfg,
                               StopList::english());
  EXPECT_EQ(r.score, 0.0);
  EXPECT_FALSE(r.diagnostics.empty());
  EXPECT_EQ(code_of([&] { run_inference("other", {}, b, store, cfg, StopList::english()); }),
            ErrorCode::MissingImage);
}

TEST(RunInference, BatchIsIndependentOfThreadCount) {
  SplitSpec s = boat_dog_split();
  s.images.clear();
  for (int i = 0; i < 40; ++i) {
    s.images.push_back({"boat_" + std::to_string(i), "boat"});
    s.images.push_back({"cat_" + std::to_string(i), "cat"});
  }
  const std::vector<SplitSpec> splits{s};
  SyntheticParams p;
  p.dim = 64;
  SyntheticBackend backend(p, image_classes(splits));
  const auto cands = synthetic_candidates(splits, p);
  std::vector<std::string> ids;
  for (const auto& img : s.images) ids.push_back(img.id);
  const auto seen = seen_labels(kSixSeen);
  const auto one = run_inference_batch(ids, seen, backend, cands, {}, StopList::english(), 1);
  for (std::size_t threads : {2u, 4u, 16u}) {
    const auto many = run_inference_batch(ids, seen, backend, cands, {}, StopList::english(), threads);
    ASSERT_EQ(many.size(), one.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
      EXPECT_EQ(many[i].image_id, one[i].image_id);
      EXPECT_EQ(many[i].score, one[i].score);
      EXPECT_EQ(many[i].msp_score, one[i].msp_score);
    }
  }
  ids.insert(ids.begin() + 10, "missing_a");
  ids.push_back("missing_b");
  try {
    run_inference_batch(ids, seen, backend, cands, {}, StopList::english(), 8);
    FAIL() << "expected MissingImage";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingImage);
    EXPECT_NE(std::string(e.what()).find("missing_a"), std::string::npos);
  }
}
