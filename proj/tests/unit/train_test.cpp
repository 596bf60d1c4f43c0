#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mobmod/train/training.hpp"
#include "support/fixtures.hpp"

namespace mobmod::train {
namespace {

using model::Scale;

MultiScaleTrajectory day_of(const std::string& user, std::int64_t day) {
  MultiScaleTrajectory t;
  t.user = user;
  t.day = day;
  for (auto& s : t.tokens) s.assign(24, "OFF");
  return t;
}

std::vector<MultiScaleTrajectory> user_days(const std::string& user, int n) {
  std::vector<MultiScaleTrajectory> out;
  for (int d = 0; d < n; ++d) out.push_back(day_of(user, 18000 + d));
  return out;
}

TEST(Splits, FloorFractions) {
  const auto ten = split_counts(10);
  EXPECT_EQ(ten.train, 8u);
  EXPECT_EQ(ten.dev, 1u);
  EXPECT_EQ(ten.test, 1u);
  const auto seven = split_counts(7);
  EXPECT_EQ(seven.train, 5u);
  EXPECT_EQ(seven.dev, 0u);
  EXPECT_EQ(seven.test, 2u);
  EXPECT_THROW(split_counts(2), InsufficientData);
}

TEST(Splits, ChronologicalPerUserWithExclusions) {
  auto all = user_days("a", 10);
  const auto b = user_days("b", 2);
  all.insert(all.end(), b.begin(), b.end());
  std::reverse(all.begin(), all.end());
  const auto s = make_splits(all);
  ASSERT_EQ(s.train.size(), 8u);
  ASSERT_EQ(s.dev.size(), 1u);
  ASSERT_EQ(s.test.size(), 1u);
  EXPECT_EQ(s.train.front().day, 18000);
  EXPECT_EQ(s.train.back().day, 18007);
  EXPECT_EQ(s.dev[0].day, 18008);
  EXPECT_EQ(s.test[0].day, 18009);
  EXPECT_EQ(s.excluded_users, std::vector<std::string>{"b"});
}

TEST(Splits, TokenizeAllReportsUnknownTokens) {
  const auto vocab = mobmod::testing::tiny_vocabulary();
  auto days = user_days("a", 2);
  EXPECT_EQ(tokenize_all(days, vocab).size(), 2u);
  days[1].tokens[2][3] = "B9";
  EXPECT_THROW(tokenize_all(days, vocab), VocabMismatch);
}

// Small campus corpus shared by the training tests.
struct Fixture {
  mobmod::testing::Corpus corpus;
  Datasets splits;
  std::vector<TokenSeqs> train, dev, test;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    x.corpus = mobmod::testing::campus_corpus(mobmod::testing::main_campus(12, 4, 0.1, false), 14, 60);
    x.splits = make_splits(x.corpus.trajectories);
    x.train = tokenize_all(x.splits.train, x.corpus.vocab);
    x.dev = tokenize_all(x.splits.dev, x.corpus.vocab);
    x.test = tokenize_all(x.splits.test, x.corpus.vocab);
    return x;
  }();
  return f;
}

model::ModelConfig small_config(int vocab_size) {
  model::ModelConfig c;
  c.layers = 1;
  c.heads = 2;
  c.d_model = 16;
  c.d_ff = 64;
  c.n_max = 24;
  c.vocab_size = vocab_size;
  return c;
}

TrainConfig quick(int epochs, std::uint64_t seed = 1) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 20;
  t.seed = seed;
  return t;
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  const auto& f = fixture();
  const auto init = model::ModelParams::init(small_config(f.corpus.vocab.size()), 3);
  auto config = quick(2);
  config.adam.learning_rate = 0.0;
  const auto r = train(init, f.train, f.dev, config);
  const auto a = init.tensors(), b = r.params.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i], *b[i]);
  ASSERT_EQ(r.curve.size(), 3u);
  EXPECT_NEAR(r.curve[0].train_loss, r.curve[2].train_loss, 1e-9);
}

TEST(Train, LossDecreasesAndCurveIsReproducible) {
  const auto& f = fixture();
  const auto init = model::ModelParams::init(small_config(f.corpus.vocab.size()), 3);
  std::vector<EpochRecord> seen;
  const auto a = train(init, f.train, f.dev, quick(6), [&](const EpochRecord& r) { seen.push_back(r); });
  ASSERT_EQ(a.curve.size(), 7u);
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_GT(a.curve[1].train_loss, a.curve[6].train_loss);
  EXPECT_GT(a.curve[0].train_loss, a.curve[1].train_loss);
  EXPECT_GT(a.best_epoch, 0);
  double best = a.curve[0].dev_loss;
  for (const auto& r : a.curve) best = std::min(best, r.dev_loss);
  EXPECT_EQ(a.curve[static_cast<std::size_t>(a.best_epoch)].dev_loss, best);
  EXPECT_NEAR(dataset_loss(a.params, f.dev), best, 1e-9);

  const auto b = train(init, f.train, f.dev, quick(6));
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    EXPECT_EQ(a.curve[i].train_loss, b.curve[i].train_loss);
    EXPECT_EQ(a.curve[i].dev_loss, b.curve[i].dev_loss);
  }
  const auto c = train(init, f.train, f.dev, quick(2, 2));
  EXPECT_NE(a.curve[1].train_loss, c.curve[1].train_loss);
}

TEST(Train, WithoutDevDataTheLastEpochWins) {
  const auto& f = fixture();
  const auto init = model::ModelParams::init(small_config(f.corpus.vocab.size()), 3);
  const auto r = train(init, f.train, {}, quick(2));
  EXPECT_EQ(r.best_epoch, 2);
  EXPECT_TRUE(std::isnan(r.curve[1].dev_loss));
}

TEST(Train, NonFiniteLossAborts) {
  const auto& f = fixture();
  auto init = model::ModelParams::init(small_config(f.corpus.vocab.size()), 3);
  init.w_out[5] = std::nan("");
  EXPECT_THROW(train(init, f.train, f.dev, quick(1)), DivergenceDetected);
}

TEST(Train, RejectsEmptyTrainingSet) {
  const auto init = model::ModelParams::init(mobmod::testing::tiny_config(), 1);
  EXPECT_THROW(train(init, {}, {}, quick(1)), InsufficientData);
}

TEST(FineTune, ZeroEpochsReturnsTheGlobalModel) {
  const auto& f = fixture();
  const auto global = model::ModelParams::init(small_config(f.corpus.vocab.size()), 4);
  FineTuneConfig config;
  config.epochs = 0;
  const auto r = fine_tune(global, {f.train[0], f.train[1]}, {f.dev[0]}, config);
  const auto a = global.tensors(), b = r.params.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i], *b[i]);
}

TEST(FineTune, ImprovesTheUserAndLeavesGlobalUntouched) {
  const auto& f = fixture();
  const auto global = train(model::ModelParams::init(small_config(f.corpus.vocab.size()), 4),
                            f.train, f.dev, quick(3))
                          .params;
  const std::string user = f.splits.train.front().user;
  std::vector<MultiScaleTrajectory> days;
  for (const auto& t : f.corpus.trajectories) {
    if (t.user == user) days.push_back(t);
  }
  const auto own = make_splits(days);
  const auto user_train = tokenize_all(own.train, f.corpus.vocab);
  const auto user_dev = tokenize_all(own.dev, f.corpus.vocab);
  const auto before = evaluate(global, f.corpus.vocab, f.test, EvalMode::NextStep).to_json();
  FineTuneConfig config;
  config.epochs = 5;
  config.learning_rate = 0.003;
  const auto tuned = fine_tune(global, user_train, user_dev, config);
  EXPECT_EQ(evaluate(global, f.corpus.vocab, f.test, EvalMode::NextStep).to_json(), before);
  EXPECT_GE(evaluate(tuned.params, f.corpus.vocab, user_dev, EvalMode::NextStep).accuracy(Scale::Location),
            evaluate(global, f.corpus.vocab, user_dev, EvalMode::NextStep).accuracy(Scale::Location));
}

TEST(Train, LossCsv) {
  std::ostringstream out;
  write_loss_csv({{0, 2.5, 2.75}, {1, 1.5, std::nan("")}}, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "epoch,train_loss,dev_loss");
  EXPECT_NE(out.str().find("\n0,2.5"), std::string::npos);
  EXPECT_NE(out.str().find("\n1,1.5,"), std::string::npos);
}

// Test day of four bins whose location stream is OFF, A, B, D.
std::vector<TokenSeqs> one_day(const model::Vocabulary& v) {
  TokenSeqs t;
  for (std::size_t s = 0; s < model::kScaleCount; ++s) t[s].assign(4, v.off_id(static_cast<Scale>(s)));
  t[3] = {8, 9, 10, 11};
  return {t};
}

TEST(Evaluate, BaselineAccuracyAndTopK) {
  const auto v = mobmod::testing::tiny_vocabulary();
  // Local ids: OFF = 0, A = 1, B = 2, D = 3.
  const BaselinePredictor predict = [](const std::vector<int>& history) -> std::vector<std::pair<int, double>> {
    switch (history.size()) {
      case 1: return {{1, 0.9}};
      case 2: return {{2, 0.6}, {1, 0.4}};
      default: return {{0, 0.5}, {2, 0.3}, {3, 0.2}};
    }
  };
  const auto r = evaluate_baseline("toy", predict, v, one_day(v), EvalMode::NextStep);
  const auto& c = r.counts[3];
  EXPECT_EQ(c.scored, 3u);
  EXPECT_EQ(c.correct, 2u);
  EXPECT_NEAR(r.accuracy(Scale::Location), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(c.top_k_hits[0], 2u);
  EXPECT_EQ(c.top_k_hits[1], 3u);
  EXPECT_EQ(c.top_k_hits[2], 3u);
  EXPECT_EQ(c.missed_presence, 1u);
  EXPECT_EQ(c.correct + c.missed_presence + c.false_presence + c.wrong_value, c.scored);
  EXPECT_EQ(r.scales, std::vector<Scale>{Scale::Location});
  const auto j = r.to_json();
  EXPECT_EQ(j["model"], "toy");
  EXPECT_EQ(j["mode"], "next-step");
  EXPECT_EQ(j["scales"]["location"]["scored"], 3);
}

TEST(Evaluate, RolloutFeedsPredictionsBack) {
  const auto v = mobmod::testing::tiny_vocabulary();
  std::vector<std::vector<int>> histories;
  const BaselinePredictor predict = [&](const std::vector<int>& history) -> std::vector<std::pair<int, double>> {
    histories.push_back(history);
    return {{3, 1.0}};
  };
  const auto r = evaluate_baseline("toy", predict, v, one_day(v), EvalMode::Rollout);
  EXPECT_EQ(r.counts[3].correct, 1u);
  ASSERT_EQ(histories.size(), 3u);
  EXPECT_EQ(histories[2], (std::vector<int>{0, 3, 3}));
}

TEST(Evaluate, AllOffDayPredictedOffScoresOne) {
  const auto v = mobmod::testing::tiny_vocabulary();
  auto p = model::ModelParams::zeros(mobmod::testing::tiny_config());
  for (std::size_t s = 0; s < model::kScaleCount; ++s) p.b_out[static_cast<std::size_t>(v.off_id(static_cast<Scale>(s)))] = 1.0;
  TokenSeqs day;
  for (std::size_t s = 0; s < model::kScaleCount; ++s) day[s].assign(4, v.off_id(static_cast<Scale>(s)));
  for (EvalMode mode : {EvalMode::NextStep, EvalMode::Rollout}) {
    const auto r = evaluate(p, v, {day}, mode);
    for (std::size_t s = 0; s < model::kScaleCount; ++s) {
      EXPECT_EQ(r.counts[s].scored, 3u);
      EXPECT_EQ(r.counts[s].accuracy(), 1.0);
    }
  }
  const auto miss = evaluate(p, v, one_day(v), EvalMode::NextStep);
  EXPECT_EQ(miss.counts[3].missed_presence, 3u);
  EXPECT_EQ(miss.counts[0].correct, 3u);
}

TEST(Evaluate, ModeNames) {
  EXPECT_EQ(eval_mode_from_string("rollout"), EvalMode::Rollout);
  EXPECT_EQ(to_string(EvalMode::NextStep), "next-step");
  EXPECT_THROW(eval_mode_from_string("beam"), std::invalid_argument);
}

TEST(Metrics, TrajectorySimilarity) {
  auto a = day_of("u", 1), b = day_of("u", 1);
  for (int i = 0; i < 24; ++i) {
    a.tokens[3][static_cast<std::size_t>(i)] = "X/1/1";
    b.tokens[3][static_cast<std::size_t>(i)] = "Y/1/1";
  }
  EXPECT_EQ(trajectory_similarity(a, a), 1.0);
  EXPECT_EQ(trajectory_similarity(a, b), 0.0);
  b.tokens[3][0] = "X/1/1";
  EXPECT_DOUBLE_EQ(trajectory_similarity(a, b), 1.0 / 24.0);
  b.tokens[3].pop_back();
  EXPECT_THROW(trajectory_similarity(a, b), LengthMismatch);
}

TEST(Metrics, RSquared) {
  EXPECT_EQ(r_squared({1, 2, 3}, {1, 2, 3}), 1.0);
  EXPECT_NEAR(r_squared({2, 2, 2}, {1, 2, 3}), 0.0, 1e-15);
  EXPECT_LT(r_squared({3, 2, 1}, {1, 2, 3}), 0.0);
  EXPECT_NEAR(r_squared({1, 2, 4}, {1, 2, 3}), 1.0 - 1.0 / 2.0, 1e-15);
  EXPECT_THROW(r_squared({1, 1}, {2, 2}), ConstantObserved);
  EXPECT_THROW(r_squared({1, 2}, {1, 2, 3}), LengthMismatch);
  EXPECT_THROW(r_squared({1}, {1}), LengthMismatch);
}

}  // namespace
}  // namespace mobmod::train
