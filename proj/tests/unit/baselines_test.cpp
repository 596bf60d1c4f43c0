#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "mobmod/baselines/baselines.hpp"
#include "mobmod/common/random.hpp"
#include "mobmod/model/transformer.hpp"
#include "support/fixtures.hpp"

namespace mobmod::baselines {
namespace {

using numerics::Tensor;

constexpr int A = 1, B = 2, C = 3;

double sum_probs(const Ranking& r) {
  double total = 0.0;
  for (const auto& [token, p] : r) total += p;
  return total;
}

TEST(Ngram, BigramAlternation) {
  const auto m = NgramModel::fit({{A, B, A, B, A}}, 2);
  const auto r = m.predict({A});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].first, B);
  EXPECT_EQ(r[0].second, 1.0);
  EXPECT_EQ(m.predict({B})[0], std::make_pair(A, 1.0));
  EXPECT_EQ(m.predict({A, B, A})[0].first, B);
}

TEST(Ngram, TrigramContext) {
  const auto m = NgramModel::fit({{A, B, C, A, B, C}}, 3);
  EXPECT_EQ(m.predict({A, B})[0], std::make_pair(C, 1.0));
  EXPECT_EQ(m.predict({C, A})[0], std::make_pair(B, 1.0));
}

TEST(Ngram, SingleTokenCorpusHasOnlyUnigrams) {
  const auto m = NgramModel::fit({{A}}, 2);
  ASSERT_NE(m.counts({}), nullptr);
  EXPECT_EQ(m.counts({})->at(A), 1u);
  EXPECT_EQ(m.counts({A}), nullptr);
  EXPECT_EQ(m.predict({A})[0], std::make_pair(A, 1.0));
}

TEST(Ngram, UnseenHistoryBacksOffToUnigram) {
  const auto m = NgramModel::fit({{A, B, A, B, A}}, 2);
  const auto r = m.predict({9});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].first, A);
  EXPECT_DOUBLE_EQ(r[0].second, 0.6);
  EXPECT_DOUBLE_EQ(sum_probs(r), 1.0);
  EXPECT_EQ(m.predict({}), r);
}

TEST(Ngram, TiesGoToTheSmallerToken) {
  const auto m = NgramModel::fit({{A, C}, {A, B}}, 2);
  const auto r = m.predict({A});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].first, B);
  EXPECT_EQ(r[1].first, C);
}

TEST(Ngram, RejectsBadInput) {
  EXPECT_THROW(NgramModel::fit({{}, {}}, 2), EmptyCorpus);
  EXPECT_THROW(NgramModel::fit({{A}}, 5), std::invalid_argument);
  EXPECT_THROW(NgramModel::fit({{A}}, 1), std::invalid_argument);
}

// Every observed context is checked against counts gathered by scanning the
// corpus directly.
TEST(Ngram, MatchesBruteForceCounts) {
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    Rng rng(trial);
    std::vector<Sequence> corpus(1 + uniform_index(rng, 4));
    for (auto& s : corpus) {
      s.resize(1 + uniform_index(rng, 12));
      for (int& t : s) t = static_cast<int>(uniform_index(rng, 4));
    }
    const int order = 2 + static_cast<int>(trial % 3);
    const auto m = NgramModel::fit(corpus, order);
    std::map<std::vector<int>, std::map<int, std::uint64_t>> brute;
    for (std::size_t len = 0; len < static_cast<std::size_t>(order); ++len) {
      for (const auto& s : corpus) {
        for (std::size_t i = len; i < s.size(); ++i) {
          ++brute[std::vector<int>(s.begin() + static_cast<long>(i - len), s.begin() + static_cast<long>(i))][s[i]];
        }
      }
    }
    for (const auto& [context, next] : brute) {
      const auto* counts = m.counts(context);
      ASSERT_NE(counts, nullptr);
      EXPECT_EQ(*counts, next);
      std::uint64_t total = 0;
      for (const auto& [t, n] : next) total += n;
      const auto r = m.predict(context);
      ASSERT_EQ(r.size(), next.size());
      for (const auto& [t, p] : r) {
        EXPECT_EQ(p, static_cast<double>(next.at(t)) / static_cast<double>(total));
      }
    }
  }
}

TEST(Ngram, JsonRoundTrip) {
  const auto m = NgramModel::fit({{A, B, C, A}, {B, B}}, 4);
  const auto back = NgramModel::from_json(m.to_json());
  EXPECT_EQ(back.order(), 4);
  EXPECT_EQ(back.to_json(), m.to_json());
  EXPECT_EQ(back.predict({C, A}), m.predict({C, A}));
}

HmmModel random_hmm(std::size_t K, std::size_t V, Rng& rng) {
  auto stochastic = [&](std::size_t rows, std::size_t cols) {
    Tensor t({rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) total += (t(r, c) = 0.05 + uniform01(rng));
      for (std::size_t c = 0; c < cols; ++c) t(r, c) /= total;
    }
    return t;
  };
  const Tensor pi = stochastic(1, K);
  return HmmModel(Tensor({K}, std::vector<double>(pi.values().begin(), pi.values().end())),
                  stochastic(K, K), stochastic(K, V));
}

double enumerate_paths(const HmmModel& m, const Sequence& seq) {
  const auto K = static_cast<std::size_t>(m.states());
  std::size_t paths = 1;
  for (std::size_t t = 0; t < seq.size(); ++t) paths *= K;
  double total = 0.0;
  for (std::size_t code = 0; code < paths; ++code) {
    std::size_t rest = code, prev = 0;
    double p = 1.0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const std::size_t s = rest % K;
      rest /= K;
      p *= (t == 0 ? m.initial()[s] : m.transition()(prev, s)) *
           m.emission()(s, static_cast<std::size_t>(seq[t]));
      prev = s;
    }
    total += p;
  }
  return total;
}

TEST(Hmm, ForwardMatchesPathEnumeration) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t K = 1 + uniform_index(rng, 3);
    const auto m = random_hmm(K, 4, rng);
    Sequence seq(1 + uniform_index(rng, 6));
    for (int& t : seq) t = static_cast<int>(uniform_index(rng, 4));
    EXPECT_NEAR(std::exp(m.log_likelihood(seq)), enumerate_paths(m, seq), 1e-9);
    EXPECT_NEAR(m.log_likelihood(seq), std::log(enumerate_paths(m, seq)), 1e-9);
  }
}

TEST(Hmm, SingleStateLikelihood) {
  const HmmModel m(Tensor::vector({1.0}), Tensor::matrix(1, 1, {1.0}), Tensor::matrix(1, 2, {0.5, 0.5}));
  EXPECT_NEAR(std::exp(m.log_likelihood({0, 0})), 0.25, 1e-15);
  EXPECT_EQ(m.log_likelihood({}), 0.0);
  EXPECT_THROW(m.log_likelihood({2}), TokenOutOfRange);
}

TEST(Hmm, RejectsMalformedParameters) {
  EXPECT_THROW(HmmModel(Tensor::vector({0.5, 0.4}), Tensor::matrix(2, 2, {1, 0, 0, 1}),
                        Tensor::matrix(2, 1, {1, 1})),
               std::invalid_argument);
  EXPECT_THROW(HmmModel(Tensor::vector({1.0}), Tensor::matrix(2, 2, {1, 0, 0, 1}),
                        Tensor::matrix(1, 1, {1})),
               numerics::ShapeMismatch);
}

TEST(Hmm, SingleStateFitIsEmpiricalFrequency) {
  const std::vector<Sequence> corpus{{0, 1, 1, 2}, {1, 3}};
  const auto m = HmmModel::fit(corpus, 4, {1, 1, 5});
  EXPECT_NEAR(m.transition()(0, 0), 1.0, 1e-15);
  const double want[] = {1.0 / 6, 3.0 / 6, 1.0 / 6, 1.0 / 6};
  for (std::size_t v = 0; v < 4; ++v) EXPECT_NEAR(m.emission()(0, v), want[v], 1e-12);
  const auto next = m.next_distribution({3, 3, 0});
  for (std::size_t v = 0; v < 4; ++v) EXPECT_NEAR(next[v], want[v], 1e-12);
}

TEST(Hmm, EmLogLikelihoodNeverDecreases) {
  Rng rng(3);
  std::vector<Sequence> corpus(20);
  for (auto& s : corpus) {
    s.resize(24);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = uniform01(rng) < 0.8 ? static_cast<int>((i / 6) % 4) : static_cast<int>(uniform_index(rng, 6));
    }
  }
  for (int K : {2, 4, 8}) {
    std::vector<double> ll;
    const auto m = HmmModel::fit(corpus, 6, {K, 30, 11}, &ll);
    ASSERT_EQ(ll.size(), 30u);
    for (std::size_t i = 1; i < ll.size(); ++i) EXPECT_GE(ll[i], ll[i - 1] - 1e-9) << "K=" << K << " it " << i;
    double final_ll = 0.0;
    for (const auto& s : corpus) final_ll += m.log_likelihood(s);
    EXPECT_GE(final_ll, ll.back() - 1e-9);
  }
}

TEST(Hmm, TwoStatesSpecializeOnSeparableCorpus) {
  // Day tokens {0, 1} followed by night tokens {2, 3}.
  Rng rng(8);
  std::vector<Sequence> corpus(30);
  for (auto& s : corpus) {
    for (int i = 0; i < 8; ++i) s.push_back(static_cast<int>(uniform_index(rng, 2)));
    for (int i = 0; i < 8; ++i) s.push_back(2 + static_cast<int>(uniform_index(rng, 2)));
  }
  const auto m = HmmModel::fit(corpus, 4, {2, 50, 1});
  auto day_mass = [&](std::size_t k) { return m.emission()(k, 0) + m.emission()(k, 1); };
  EXPECT_GT(std::max(day_mass(0), day_mass(1)), 0.95);
  EXPECT_LT(std::min(day_mass(0), day_mass(1)), 0.05);
}

TEST(Hmm, AlternatingChainPredictsTheOtherToken) {
  const HmmModel m(Tensor::vector({0.5, 0.5}), Tensor::matrix(2, 2, {0.01, 0.99, 0.99, 0.01}),
                   Tensor::matrix(2, 2, {0.99, 0.01, 0.01, 0.99}));
  EXPECT_EQ(m.predict({1, 0})[0].first, 1);
  EXPECT_EQ(m.predict({0, 1})[0].first, 0);
  EXPECT_NEAR(sum_probs(m.predict({0, 1, 0})), 1.0, 1e-9);
}

TEST(Hmm, FilterSkipsImpossibleObservations) {
  const HmmModel m(Tensor::vector({1.0, 0.0}), Tensor::matrix(2, 2, {0.0, 1.0, 1.0, 0.0}),
                   Tensor::matrix(2, 3, {0.5, 0.5, 0.0, 0.5, 0.5, 0.0}));
  HmmFilter f(m);
  f.observe(0);
  f.observe(2);  // zero probability in both states
  const auto with_gap = f.next_distribution();
  HmmFilter g(m);
  g.observe(0);
  g.observe(1);
  const auto plain = g.next_distribution();
  for (std::size_t v = 0; v < 3; ++v) EXPECT_NEAR(with_gap[v], plain[v], 1e-15);
}

TEST(Hmm, FitRejectsBadInput) {
  EXPECT_THROW(HmmModel::fit({{}}, 3, {2, 5, 1}), EmptyCorpus);
  EXPECT_THROW(HmmModel::fit({{0, 3}}, 3, {2, 5, 1}), TokenOutOfRange);
  EXPECT_THROW(HmmModel::fit({{0}}, 3, {0, 5, 1}), std::invalid_argument);
}

TEST(Hmm, FitIsSeeded) {
  const std::vector<Sequence> corpus{{0, 1, 2, 0, 1, 2}, {2, 2, 1}};
  const auto a = HmmModel::fit(corpus, 3, {3, 10, 4});
  const auto b = HmmModel::fit(corpus, 3, {3, 10, 4});
  const auto c = HmmModel::fit(corpus, 3, {3, 10, 5});
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_NE(a.to_json(), c.to_json());
}

TEST(BaselineCheckpoint, RoundTripsBothKinds) {
  const auto vocab = mobmod::testing::tiny_vocabulary();
  const auto ngram = NgramModel::fit({{1, 2, 3, 1}}, 3);
  model::Vocabulary loaded;
  const auto j = nlohmann::json::parse(ngram_checkpoint(ngram, vocab).dump());
  EXPECT_EQ(model::checkpoint_kind(j), "ngram");
  EXPECT_EQ(ngram_from_checkpoint(j, &loaded).to_json(), ngram.to_json());
  EXPECT_EQ(loaded, vocab);
  EXPECT_THROW(hmm_from_checkpoint(j), model::CheckpointError);

  const auto hmm = HmmModel::fit({{0, 1, 2, 3}}, 4, {2, 3, 1});
  const auto h = nlohmann::json::parse(hmm_checkpoint(hmm, vocab).dump());
  EXPECT_EQ(hmm_from_checkpoint(h).to_json(), hmm.to_json());
  EXPECT_THROW(ngram_from_checkpoint(h), model::CheckpointError);
  EXPECT_THROW(model::transformer_from_checkpoint(h), model::CheckpointError);
}

TEST(LocationStream, UsesLocalIds) {
  const auto vocab = mobmod::testing::tiny_vocabulary();
  model::TokenSeqs tokens{{{1, 2}, {4, 5}, {6, 7}, {8, 11}}};
  EXPECT_EQ(location_stream(tokens, vocab), (Sequence{0, 3}));
  EXPECT_EQ(location_vocab_size(vocab), 4);
  tokens[3][1] = 7;
  EXPECT_THROW(location_stream(tokens, vocab), TokenOutOfRange);
}

}  // namespace
}  // namespace mobmod::baselines
