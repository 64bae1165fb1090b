#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "beliefaudit/classify.hpp"
#include "support.hpp"

using namespace beliefaudit;

namespace {

const Distribution kPrior = normalize({0.8, 0.2});
const LikelihoodVector kLik{0.1, 0.9};

// Written from the category definitions with long double arithmetic.
OracleCategory categorize_oracle(const std::vector<double>& q, const std::vector<double>& pi,
                                 const std::vector<double>& l, const std::vector<double>& lor) {
  const auto p = testsupport::bayes_oracle(pi, l);
  const auto por = testsupport::bayes_oracle(pi, lor);
  long double zor = 0.0L;
  for (std::size_t i = 0; i < pi.size(); ++i) zor += static_cast<long double>(pi[i]) * lor[i];
  long double ler = 0.0L;
  for (std::size_t i = 0; i < q.size(); ++i) ler += q[i] * std::log(lor[i] / zor);
  if (ler > -testsupport::kl_oracle(pi, por)) return OracleCategory::AlignedWithOracle;
  if (testsupport::kl_oracle(q, por) < testsupport::kl_oracle(q, p)) return OracleCategory::CloserToOraclePosterior;
  return OracleCategory::CounterBoth;
}

}  // namespace

TEST(ClassifyUpdate, HandCases) {
  EXPECT_EQ(classify_update(bayes_update(kPrior, kLik), kPrior, kLik), UpdateClass::Optimal);
  EXPECT_EQ(classify_update(normalize({0.95, 0.05}), kPrior, kLik), UpdateClass::WrongDirection);
  EXPECT_EQ(classify_update(normalize({0.6, 0.4}), kPrior, kLik), UpdateClass::UnderUpdate);
  EXPECT_EQ(classify_update(normalize({0.05, 0.95}), kPrior, kLik), UpdateClass::OverUpdate);
}

TEST(ClassifyUpdate, HandCaseQuantities) {
  const auto wrong = decompose(normalize({0.95, 0.05}), kPrior, kLik);
  EXPECT_NEAR(wrong.info_likelihood, -2.193, 5e-4);
  EXPECT_NEAR(wrong.prior_log_lik, -1.863, 5e-4);
  const auto under = decompose(normalize({0.6, 0.4}), kPrior, kLik);
  EXPECT_NEAR(under.kl_q_pi, 0.105, 5e-4);
  EXPECT_NEAR(under.kl_p_pi, 0.566, 5e-4);
  const auto over = decompose(normalize({0.05, 0.95}), kPrior, kLik);
  EXPECT_NEAR(over.kl_q_pi, 1.342, 5e-4);
}

TEST(ClassifyUpdate, ThresholdIsStrict) {
  const auto q = normalize({1, 1});
  const double delta = decompose(q, kPrior, kLik).delta;
  EXPECT_EQ(classify_update(q, kPrior, kLik, delta), UpdateClass::UnderUpdate);
  EXPECT_EQ(classify_update(q, kPrior, kLik, std::nextafter(delta, 1.0)), UpdateClass::Optimal);
}

TEST(ClassifyUpdate, MagnitudeTieResolvesToUnderUpdate) {
  EXPECT_EQ(detail::classify_quantities(0.2, 0.05, -1.0, -1.0, 0.3, 0.3), UpdateClass::UnderUpdate);
  EXPECT_EQ(detail::classify_quantities(0.2, 0.05, -1.0, -1.0, 0.3 + 5e-13, 0.3), UpdateClass::UnderUpdate);
  EXPECT_EQ(detail::classify_quantities(0.2, 0.05, -1.0, -1.0, 0.3 + 1e-9, 0.3), UpdateClass::OverUpdate);
  EXPECT_EQ(detail::classify_quantities(0.2, 0.05, -1.0 - 5e-13, -1.0, 0.1, 0.3), UpdateClass::UnderUpdate);
}

TEST(ClassifyUpdate, WrongDirectionEquivalentForm) {
  // E_q[ln l] < E_pi[ln l]  <=>  I_LER < -KL(pi || p).
  std::mt19937 gen(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const auto q = Distribution::from_normalized(testsupport::random_simplex(gen, n));
    const auto pi = Distribution::from_normalized(testsupport::random_simplex(gen, n));
    const LikelihoodVector l(testsupport::random_likelihood(gen, n));
    const auto r = decompose(q, pi, l, 0.0);
    const double gap = r.info_likelihood - r.prior_log_lik;
    if (std::abs(gap) < 1e-9) continue;
    EXPECT_EQ(r.i_ler < -r.kl_pi_p, gap < 0.0);
    EXPECT_EQ(r.update_class == UpdateClass::WrongDirection, gap < 0.0);
  }
}

TEST(MovesAgainst, MatchesClassification) {
  EXPECT_TRUE(moves_against(normalize({0.95, 0.05}), kPrior, kLik));
  EXPECT_FALSE(moves_against(normalize({0.6, 0.4}), kPrior, kLik));
}

TEST(OracleAnalysis, IdenticalOracleIsCounterBoth) {
  const auto r = oracle_analysis(normalize({0.95, 0.05}), kPrior, kLik, kLik);
  EXPECT_EQ(r.category, OracleCategory::CounterBoth);
  EXPECT_NEAR(r.delta, r.delta_oracle, 1e-15);
}

TEST(OracleAnalysis, OracleAgreeingWithMove) {
  const auto r = oracle_analysis(normalize({0.95, 0.05}), kPrior, kLik, LikelihoodVector{0.9, 0.1});
  EXPECT_EQ(r.category, OracleCategory::AlignedWithOracle);
}

TEST(OracleAnalysis, GridSearchFindsCloserToOraclePosterior) {
  // q opposes both l and l_or but sits nearer the oracle posterior.
  bool found = false;
  for (int a = 1; a < 20 && !found; ++a) {
    for (int b = 1; b < 20 && !found; ++b) {
      const auto q = normalize({0.95, 0.05});
      const LikelihoodVector lor{0.05 * a, 0.05 * b};
      if (!moves_against(q, kPrior, lor)) continue;
      const auto r = oracle_analysis(q, kPrior, kLik, lor);
      if (r.category == OracleCategory::CloserToOraclePosterior) {
        EXPECT_LT(r.delta_oracle, r.delta);
        found = true;
      }
    }
  }
  EXPECT_TRUE(found);
}

TEST(OracleAnalysis, MatchesBruteForceCategorizer) {
  std::mt19937 gen(29);
  std::size_t counts[3] = {0, 0, 0};
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t n = 2 + trial % 4;
    const auto q = testsupport::random_simplex(gen, n);
    const auto pi = testsupport::random_simplex(gen, n);
    const auto l = testsupport::random_likelihood(gen, n);
    const auto lor = testsupport::random_likelihood(gen, n);
    const auto r = oracle_analysis(Distribution::from_normalized(q), Distribution::from_normalized(pi),
                                   LikelihoodVector(l), LikelihoodVector(lor));
    EXPECT_EQ(r.category, categorize_oracle(q, pi, l, lor));
    counts[static_cast<int>(r.category)] += 1;
  }
  for (auto c : counts) EXPECT_GT(c, 0u);
}

TEST(OracleAnalysis, Errors) {
  EXPECT_THROW(oracle_analysis(kPrior, kPrior, kLik, LikelihoodVector{0.1, 0.2, 0.3}), DimensionError);
  EXPECT_THROW(oracle_analysis(kPrior, Distribution::from_normalized({1, 0}), LikelihoodVector{1, 1},
                               LikelihoodVector{0, 1}),
               ImpossibleEvidenceError);
}

TEST(LikelihoodDivergence, HandCases) {
  EXPECT_EQ(likelihood_divergence(kLik, kLik), 0.0);
  // KL([2/3,1/3] || [1/3,2/3]) = (2/3)ln2 - (1/3)ln2.
  EXPECT_NEAR(likelihood_divergence(LikelihoodVector{1, 0.5}, LikelihoodVector{0.5, 1}), std::log(2.0) / 3.0, 1e-15);
  EXPECT_NEAR(likelihood_divergence(LikelihoodVector{0.5, 0.25}, LikelihoodVector{0.5, 1}), std::log(2.0) / 3.0,
              1e-15);
  const std::vector<double> zero{0.0, 0.0};
  const std::vector<double> one{0.5, 0.5};
  EXPECT_THROW(likelihood_divergence(zero, one), NormalizationError);
}

TEST(LikelihoodDivergence, CumulativeSumsSteps) {
  const std::vector<LikelihoodVector> a{{1, 0.5}, {0.3, 0.3}};
  const std::vector<LikelihoodVector> b{{0.5, 1}, {0.3, 0.3}};
  EXPECT_NEAR(cumulative_likelihood_divergence(a, b), std::log(2.0) / 3.0, 1e-15);
}

TEST(OracleCategory, Names) {
  EXPECT_STREQ(to_string(OracleCategory::AlignedWithOracle), "aligned_with_oracle");
  EXPECT_STREQ(to_string(OracleCategory::CloserToOraclePosterior), "closer_to_oracle_posterior");
  EXPECT_STREQ(to_string(OracleCategory::CounterBoth), "counter_both");
}
