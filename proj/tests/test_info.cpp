#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "beliefaudit/info.hpp"
#include "support.hpp"

using namespace beliefaudit;
using testsupport::bayes_oracle;
using testsupport::kl_oracle;

namespace {

std::vector<double> vals(const Distribution& d) { return d.values(); }

}  // namespace

TEST(Normalize, DividesBySum) {
  EXPECT_EQ(vals(normalize({1, 1, 1, 1})), (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  EXPECT_EQ(vals(normalize({2, 1, 1})), (std::vector<double>{0.5, 0.25, 0.25}));
  const auto d = normalize({0.8, 0.1, 0.05, 0.05});
  EXPECT_NEAR(d[0], 0.8, 1e-15);
  EXPECT_NEAR(d[3], 0.05, 1e-15);
}

TEST(Normalize, RejectsBadInput) {
  EXPECT_THROW(normalize({0, 0, 0}), NormalizationError);
  EXPECT_THROW(normalize({1, -1, 1}), NormalizationError);
  EXPECT_THROW(normalize({1, NAN}), NormalizationError);
  EXPECT_THROW(normalize({1, INFINITY}), NormalizationError);
  EXPECT_THROW(normalize({1}), NormalizationError);
}

TEST(Distribution, FromNormalizedValidates) {
  EXPECT_NO_THROW(Distribution::from_normalized({0.5, 0.5 + 5e-7}));
  EXPECT_THROW(Distribution::from_normalized({0.5, 0.6}), NormalizationError);
  EXPECT_THROW(Distribution::from_normalized({1.0}), NormalizationError);
  EXPECT_THROW(Distribution::from_normalized({1.5, -0.5}), NormalizationError);
  EXPECT_EQ(Distribution::uniform(5).size(), 5u);
  EXPECT_EQ(normalize({0.1, 0.7, 0.2}).argmax(), 1u);
}

TEST(LikelihoodVector, Validates) {
  EXPECT_THROW(LikelihoodVector({0.5, 1.5}), DimensionError);
  EXPECT_THROW(LikelihoodVector({0.5, -0.1}), DimensionError);
  EXPECT_THROW(LikelihoodVector({0.0, 0.0}), ImpossibleEvidenceError);
  EXPECT_TRUE(LikelihoodVector({0.3, 0.3}).is_constant());
  EXPECT_FALSE(LikelihoodVector({0.3, 0.4}).is_constant());
}

TEST(KlDivergence, HandCases) {
  EXPECT_EQ(kl_divergence(normalize({1, 1}), normalize({1, 1})), 0.0);
  EXPECT_NEAR(kl_divergence(Distribution::from_normalized({1, 0}), normalize({1, 1})), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(kl_divergence(normalize({3, 1}), normalize({1, 3})), 0.5 * std::log(3.0), 1e-15);
  EXPECT_THROW(kl_divergence(normalize({1, 1}), normalize({1, 1, 1})), DimensionError);
}

TEST(KlDivergence, ZeroInSecondArgumentUsesFloor) {
  const auto a = normalize({1, 1});
  const auto b = Distribution::from_normalized({1, 0});
  EXPECT_NEAR(kl_divergence(a, b), 0.5 * std::log(0.5) + 0.5 * (std::log(0.5) - std::log(kLogFloor)), 1e-12);
}

TEST(KlDivergence, MatchesOracleAndStaysNonNegative) {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const auto a = testsupport::random_simplex(gen, n);
    const auto b = testsupport::random_simplex(gen, n);
    const double kl = kl_divergence(Distribution::from_normalized(a), Distribution::from_normalized(b));
    EXPECT_NEAR(kl, static_cast<double>(kl_oracle(a, b)), 1e-12);
    EXPECT_GE(kl, 0.0);
  }
}

TEST(KlDivergence, TinyMassesNeverGoNegative) {
  // Entries straddling the zero floor.
  const auto q = Distribution::from_normalized({1.0 - 3e-10, 1e-10, 2e-10});
  const auto p = Distribution::from_normalized({1.0 - 1.5e-10, 4e-11, 1.1e-10});
  EXPECT_GE(kl_divergence(q, p), 0.0);
  EXPECT_GE(kl_divergence(p, q), 0.0);
}

TEST(MarginalLikelihood, HandCases) {
  EXPECT_NEAR(marginal_likelihood(Distribution::uniform(4), LikelihoodVector{0.3, 0.3, 0.3, 0.3}), 0.3, 1e-15);
  EXPECT_NEAR(marginal_likelihood(normalize({0.8, 0.2}), LikelihoodVector{0.1, 0.9}), 0.26, 1e-15);
  EXPECT_THROW(marginal_likelihood(Distribution::from_normalized({1, 0}), LikelihoodVector{0, 0.9}),
               ImpossibleEvidenceError);
  EXPECT_THROW(marginal_likelihood(Distribution::uniform(3), LikelihoodVector{0.1, 0.9}), DimensionError);
}

TEST(BayesUpdate, HandCases) {
  const auto p = bayes_update(Distribution::uniform(4), LikelihoodVector{0.8, 0.1, 0.05, 0.05});
  EXPECT_NEAR(p[0], 0.8, 1e-15);
  EXPECT_NEAR(p[2], 0.05, 1e-15);
  const auto same = bayes_update(normalize({1, 1}), LikelihoodVector{0.4, 0.4});
  EXPECT_NEAR(same[0], 0.5, 1e-15);
  const auto q = bayes_update(normalize({0.8, 0.2}), LikelihoodVector{0.1, 0.9});
  EXPECT_NEAR(q[0], 4.0 / 13.0, 1e-15);
  EXPECT_NEAR(q[1], 9.0 / 13.0, 1e-15);
}

TEST(BayesUpdate, MatchesOracle) {
  std::mt19937 gen(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const auto prior = testsupport::random_simplex(gen, n);
    const auto lik = testsupport::random_likelihood(gen, n);
    const auto p = bayes_update(Distribution::from_normalized(prior), LikelihoodVector(lik));
    EXPECT_LT(testsupport::max_abs_diff(p.values(), bayes_oracle(prior, lik)), 1e-14);
  }
}

TEST(BayesUpdate, ScaleInvariance) {
  std::mt19937 gen(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto prior = Distribution::from_normalized(testsupport::random_simplex(gen, 5));
    auto lik = testsupport::random_likelihood(gen, 5);
    const auto post = Distribution::from_normalized(testsupport::random_simplex(gen, 5));
    auto scaled = lik;
    for (auto& v : scaled) v *= 0.37;
    const LikelihoodVector l(lik), s(scaled);
    EXPECT_LT(testsupport::max_abs_diff(bayes_update(prior, l).values(), bayes_update(prior, s).values()), 1e-12);
    EXPECT_NEAR(expected_ler(post, l, marginal_likelihood(prior, l)),
                expected_ler(post, s, marginal_likelihood(prior, s)), 1e-9);
  }
}

TEST(CumulativeBayes, FoldCases) {
  const auto prior = normalize({1, 1});
  EXPECT_EQ(cumulative_bayes(prior, {}), prior);
  const std::vector<LikelihoodVector> liks{{1.0, 0.5}, {1.0, 0.5}};
  const auto p = cumulative_bayes(prior, liks);
  EXPECT_NEAR(p[0], 0.8, 1e-15);
  EXPECT_NEAR(p[1], 0.2, 1e-15);
}

TEST(CumulativeBayes, FoldEqualsOneShotProduct) {
  std::mt19937 gen(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const auto prior = testsupport::random_simplex(gen, n);
    std::vector<LikelihoodVector> liks;
    std::vector<double> product = prior;
    for (int k = 0; k < 11; ++k) {
      auto l = testsupport::random_likelihood(gen, n, 0.05);
      for (std::size_t i = 0; i < n; ++i) product[i] *= l[i];
      liks.emplace_back(l);
    }
    const auto folded = cumulative_bayes(Distribution::from_normalized(prior), liks);
    EXPECT_LT(testsupport::max_abs_diff(folded.values(), normalize(product).values()), 1e-12);
  }
}

TEST(CumulativeBayes, ReportsFailingStep) {
  const auto prior = Distribution::from_normalized({1, 0});
  const std::vector<LikelihoodVector> liks{{0.5, 0.5}, {0.5, 0.5}, {0.0, 1.0}};
  try {
    cumulative_bayes(prior, liks);
    FAIL() << "expected ImpossibleEvidenceError";
  } catch (const ImpossibleEvidenceError& e) {
    EXPECT_EQ(e.step(), 3u);
  }
  const std::vector<LikelihoodVector> bad{{0.5, 0.5, 0.5}};
  EXPECT_THROW(cumulative_bayes(prior, bad), DimensionError);
}

TEST(ExpectedLer, HandCases) {
  const LikelihoodVector flat{0.4, 0.4, 0.4};
  EXPECT_NEAR(expected_ler(normalize({5, 3, 2}), flat, 0.4), 0.0, 1e-15);
  const auto prior = normalize({0.8, 0.2});
  const LikelihoodVector lik{0.1, 0.9};
  const double ler = expected_ler(normalize({1, 1}), lik, 0.26);
  EXPECT_NEAR(ler, 0.5 * std::log(0.1 / 0.26) + 0.5 * std::log(0.9 / 0.26), 1e-15);
  EXPECT_NEAR(ler, 0.1431, 5e-5);
  const auto p = bayes_update(prior, lik);
  EXPECT_NEAR(expected_ler(p, lik, 0.26), kl_divergence(p, prior), 1e-14);
  EXPECT_THROW(expected_ler(p, lik, 0.0), ImpossibleEvidenceError);
}

TEST(Decompose, WorkedExample) {
  const auto r = decompose(normalize({1, 1}), normalize({0.8, 0.2}), LikelihoodVector{0.1, 0.9});
  const double delta = 0.5 * std::log(0.5 * 13 / 4) + 0.5 * std::log(0.5 * 13 / 9);
  EXPECT_NEAR(r.delta, delta, 1e-15);
  EXPECT_NEAR(r.delta, 0.0800, 5e-5);
  EXPECT_NEAR(r.kl_q_pi, 0.2231, 5e-5);
  EXPECT_NEAR(r.i_ler, 0.1431, 5e-5);
  EXPECT_NEAR(r.marginal_z, 0.26, 1e-15);
  EXPECT_NEAR(r.delta, r.kl_q_pi - r.i_ler, 1e-15);
  EXPECT_EQ(r.update_class, UpdateClass::UnderUpdate);
}

TEST(Decompose, BayesPosteriorIsOptimalWithZeroGap) {
  const auto prior = normalize({0.8, 0.2});
  const LikelihoodVector lik{0.1, 0.9};
  const auto r = decompose(bayes_update(prior, lik), prior, lik);
  EXPECT_EQ(r.delta, 0.0);
  EXPECT_EQ(r.update_class, UpdateClass::Optimal);
  const auto flat = decompose(prior, prior, LikelihoodVector{0.6, 0.6});
  EXPECT_EQ(flat.delta, 0.0);
}

TEST(Decompose, InformationBookkeeping) {
  std::mt19937 gen(3);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const auto q = Distribution::from_normalized(testsupport::random_simplex(gen, n));
    const auto pi = Distribution::from_normalized(testsupport::random_simplex(gen, n));
    const LikelihoodVector l(testsupport::random_likelihood(gen, n));
    const auto r = decompose(q, pi, l);
    EXPECT_NEAR(r.delta, r.output_information() - r.input_information(), 1e-9);
    EXPECT_NEAR(r.delta, r.kl_q_pi - r.i_ler, 1e-9);
    EXPECT_GE(r.delta, 0.0);
    EXPECT_GE(r.kl_pi_p, 0.0);
    EXPECT_GE(r.kl_p_pi, 0.0);
  }
}

TEST(Decompose, DimensionMismatch) {
  EXPECT_THROW(decompose(normalize({1, 1}), normalize({1, 1, 1}), LikelihoodVector{0.1, 0.2, 0.3}), DimensionError);
}

TEST(UpdateClass, StringRoundTrip) {
  for (auto c : {UpdateClass::Optimal, UpdateClass::UnderUpdate, UpdateClass::OverUpdate, UpdateClass::WrongDirection}) {
    EXPECT_EQ(update_class_from_string(to_string(c)), c);
  }
  EXPECT_STREQ(to_string(UpdateClass::WrongDirection), "wrong_direction");
  EXPECT_THROW(update_class_from_string("sideways"), std::invalid_argument);
}
