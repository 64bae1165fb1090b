#pragma once

// Update taxonomy (optimal / under / over / wrong direction) and the
// re-evaluation of wrong-direction updates against an oracle likelihood.

#include <span>
#include <string>
#include <vector>

#include "beliefaudit/info.hpp"

namespace beliefaudit {

inline UpdateClass classify_update(const Distribution& post, const Distribution& prior, const LikelihoodVector& lik,
                                   double threshold = kDefaultOptimalThreshold) {
  return decompose(post, prior, lik, threshold).update_class;
}

// True when the update lowers the expected log likelihood of the evidence,
// E_q[ln lik] < E_prior[ln lik].
inline bool moves_against(const Distribution& post, const Distribution& prior, const LikelihoodVector& lik) {
  return expected_log(post, lik.values()) - expected_log(prior, lik.values()) < -kNegativeClamp;
}

enum class OracleCategory { AlignedWithOracle, CloserToOraclePosterior, CounterBoth };

inline const char* to_string(OracleCategory c) {
  switch (c) {
    case OracleCategory::AlignedWithOracle: return "aligned_with_oracle";
    case OracleCategory::CloserToOraclePosterior: return "closer_to_oracle_posterior";
    case OracleCategory::CounterBoth: return "counter_both";
  }
  return "unknown";
}

struct OracleReport {
  double delta_oracle = 0.0;
  double i_ler_oracle = 0.0;
  double kl_pi_p_oracle = 0.0;
  double delta = 0.0;
  OracleCategory category = OracleCategory::CounterBoth;
};

// Meaningful only for updates already classified WrongDirection under `lik`;
// the caller is responsible for that filter.
inline OracleReport oracle_analysis(const Distribution& post, const Distribution& prior, const LikelihoodVector& lik,
                                    const LikelihoodVector& oracle_lik) {
  if (oracle_lik.size() != prior.size()) {
    throw DimensionError(detail::describe_size_mismatch(prior.size(), oracle_lik.size()));
  }
  OracleReport r;
  const double z_or = marginal_likelihood(prior, oracle_lik);
  const Distribution p_or = bayes_update(prior, oracle_lik);
  r.delta = kl_divergence(post, bayes_update(prior, lik));
  r.delta_oracle = kl_divergence(post, p_or);
  r.i_ler_oracle = expected_ler(post, oracle_lik, z_or);
  r.kl_pi_p_oracle = kl_divergence(prior, p_or);
  if (r.i_ler_oracle > -r.kl_pi_p_oracle) {
    r.category = OracleCategory::AlignedWithOracle;
  } else if (r.delta_oracle < r.delta) {
    r.category = OracleCategory::CloserToOraclePosterior;
  } else {
    r.category = OracleCategory::CounterBoth;
  }
  return r;
}

// KL between two per-option likelihood vectors after normalizing each over
// options. An all-zero vector raises NormalizationError.
inline double likelihood_divergence(std::span<const double> lik, std::span<const double> oracle_lik) {
  if (lik.size() != oracle_lik.size()) {
    throw DimensionError(detail::describe_size_mismatch(lik.size(), oracle_lik.size()));
  }
  return kl_divergence(normalize(lik), normalize(oracle_lik));
}

inline double likelihood_divergence(const LikelihoodVector& lik, const LikelihoodVector& oracle_lik) {
  return likelihood_divergence(lik.values(), oracle_lik.values());
}

// Sum of per-step likelihood divergences along one trajectory.
inline double cumulative_likelihood_divergence(std::span<const LikelihoodVector> liks,
                                               std::span<const LikelihoodVector> oracle_liks) {
  if (liks.size() != oracle_liks.size()) {
    throw DimensionError(detail::describe_size_mismatch(liks.size(), oracle_liks.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < liks.size(); ++i) total += likelihood_divergence(liks[i], oracle_liks[i]);
  return total;
}

}  // namespace beliefaudit
