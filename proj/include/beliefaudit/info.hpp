#pragma once

// Probability and information kernel: distributions over a finite set of
// options, explicit Bayes updates, and the information-processing gap with
// its KL / likelihood-evidence-ratio decomposition. All quantities in nats.

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "beliefaudit/errors.hpp"

namespace beliefaudit {

// Stand-in for an exact zero inside a log argument.
inline constexpr double kLogFloor = 1e-10;
// Default optimality threshold on the gap.
inline constexpr double kDefaultOptimalThreshold = 0.05;
inline constexpr double kSumTolerance = 1e-6;
inline constexpr double kNegativeClamp = 1e-12;

namespace detail {

inline double safe_log(double x) { return std::log(x > 0.0 ? x : kLogFloor); }

inline std::string describe_size_mismatch(std::size_t a, std::size_t b) {
  return "length mismatch: " + std::to_string(a) + " vs " + std::to_string(b);
}

}  // namespace detail

// Probability mass over the options of one question.
class Distribution {
 public:
  // Validates an already-normalized vector (sum within 1e-6, entries >= 0).
  static Distribution from_normalized(std::vector<double> mass) {
    if (mass.size() < 2) {
      throw NormalizationError("a distribution needs at least 2 options");
    }
    double sum = 0.0;
    for (double m : mass) {
      if (!std::isfinite(m) || m < 0.0) {
        throw NormalizationError("distribution entries must be finite and non-negative");
      }
      sum += m;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw NormalizationError("distribution entries sum to " + std::to_string(sum));
    }
    return Distribution(std::move(mass));
  }

  static Distribution uniform(std::size_t option_count) {
    if (option_count < 2) throw NormalizationError("a distribution needs at least 2 options");
    return Distribution(std::vector<double>(option_count, 1.0 / static_cast<double>(option_count)));
  }

  std::size_t size() const noexcept { return mass_.size(); }
  double operator[](std::size_t i) const { return mass_[i]; }
  std::span<const double> mass() const noexcept { return mass_; }
  const std::vector<double>& values() const noexcept { return mass_; }

  std::size_t argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < mass_.size(); ++i) {
      if (mass_[i] > mass_[best]) best = i;
    }
    return best;
  }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  explicit Distribution(std::vector<double> mass) : mass_(std::move(mass)) {}
  std::vector<double> mass_;
};

// Divides by the sum. Throws NormalizationError on fewer than 2 entries,
// negative or non-finite entries, or a zero sum.
inline Distribution normalize(std::span<const double> raw) {
  if (raw.size() < 2) throw NormalizationError("need at least 2 entries to normalize");
  double sum = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v) || v < 0.0) {
      throw NormalizationError("cannot normalize negative or non-finite values");
    }
    sum += v;
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) throw NormalizationError("cannot normalize an all-zero vector");
  std::vector<double> out(raw.begin(), raw.end());
  for (double& v : out) v /= sum;
  return Distribution::from_normalized(std::move(out));
}

inline Distribution normalize(std::initializer_list<double> raw) {
  return normalize(std::span<const double>(raw.begin(), raw.size()));
}

// Per-option probability of one evidence item; need not sum to one.
class LikelihoodVector {
 public:
  explicit LikelihoodVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DimensionError("likelihood vector is empty");
    bool any_positive = false;
    for (double v : values_) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw DimensionError("likelihood values must lie in [0,1]");
      }
      any_positive = any_positive || v > 0.0;
    }
    if (!any_positive) {
      throw ImpossibleEvidenceError("likelihood is zero under every hypothesis");
    }
  }
  LikelihoodVector(std::initializer_list<double> values)
      : LikelihoodVector(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  bool is_constant(double tol = 0.0) const {
    for (double v : values_) {
      if (std::abs(v - values_.front()) > tol) return false;
    }
    return true;
  }

  friend bool operator==(const LikelihoodVector&, const LikelihoodVector&) = default;

 private:
  std::vector<double> values_;
};

enum class UpdateClass { Optimal, UnderUpdate, OverUpdate, WrongDirection };

inline const char* to_string(UpdateClass c) {
  switch (c) {
    case UpdateClass::Optimal: return "optimal";
    case UpdateClass::UnderUpdate: return "under_update";
    case UpdateClass::OverUpdate: return "over_update";
    case UpdateClass::WrongDirection: return "wrong_direction";
  }
  return "unknown";
}

inline UpdateClass update_class_from_string(const std::string& s) {
  if (s == "optimal") return UpdateClass::Optimal;
  if (s == "under_update") return UpdateClass::UnderUpdate;
  if (s == "over_update") return UpdateClass::OverUpdate;
  if (s == "wrong_direction") return UpdateClass::WrongDirection;
  throw std::invalid_argument("unknown update class: " + s);
}

// KL(a || b) in nats. Zero-mass entries of `a` contribute nothing; a zero in
// `b` is read as kLogFloor, and mass below the floor on such an entry adds 0.
inline double kl_divergence(const Distribution& a, const Distribution& b) {
  if (a.size() != b.size()) throw DimensionError(detail::describe_size_mismatch(a.size(), b.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    if (b[i] == 0.0 && a[i] < kLogFloor) continue;
    sum += a[i] * (std::log(a[i]) - detail::safe_log(b[i]));
  }
  if (sum < 0.0 && sum > -kNegativeClamp) sum = 0.0;
  return sum;
}

// Z = sum_i prior_i * lik_i.
inline double marginal_likelihood(const Distribution& prior, const LikelihoodVector& lik) {
  if (prior.size() != lik.size()) {
    throw DimensionError(detail::describe_size_mismatch(prior.size(), lik.size()));
  }
  double z = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) z += prior[i] * lik[i];
  if (!(z > 0.0)) throw ImpossibleEvidenceError("evidence has zero marginal likelihood under the prior");
  return z;
}

inline Distribution bayes_update(const Distribution& prior, const LikelihoodVector& lik) {
  const double z = marginal_likelihood(prior, lik);
  std::vector<double> post(prior.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    post[i] = prior[i] * lik[i] / z;
    sum += post[i];
  }
  // Division by z leaves a residual of a few ulps; fold it back in.
  for (double& p : post) p /= sum;
  return Distribution::from_normalized(std::move(post));
}

// Left fold of bayes_update. Failures report the 1-based step.
inline Distribution cumulative_bayes(const Distribution& prior0, std::span<const LikelihoodVector> liks) {
  Distribution belief = prior0;
  for (std::size_t k = 0; k < liks.size(); ++k) {
    if (liks[k].size() != prior0.size()) {
      throw DimensionError("step " + std::to_string(k + 1) + ": " +
                           detail::describe_size_mismatch(prior0.size(), liks[k].size()));
    }
    try {
      belief = bayes_update(belief, liks[k]);
    } catch (const ImpossibleEvidenceError&) {
      throw ImpossibleEvidenceError("evidence impossible at step " + std::to_string(k + 1), k + 1);
    }
  }
  return belief;
}

// E_q[ln d] for a per-option vector d (information of d under q).
inline double expected_log(const Distribution& q, std::span<const double> d) {
  if (q.size() != d.size()) throw DimensionError(detail::describe_size_mismatch(q.size(), d.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    sum += q[i] * detail::safe_log(d[i]);
  }
  return sum;
}

// Expected log likelihood-evidence ratio E_q[ln(lik / z)].
inline double expected_ler(const Distribution& post, const LikelihoodVector& lik, double z) {
  if (!(z > 0.0)) throw ImpossibleEvidenceError("marginal likelihood must be positive");
  if (post.size() != lik.size()) {
    throw DimensionError(detail::describe_size_mismatch(post.size(), lik.size()));
  }
  return expected_log(post, lik.values()) - std::log(z);
}

struct InfoReport {
  double delta = 0.0;
  double kl_q_pi = 0.0;
  double i_ler = 0.0;
  double kl_pi_p = 0.0;
  double kl_p_pi = 0.0;
  double marginal_z = 0.0;
  double info_prior = 0.0;       // E_q[ln prior]
  double info_likelihood = 0.0;  // E_q[ln lik]
  double info_post = 0.0;        // E_q[ln q]
  double prior_log_lik = 0.0;    // E_prior[ln lik]
  UpdateClass update_class = UpdateClass::Optimal;

  double input_information() const { return info_prior + info_likelihood; }
  double output_information() const { return info_post + std::log(marginal_z); }
};

namespace detail {

// Ordering of the regime tests: gap threshold, direction, magnitude.
inline UpdateClass classify_quantities(double delta, double threshold, double post_log_lik,
                                       double prior_log_lik, double kl_q_pi, double kl_p_pi) {
  if (delta < threshold) return UpdateClass::Optimal;
  if (post_log_lik - prior_log_lik < -kNegativeClamp) return UpdateClass::WrongDirection;
  if (kl_q_pi - kl_p_pi <= kNegativeClamp) return UpdateClass::UnderUpdate;
  return UpdateClass::OverUpdate;
}

}  // namespace detail

inline InfoReport decompose(const Distribution& post, const Distribution& prior, const LikelihoodVector& lik,
                            double threshold = kDefaultOptimalThreshold) {
  if (post.size() != prior.size()) throw DimensionError(detail::describe_size_mismatch(post.size(), prior.size()));
  InfoReport r;
  r.marginal_z = marginal_likelihood(prior, lik);
  const Distribution bayes = bayes_update(prior, lik);
  r.delta = kl_divergence(post, bayes);
  if (r.delta < -kNegativeClamp) {
    throw std::logic_error("information gap is negative beyond rounding: " + std::to_string(r.delta));
  }
  r.kl_q_pi = kl_divergence(post, prior);
  r.i_ler = expected_ler(post, lik, r.marginal_z);
  r.kl_pi_p = kl_divergence(prior, bayes);
  r.kl_p_pi = kl_divergence(bayes, prior);
  r.info_prior = expected_log(post, prior.mass());
  r.info_likelihood = expected_log(post, lik.values());
  r.info_post = expected_log(post, post.mass());
  r.prior_log_lik = expected_log(prior, lik.values());
  r.update_class = detail::classify_quantities(r.delta, threshold, r.info_likelihood, r.prior_log_lik, r.kl_q_pi,
                                               r.kl_p_pi);
  return r;
}

}  // namespace beliefaudit
