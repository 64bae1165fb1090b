#pragma once

// Task-utility metrics (pooled multiclass AUROC, top-label ECE) and the
// statistics used around them: question-level bootstrap intervals,
// Spearman rank correlation, medians, and evidence-step selection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "beliefaudit/errors.hpp"
#include "beliefaudit/info.hpp"
#include "beliefaudit/random.hpp"

namespace beliefaudit {

struct ScoredOption {
  double probability = 0.0;
  bool is_correct = false;
  std::string question_id;
};

// Mann-Whitney statistic over every (correct, incorrect) pair in the pool;
// ties count one half.
inline double mc_auroc(std::span<const ScoredOption> options) {
  std::vector<std::pair<double, bool>> pool;
  pool.reserve(options.size());
  std::size_t positives = 0;
  for (const auto& o : options) {
    pool.emplace_back(o.probability, o.is_correct);
    positives += o.is_correct ? 1 : 0;
  }
  const std::size_t negatives = pool.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw DegenerateMetricError("AUROC needs at least one correct and one incorrect option");
  }
  std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // Walk tie groups in ascending order, counting negatives strictly below.
  double wins = 0.0;
  std::size_t negatives_below = 0;
  for (std::size_t i = 0; i < pool.size();) {
    std::size_t j = i;
    std::size_t pos_here = 0;
    std::size_t neg_here = 0;
    while (j < pool.size() && pool[j].first == pool[i].first) {
      (pool[j].second ? pos_here : neg_here) += 1;
      ++j;
    }
    wins += static_cast<double>(pos_here) *
            (static_cast<double>(negatives_below) + 0.5 * static_cast<double>(neg_here));
    negatives_below += neg_here;
    i = j;
  }
  return wins / (static_cast<double>(positives) * static_cast<double>(negatives));
}

// Flattens per-question beliefs into the pooled option list.
inline std::vector<ScoredOption> score_options(const Distribution& belief, std::size_t correct_index,
                                               const std::string& question_id) {
  std::vector<ScoredOption> out;
  out.reserve(belief.size());
  for (std::size_t i = 0; i < belief.size(); ++i) out.push_back({belief[i], i == correct_index, question_id});
  return out;
}

struct Prediction {
  Distribution belief;
  std::size_t correct_index = 0;
};

inline constexpr std::size_t kDefaultEceBins = 10;

// Top-label ECE with equal-width bins over (0, 1]; a confidence of exactly 0
// lands in the first bin.
inline double ece(std::span<const Prediction> predictions, std::size_t bins = kDefaultEceBins) {
  if (predictions.empty()) throw DegenerateMetricError("ECE of an empty prediction set");
  if (bins == 0) throw std::invalid_argument("ECE needs at least one bin");
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<double> acc_sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (const auto& p : predictions) {
    const std::size_t top = p.belief.argmax();
    const double confidence = p.belief[top];
    const auto nb = static_cast<double>(bins);
    auto bin = static_cast<std::size_t>(std::ceil(confidence * nb));
    bin = bin == 0 ? 0 : std::min(bin - 1, bins - 1);
    // Products like 0.3 * 10 round up; settle against the edges b / bins.
    while (bin > 0 && confidence <= static_cast<double>(bin) / nb) --bin;
    while (bin + 1 < bins && confidence > static_cast<double>(bin + 1) / nb) ++bin;
    conf_sum[bin] += confidence;
    acc_sum[bin] += top == p.correct_index ? 1.0 : 0.0;
    count[bin] += 1;
  }
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    total += std::abs(acc_sum[b] - conf_sum[b]);
  }
  return total / static_cast<double>(predictions.size());
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw DegenerateMetricError("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// Linear-interpolated quantile of sorted data (Hyndman-Fan type 7).
inline double quantile_sorted(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw DegenerateMetricError("quantile of an empty set");
  const double h = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct BootstrapConfig {
  std::size_t resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Statistic values of each bootstrap resample, in resample order.
template <class Unit, class Statistic>
std::vector<double> bootstrap_distribution(std::span<const Unit> units, Statistic&& statistic,
                                           std::size_t resamples, std::uint64_t seed) {
  if (units.size() < 2) throw std::invalid_argument("bootstrap needs at least 2 resampling units");
  if (resamples < 100) throw std::invalid_argument("bootstrap needs at least 100 resamples");
  Rng rng(seed);
  std::vector<double> stats;
  stats.reserve(resamples);
  std::vector<Unit> sample;
  sample.reserve(units.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    sample.clear();
    for (std::size_t i = 0; i < units.size(); ++i) sample.push_back(units[uniform_index(rng, units.size())]);
    stats.push_back(statistic(std::span<const Unit>(sample)));
  }
  return stats;
}

// Percentile interval from resampling whole units (questions) with
// replacement. A statistic that throws DegenerateMetricError on a resample
// (e.g. AUROC with no incorrect options) skips that resample.
template <class Unit, class Statistic>
Interval bootstrap_ci(std::span<const Unit> units, Statistic&& statistic, const BootstrapConfig& config = {}) {
  if (!(config.level > 0.0 && config.level < 1.0)) throw std::invalid_argument("bootstrap level must be in (0,1)");
  auto guarded = [&](std::span<const Unit> s) -> double {
    try {
      return statistic(s);
    } catch (const DegenerateMetricError&) {
      return std::nan("");
    }
  };
  std::vector<double> stats = bootstrap_distribution(units, guarded, config.resamples, config.seed);
  std::erase_if(stats, [](double v) { return std::isnan(v); });
  if (stats.empty()) throw DegenerateMetricError("every bootstrap resample was degenerate");
  std::sort(stats.begin(), stats.end());
  const double tail = 0.5 * (1.0 - config.level);
  return {quantile_sorted(stats, tail), quantile_sorted(stats, 1.0 - tail)};
}

// Ranks starting at 1; tied values share their average rank.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && xs[order[j]] == xs[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateMetricError("correlation with zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DimensionError(detail::describe_size_mismatch(xs.size(), ys.size()));
  if (xs.size() < 3) throw DegenerateMetricError("Spearman correlation needs at least 3 pairs");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

// Per-step validity tally: questions whose belief and every per-option
// likelihood parsed at this step, out of all questions in the dataset.
struct StepValidity {
  std::size_t step = 0;
  std::size_t valid = 0;
  std::size_t total = 0;

  double fraction() const { return total == 0 ? 0.0 : static_cast<double>(valid) / static_cast<double>(total); }
};

inline constexpr double kDefaultValidityThreshold = 0.8;

// Largest evidence step whose valid fraction reaches `threshold`.
inline std::size_t validity_step(std::span<const StepValidity> steps, double threshold = kDefaultValidityThreshold) {
  bool found = false;
  std::size_t best = 0;
  for (const auto& s : steps) {
    if (s.step == 0) continue;
    if (s.fraction() >= threshold && (!found || s.step > best)) {
      best = s.step;
      found = true;
    }
  }
  if (!found) throw StepSelectionError("no evidence step reaches the validity threshold");
  return best;
}

}  // namespace beliefaudit
