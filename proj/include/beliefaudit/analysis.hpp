#pragma once

// Analysis of a stored run: per-update decomposition rows, per-step task
// metrics with bootstrap intervals, validity filtering, the wrong-direction
// oracle breakdown, and cross-analysis comparison tables.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beliefaudit/classify.hpp"
#include "beliefaudit/datasets.hpp"
#include "beliefaudit/errors.hpp"
#include "beliefaudit/info.hpp"
#include "beliefaudit/metrics.hpp"
#include "beliefaudit/pipeline.hpp"

namespace beliefaudit {

struct AnalysisConfig {
  double threshold = kDefaultOptimalThreshold;
  std::size_t bins = kDefaultEceBins;
  std::size_t resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  double validity_threshold = kDefaultValidityThreshold;

  nlohmann::json to_json() const {
    return {{"threshold", threshold}, {"bins", bins},   {"resamples", resamples},
            {"level", level},         {"seed", seed},   {"validity_threshold", validity_threshold}};
  }
};

struct OracleColumns {
  OracleCategory category = OracleCategory::CounterBoth;
  double delta_oracle = 0.0;
  double i_ler_oracle = 0.0;
  double kl_pi_p_oracle = 0.0;
};

struct AnalysisRow {
  std::string trajectory_id;
  std::size_t step = 0;
  RunMode mode = RunMode::Batch;
  double kl_q_pi = 0.0;
  double i_ler = 0.0;
  double delta = 0.0;
  double kl_pi_p = 0.0;
  UpdateClass update_class = UpdateClass::Optimal;
  std::optional<OracleColumns> oracle;
  std::size_t correct_index = 0;
  double prob_correct = 0.0;  // q at the correct option
  std::size_t argmax = 0;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"trajectory_id", trajectory_id}, {"step", step},
                        {"mode", to_string(mode)},        {"kl_q_pi", kl_q_pi},
                        {"i_ler", i_ler},                 {"delta", delta},
                        {"kl_pi_p", kl_pi_p},             {"update_class", to_string(update_class)},
                        {"correct_index", correct_index}, {"prob_correct", prob_correct},
                        {"argmax", argmax}};
    if (oracle) {
      j["oracle_category"] = to_string(oracle->category);
      j["delta_oracle"] = oracle->delta_oracle;
      j["i_ler_oracle"] = oracle->i_ler_oracle;
      j["kl_pi_p_oracle"] = oracle->kl_pi_p_oracle;
    }
    return j;
  }
};

struct StepMetrics {
  RunMode mode = RunMode::Batch;
  std::size_t step = 0;
  std::size_t questions = 0;  // questions with a valid belief at this step
  std::optional<double> auroc;
  std::optional<Interval> auroc_ci;
  std::optional<double> ece;
  std::optional<Interval> ece_ci;
  std::optional<double> auroc_bayes;
  std::optional<double> auroc_truth;
  std::size_t updates = 0;
  std::optional<double> median_delta;
};

struct ModeSummary {
  RunMode mode = RunMode::Batch;
  std::vector<StepValidity> validity;
  std::optional<std::size_t> validity_step;
  std::size_t updates = 0;
  std::size_t excluded = 0;
  std::optional<double> median_delta;
  std::map<std::string, std::size_t> class_counts;
  std::map<std::string, std::size_t> oracle_counts;
};

struct Analysis {
  RunManifest manifest;
  AnalysisConfig config;
  std::vector<AnalysisRow> rows;
  std::vector<StepMetrics> steps;
  std::vector<ModeSummary> modes;
  std::optional<double> spearman_delta_auroc;  // batch median Δ vs BP AUROC over steps
  std::vector<std::string> warnings;
};

namespace detail {

struct QuestionBelief {
  Distribution belief;
  std::size_t correct_index;
  std::string id;
};

inline double pooled_auroc(std::span<const QuestionBelief> qs) {
  std::vector<ScoredOption> pool;
  for (const auto& q : qs) {
    auto scored = score_options(q.belief, q.correct_index, q.id);
    pool.insert(pool.end(), scored.begin(), scored.end());
  }
  return mc_auroc(pool);
}

inline double pooled_ece(std::span<const QuestionBelief> qs, std::size_t bins) {
  std::vector<Prediction> preds;
  for (const auto& q : qs) preds.push_back({q.belief, q.correct_index});
  return ece(preds, bins);
}

inline std::optional<double> try_auroc(std::span<const QuestionBelief> qs) {
  if (qs.empty()) return std::nullopt;
  try {
    return pooled_auroc(qs);
  } catch (const DegenerateMetricError&) {
    return std::nullopt;
  }
}

inline std::uint64_t step_seed(std::uint64_t seed, RunMode mode, std::size_t step, std::uint64_t metric) {
  return seed + 1000003ull * (static_cast<std::uint64_t>(step) * 4 + (mode == RunMode::BP ? 2 : 0) + metric);
}

// Oracle likelihoods for one step: same mode first, then the other mode.
inline std::optional<std::vector<double>> oracle_likelihoods(const RunStore& oracle, const EvidenceTrajectory& t,
                                                             RunMode mode, std::size_t step) {
  if (auto l = elicited_likelihoods(oracle, t, mode, step)) return l;
  return elicited_likelihoods(oracle, t, mode == RunMode::Batch ? RunMode::BP : RunMode::Batch, step);
}

}  // namespace detail

inline Analysis analyze_run(const RunStore& store, const std::vector<EvidenceTrajectory>& dataset,
                            const AnalysisConfig& config = {}, const RunStore* oracle = nullptr) {
  if (dataset.empty()) throw ConfigError("dataset is empty");
  if (dataset_fingerprint(dataset) != store.manifest().dataset_fingerprint) {
    throw ConfigError("dataset does not match the run manifest");
  }
  if (oracle && oracle->manifest().dataset_fingerprint != store.manifest().dataset_fingerprint) {
    throw ConfigError("oracle store was run on a different dataset");
  }
  Analysis a;
  a.manifest = store.manifest();
  a.config = config;
  std::map<std::string, const EvidenceTrajectory*> by_id;
  std::size_t max_steps = 0;
  for (const auto& t : dataset) {
    by_id[t.id] = &t;
    max_steps = std::max(max_steps, t.step_count());
  }

  std::map<std::pair<int, std::size_t>, std::vector<double>> deltas_by_step;
  for (RunMode mode : {RunMode::Batch, RunMode::BP}) {
    if (!a.manifest.has_mode(mode)) continue;
    ModeSummary ms;
    ms.mode = mode;
    ms.validity = step_validity(store, dataset, mode);
    try {
      ms.validity_step = validity_step(ms.validity, config.validity_threshold);
    } catch (const StepSelectionError& e) {
      a.warnings.push_back(std::string(to_string(mode)) + ": " + e.what());
    }

    const auto assembled = assemble_updates(store, dataset, mode);
    ms.excluded = assembled.excluded;
    if (assembled.excluded > 0) {
      a.warnings.push_back(std::string(to_string(mode)) + ": " + std::to_string(assembled.excluded) +
                           " updates missing or invalid");
    }
    std::vector<double> deltas;
    for (const auto& tr : assembled.triples) {
      const auto& t = *by_id.at(tr.trajectory_id);
      const InfoReport info = decompose(tr.post, tr.prior, tr.likelihood, config.threshold);
      AnalysisRow row;
      row.trajectory_id = tr.trajectory_id;
      row.step = tr.step;
      row.mode = mode;
      row.kl_q_pi = info.kl_q_pi;
      row.i_ler = info.i_ler;
      row.delta = info.delta;
      row.kl_pi_p = info.kl_pi_p;
      row.update_class = info.update_class;
      row.correct_index = t.correct_index;
      row.prob_correct = tr.post[t.correct_index];
      row.argmax = tr.post.argmax();
      if (oracle && info.update_class == UpdateClass::WrongDirection) {
        if (auto ol = detail::oracle_likelihoods(*oracle, t, mode, tr.step)) {
          try {
            LikelihoodVector oracle_lik(*ol);
            const auto rep = oracle_analysis(tr.post, tr.prior, tr.likelihood, oracle_lik);
            row.oracle = OracleColumns{rep.category, rep.delta_oracle, rep.i_ler_oracle, rep.kl_pi_p_oracle};
            ms.oracle_counts[to_string(rep.category)] += 1;
          } catch (const Error&) {
            ms.oracle_counts["unavailable"] += 1;
          }
        } else {
          ms.oracle_counts["unavailable"] += 1;
        }
      }
      ms.class_counts[to_string(info.update_class)] += 1;
      deltas.push_back(info.delta);
      deltas_by_step[{static_cast<int>(mode), tr.step}].push_back(info.delta);
      a.rows.push_back(std::move(row));
    }
    ms.updates = assembled.triples.size();
    if (!deltas.empty()) ms.median_delta = median(deltas);

    for (std::size_t n = 0; n <= max_steps; ++n) {
      StepMetrics sm;
      sm.mode = mode;
      sm.step = n;
      std::vector<detail::QuestionBelief> beliefs, bayes, truth;
      for (const auto& t : dataset) {
        if (n > t.step_count()) continue;
        if (auto b = reported_belief(store, t, mode, n)) beliefs.push_back({*b, t.correct_index, t.id});
        if (t.ground_truth) truth.push_back({(*t.ground_truth)[n], t.correct_index, t.id});
        auto prior0 = reported_belief(store, t, mode, 0);
        if (!prior0) continue;
        std::vector<LikelihoodVector> liks;
        bool ok = true;
        for (std::size_t k = 1; k <= n && ok; ++k) {
          auto l = elicited_likelihoods(store, t, mode, k);
          if (!l) {
            ok = false;
            break;
          }
          try {
            liks.emplace_back(*l);
          } catch (const Error&) {
            ok = false;
          }
        }
        if (!ok) continue;
        try {
          bayes.push_back({cumulative_bayes(*prior0, liks), t.correct_index, t.id});
        } catch (const Error&) {
        }
      }
      sm.questions = beliefs.size();
      sm.auroc = detail::try_auroc(beliefs);
      sm.auroc_bayes = detail::try_auroc(bayes);
      sm.auroc_truth = detail::try_auroc(truth);
      if (!beliefs.empty()) sm.ece = detail::pooled_ece(beliefs, config.bins);
      if (beliefs.size() >= 2) {
        const std::span<const detail::QuestionBelief> units(beliefs);
        BootstrapConfig bc{config.resamples, config.level, detail::step_seed(config.seed, mode, n, 0)};
        try {
          sm.auroc_ci = bootstrap_ci(units, [](auto s) { return detail::pooled_auroc(s); }, bc);
        } catch (const DegenerateMetricError&) {
        }
        bc.seed = detail::step_seed(config.seed, mode, n, 1);
        sm.ece_ci = bootstrap_ci(units, [&](auto s) { return detail::pooled_ece(s, config.bins); }, bc);
      }
      if (auto it = deltas_by_step.find({static_cast<int>(mode), n}); it != deltas_by_step.end()) {
        sm.updates = it->second.size();
        sm.median_delta = median(it->second);
      }
      a.steps.push_back(std::move(sm));
    }
    a.modes.push_back(std::move(ms));
  }

  if (a.manifest.has_mode(RunMode::Batch) && a.manifest.has_mode(RunMode::BP)) {
    std::vector<double> xs, ys;
    for (std::size_t n = 1; n <= max_steps; ++n) {
      const StepMetrics* batch = nullptr;
      const StepMetrics* bp = nullptr;
      for (const auto& s : a.steps) {
        if (s.step != n) continue;
        (s.mode == RunMode::Batch ? batch : bp) = &s;
      }
      if (batch && bp && batch->median_delta && bp->auroc) {
        xs.push_back(*batch->median_delta);
        ys.push_back(*bp->auroc);
      }
    }
    try {
      a.spearman_delta_auroc = spearman_rho(xs, ys);
    } catch (const Error& e) {
      a.warnings.push_back(std::string("spearman: ") + e.what());
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string format_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline constexpr std::string_view kRowsCsvHeader =
    "trajectory_id,step,mode,i_ler,kl_q_pi,delta,kl_pi_p,update_class,oracle_category,delta_oracle,i_ler_oracle,"
    "correct_index,prob_correct,argmax";

inline constexpr std::string_view kStepsCsvHeader =
    "mode,step,questions,auroc,auroc_low,auroc_high,ece,ece_low,ece_high,auroc_bayes,auroc_truth,updates,"
    "median_delta";

inline void write_rows_csv(std::ostream& out, std::span<const AnalysisRow> rows) {
  out << kRowsCsvHeader << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.trajectory_id) << ',' << r.step << ',' << to_string(r.mode) << ',' << format_number(r.i_ler)
        << ',' << format_number(r.kl_q_pi) << ',' << format_number(r.delta) << ',' << format_number(r.kl_pi_p) << ','
        << to_string(r.update_class) << ',';
    if (r.oracle) {
      out << to_string(r.oracle->category) << ',' << format_number(r.oracle->delta_oracle) << ','
          << format_number(r.oracle->i_ler_oracle);
    } else {
      out << ",,";
    }
    out << ',' << r.correct_index << ',' << format_number(r.prob_correct) << ',' << r.argmax << '\n';
  }
}

inline void write_steps_csv(std::ostream& out, std::span<const StepMetrics> steps) {
  out << kStepsCsvHeader << '\n';
  for (const auto& s : steps) {
    out << to_string(s.mode) << ',' << s.step << ',' << s.questions << ',' << format_number(s.auroc) << ','
        << (s.auroc_ci ? format_number(s.auroc_ci->low) : "") << ','
        << (s.auroc_ci ? format_number(s.auroc_ci->high) : "") << ',' << format_number(s.ece) << ','
        << (s.ece_ci ? format_number(s.ece_ci->low) : "") << ',' << (s.ece_ci ? format_number(s.ece_ci->high) : "")
        << ',' << format_number(s.auroc_bayes) << ',' << format_number(s.auroc_truth) << ',' << s.updates << ','
        << format_number(s.median_delta) << '\n';
  }
}

inline nlohmann::json to_json(const StepMetrics& s) {
  nlohmann::json j = {{"mode", to_string(s.mode)},
                      {"step", s.step},
                      {"questions", s.questions},
                      {"auroc", optional_json(s.auroc)},
                      {"ece", optional_json(s.ece)},
                      {"auroc_bayes", optional_json(s.auroc_bayes)},
                      {"auroc_truth", optional_json(s.auroc_truth)},
                      {"updates", s.updates},
                      {"median_delta", optional_json(s.median_delta)}};
  j["auroc_ci"] = s.auroc_ci ? nlohmann::json::array({s.auroc_ci->low, s.auroc_ci->high}) : nlohmann::json(nullptr);
  j["ece_ci"] = s.ece_ci ? nlohmann::json::array({s.ece_ci->low, s.ece_ci->high}) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json summary_json(const Analysis& a) {
  nlohmann::json modes = nlohmann::json::object();
  for (const auto& m : a.modes) {
    nlohmann::json validity = nlohmann::json::array();
    for (const auto& v : m.validity) {
      validity.push_back({{"step", v.step}, {"valid", v.valid}, {"total", v.total}, {"fraction", v.fraction()}});
    }
    nlohmann::json jm = {{"validity", validity},
                         {"validity_step", m.validity_step ? nlohmann::json(*m.validity_step) : nlohmann::json(nullptr)},
                         {"updates", m.updates},
                         {"excluded", m.excluded},
                         {"median_delta", optional_json(m.median_delta)},
                         {"class_counts", m.class_counts}};
    if (!m.oracle_counts.empty()) jm["oracle_counts"] = m.oracle_counts;
    modes[to_string(m.mode)] = jm;
  }
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : a.steps) steps.push_back(to_json(s));
  return {{"run_id", a.manifest.run_id},
          {"backend_identity", a.manifest.backend_identity},
          {"dataset_fingerprint", a.manifest.dataset_fingerprint},
          {"profile", a.manifest.profile},
          {"config", a.config.to_json()},
          {"modes", modes},
          {"steps", steps},
          {"spearman_batch_delta_bp_auroc", optional_json(a.spearman_delta_auroc)},
          {"warnings", a.warnings}};
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot write " + path.string());
  return out;
}

inline void close_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw StoreError("write failed: " + path.string());
}

}  // namespace detail

// Writes rows.jsonl, rows.csv, steps.csv and summary.json into `dir`.
inline void write_analysis(const Analysis& a, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw StoreError("cannot create " + dir.string() + ": " + ec.message());
  {
    const auto p = dir / "rows.jsonl";
    auto out = detail::open_output(p);
    for (const auto& r : a.rows) out << r.to_json().dump() << '\n';
    detail::close_output(out, p);
  }
  {
    const auto p = dir / "rows.csv";
    auto out = detail::open_output(p);
    write_rows_csv(out, a.rows);
    detail::close_output(out, p);
  }
  {
    const auto p = dir / "steps.csv";
    auto out = detail::open_output(p);
    write_steps_csv(out, a.steps);
    detail::close_output(out, p);
  }
  {
    const auto p = dir / "summary.json";
    auto out = detail::open_output(p);
    out << summary_json(a).dump(2) << '\n';
    detail::close_output(out, p);
  }
}

// ---------------------------------------------------------------------------
// Report

struct LoadedAnalysis {
  std::string label;
  nlohmann::json summary;
  std::vector<nlohmann::json> rows;
};

inline LoadedAnalysis load_analysis(const std::filesystem::path& dir) {
  LoadedAnalysis la;
  la.label = dir.filename().string();
  if (la.label.empty()) la.label = dir.parent_path().filename().string();
  std::ifstream summary(dir / "summary.json");
  if (!summary) throw StoreError("no summary.json in " + dir.string());
  la.summary = nlohmann::json::parse(summary, nullptr, false);
  if (la.summary.is_discarded()) throw StoreError("unreadable summary.json in " + dir.string());
  std::ifstream rows(dir / "rows.jsonl");
  if (!rows) throw StoreError("no rows.jsonl in " + dir.string());
  std::string line;
  while (std::getline(rows, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw StoreError("unreadable row in " + dir.string());
    la.rows.push_back(std::move(j));
  }
  return la;
}

struct ComparisonRow {
  std::string label;
  std::string run_id;
  std::string backend_identity;
  std::optional<std::size_t> batch_validity_step;
  std::optional<std::size_t> bp_validity_step;
  std::optional<std::size_t> comparison_step;
  std::optional<double> batch_auroc, bp_auroc, batch_ece, bp_ece;
  std::optional<double> batch_median_delta, bp_median_delta;
};

inline constexpr std::string_view kComparisonCsvHeader =
    "analysis,run_id,backend_identity,batch_validity_step,bp_validity_step,comparison_step,batch_auroc,bp_auroc,"
    "auroc_gap,batch_ece,bp_ece,batch_median_delta,bp_median_delta";

inline constexpr std::string_view kScatterCsvHeader = "analysis,trajectory_id,step,mode,i_ler,kl_q_pi,delta,update_class";

namespace detail {

inline std::optional<double> json_number(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) return std::nullopt;
  return it->get<double>();
}

inline const nlohmann::json* find_step(const nlohmann::json& summary, const char* mode, std::size_t step) {
  for (const auto& s : summary.at("steps")) {
    if (s.at("mode") == mode && s.at("step").get<std::size_t>() == step) return &s;
  }
  return nullptr;
}

inline std::string format_count(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : ""; }

}  // namespace detail

// Metrics of each mode at the common comparison step: the smaller of the
// available validity steps.
inline ComparisonRow compare_modes(const LoadedAnalysis& la) {
  ComparisonRow c;
  c.label = la.label;
  c.run_id = la.summary.value("run_id", "");
  c.backend_identity = la.summary.value("backend_identity", "");
  const auto& modes = la.summary.at("modes");
  auto vstep = [&](const char* m) -> std::optional<std::size_t> {
    if (!modes.contains(m)) return std::nullopt;
    const auto& v = modes.at(m).at("validity_step");
    if (!v.is_number()) return std::nullopt;
    return v.get<std::size_t>();
  };
  c.batch_validity_step = vstep("batch");
  c.bp_validity_step = vstep("bp");
  if (c.batch_validity_step && c.bp_validity_step) {
    c.comparison_step = std::min(*c.batch_validity_step, *c.bp_validity_step);
  } else {
    c.comparison_step = c.batch_validity_step ? c.batch_validity_step : c.bp_validity_step;
  }
  if (modes.contains("batch")) c.batch_median_delta = detail::json_number(modes.at("batch"), "median_delta");
  if (modes.contains("bp")) c.bp_median_delta = detail::json_number(modes.at("bp"), "median_delta");
  if (c.comparison_step) {
    if (const auto* s = detail::find_step(la.summary, "batch", *c.comparison_step)) {
      c.batch_auroc = detail::json_number(*s, "auroc");
      c.batch_ece = detail::json_number(*s, "ece");
    }
    if (const auto* s = detail::find_step(la.summary, "bp", *c.comparison_step)) {
      c.bp_auroc = detail::json_number(*s, "auroc");
      c.bp_ece = detail::json_number(*s, "ece");
    }
  }
  return c;
}

struct Report {
  std::vector<ComparisonRow> comparison;
  std::optional<double> spearman_delta_auroc;  // across analyses
  std::vector<std::string> warnings;
};

inline Report build_report(std::span<const LoadedAnalysis> analyses) {
  if (analyses.empty()) throw ConfigError("report needs at least one analysis");
  Report r;
  std::vector<double> xs, ys;
  for (const auto& la : analyses) {
    r.comparison.push_back(compare_modes(la));
    const auto& c = r.comparison.back();
    if (c.batch_median_delta && c.bp_auroc) {
      xs.push_back(*c.batch_median_delta);
      ys.push_back(*c.bp_auroc);
    }
  }
  if (xs.size() >= 3) {
    try {
      r.spearman_delta_auroc = spearman_rho(xs, ys);
    } catch (const Error& e) {
      r.warnings.push_back(std::string("spearman: ") + e.what());
    }
  } else {
    r.warnings.push_back("spearman: needs at least 3 analyses with both modes");
  }
  return r;
}

inline void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows) {
  out << kComparisonCsvHeader << '\n';
  for (const auto& c : rows) {
    std::optional<double> gap;
    if (c.batch_auroc && c.bp_auroc) gap = *c.bp_auroc - *c.batch_auroc;
    out << csv_field(c.label) << ',' << csv_field(c.run_id) << ',' << csv_field(c.backend_identity) << ','
        << detail::format_count(c.batch_validity_step) << ',' << detail::format_count(c.bp_validity_step) << ','
        << detail::format_count(c.comparison_step) << ',' << format_number(c.batch_auroc) << ','
        << format_number(c.bp_auroc) << ',' << format_number(gap) << ',' << format_number(c.batch_ece) << ','
        << format_number(c.bp_ece) << ',' << format_number(c.batch_median_delta) << ','
        << format_number(c.bp_median_delta) << '\n';
  }
}

inline void write_scatter_csv(std::ostream& out, std::span<const LoadedAnalysis> analyses) {
  out << kScatterCsvHeader << '\n';
  for (const auto& la : analyses) {
    for (const auto& row : la.rows) {
      out << csv_field(la.label) << ',' << csv_field(row.at("trajectory_id").get<std::string>()) << ','
          << row.at("step").get<std::size_t>() << ',' << row.at("mode").get<std::string>() << ','
          << format_number(row.at("i_ler").get<double>()) << ',' << format_number(row.at("kl_q_pi").get<double>())
          << ',' << format_number(row.at("delta").get<double>()) << ',' << row.at("update_class").get<std::string>()
          << '\n';
    }
  }
}

// Writes comparison.csv, scatter.csv and report.json into `dir`.
inline Report write_report(std::span<const LoadedAnalysis> analyses, const std::filesystem::path& dir) {
  Report r = build_report(analyses);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw StoreError("cannot create " + dir.string() + ": " + ec.message());
  {
    const auto p = dir / "comparison.csv";
    auto out = detail::open_output(p);
    write_comparison_csv(out, r.comparison);
    detail::close_output(out, p);
  }
  {
    const auto p = dir / "scatter.csv";
    auto out = detail::open_output(p);
    write_scatter_csv(out, analyses);
    detail::close_output(out, p);
  }
  {
    const auto p = dir / "report.json";
    auto out = detail::open_output(p);
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& la : analyses) labels.push_back(la.label);
    out << nlohmann::json{{"analyses", labels},
                          {"spearman_batch_delta_bp_auroc", optional_json(r.spearman_delta_auroc)},
                          {"warnings", r.warnings}}
               .dump(2)
        << '\n';
    detail::close_output(out, p);
  }
  return r;
}

}  // namespace beliefaudit
