#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "beliefaudit/analysis.hpp"
#include "beliefaudit/synthetic.hpp"
#include "support.hpp"

using namespace beliefaudit;
namespace fs = std::filesystem;

namespace {

RunOptions fixed_options() {
  RunOptions o;
  o.clock = testsupport::fixed_clock;
  o.parallelism = 4;
  return o;
}

RunStore run_both(const fs::path& dir, const std::vector<EvidenceTrajectory>& ds, AgentBackend& backend) {
  auto store = RunStore::open_or_create(dir, make_manifest(ds, backend.identity(), {RunMode::Batch, RunMode::BP}, 0,
                                                           "animals", {}, testsupport::fixed_clock));
  run_batch(ds, backend, store, fixed_options());
  run_bp(ds, backend, store, fixed_options());
  return store;
}

AnalysisConfig quick_config() {
  AnalysisConfig c;
  c.resamples = 200;
  return c;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

// Pair-counting AUROC over pooled options.
double auroc_by_pairs(const std::vector<std::pair<double, bool>>& pool) {
  double wins = 0.0;
  double pairs = 0.0;
  for (const auto& a : pool) {
    if (!a.second) continue;
    for (const auto& b : pool) {
      if (b.second) continue;
      pairs += 1.0;
      wins += a.first > b.first ? 1.0 : a.first == b.first ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

}  // namespace

TEST(AnalyzeRun, ExactBayesIsOptimalEverywhere) {
  const auto ds = animals::build_animals(20, 30);
  testsupport::TempDir dir;
  SyntheticBackend agent(AgentSpec::exact_bayes());
  const auto store = run_both(dir.path(), ds, agent);
  const auto a = analyze_run(store, ds, quick_config());
  ASSERT_EQ(a.modes.size(), 2u);
  std::size_t steps = 0;
  for (const auto& t : ds) steps += t.step_count();
  EXPECT_EQ(a.rows.size(), 2 * steps);
  for (const auto& r : a.rows) {
    EXPECT_EQ(r.update_class, UpdateClass::Optimal) << r.trajectory_id << " " << r.step;
    EXPECT_GE(r.delta, 0.0);
  }
  for (const auto& m : a.modes) {
    EXPECT_LT(*m.median_delta, 1e-6);
    EXPECT_EQ(m.excluded, 0u);
    EXPECT_EQ(m.class_counts.at("optimal"), steps);
    for (const auto& v : m.validity) {
      if (v.step <= 9) {
        EXPECT_EQ(v.fraction(), 1.0);
      }
    }
  }
  EXPECT_TRUE(a.spearman_delta_auroc.has_value() || !a.warnings.empty());
}

TEST(AnalyzeRun, TemperedAgentUnderUpdates) {
  const auto ds = animals::build_animals(21, 20);
  testsupport::TempDir dir;
  SyntheticBackend agent(AgentSpec::tempered(0.5));
  const auto store = run_both(dir.path(), ds, agent);
  const auto a = analyze_run(store, ds, quick_config());
  std::size_t non_optimal = 0;
  for (const auto& r : a.rows) {
    if (r.update_class == UpdateClass::Optimal) continue;
    ++non_optimal;
    EXPECT_EQ(r.update_class, UpdateClass::UnderUpdate);
  }
  EXPECT_GT(non_optimal, 50u);
}

TEST(AnalyzeRun, RowsMatchDecomposition) {
  const auto ds = animals::build_animals(22, 10);
  testsupport::TempDir dir;
  SyntheticBackend agent(AgentSpec::noisy_likelihood(0.5, 1));
  const auto store = run_both(dir.path(), ds, agent);
  const auto a = analyze_run(store, ds, quick_config());
  std::size_t i = 0;
  for (auto mode : {RunMode::Batch, RunMode::BP}) {
    for (const auto& u : assemble_updates(store, ds, mode).triples) {
      ASSERT_LT(i, a.rows.size());
      const auto& r = a.rows[i++];
      EXPECT_EQ(r.trajectory_id, u.trajectory_id);
      EXPECT_EQ(r.step, u.step);
      std::vector<double> q(u.post.values().begin(), u.post.values().end());
      std::vector<double> pi(u.prior.values().begin(), u.prior.values().end());
      std::vector<double> l(u.likelihood.values().begin(), u.likelihood.values().end());
      EXPECT_NEAR(r.delta, testsupport::kl_oracle(q, testsupport::bayes_oracle(pi, l)), 1e-9);
      EXPECT_NEAR(r.kl_q_pi, testsupport::kl_oracle(q, pi), 1e-9);
      EXPECT_NEAR(r.kl_q_pi - r.i_ler, r.delta, 1e-9);
    }
  }
  EXPECT_EQ(i, a.rows.size());
}

TEST(AnalyzeRun, StepMetricsMatchIndependentCounts) {
  const auto ds = animals::build_animals(23, 25);
  testsupport::TempDir dir;
  SyntheticBackend agent(AgentSpec::tempered(0.7));
  const auto store = run_both(dir.path(), ds, agent);
  const auto a = analyze_run(store, ds, quick_config());
  for (const auto& s : a.steps) {
    std::vector<std::pair<double, bool>> pool;
    for (const auto& t : ds) {
      if (s.step > t.step_count()) continue;
      const auto b = reported_belief(store, t, s.mode, s.step);
      if (!b) continue;
      for (std::size_t k = 0; k < b->size(); ++k) pool.push_back({(*b)[k], k == t.correct_index});
    }
    ASSERT_EQ(s.questions * 4, pool.size());
    ASSERT_TRUE(s.auroc.has_value());
    EXPECT_NEAR(*s.auroc, auroc_by_pairs(pool), 1e-12) << to_string(s.mode) << " step " << s.step;
    if (s.step == 0) {
      EXPECT_EQ(*s.auroc, 0.5);
    }
    ASSERT_TRUE(s.auroc_ci && s.ece_ci);
    EXPECT_LE(s.auroc_ci->low, s.auroc_ci->high);
    EXPECT_LE(s.ece_ci->low, s.ece_ci->high);
  }
}

TEST(AnalyzeRun, DeterministicForSeed) {
  const auto ds = animals::build_animals(24, 12);
  testsupport::TempDir dir;
  SyntheticBackend agent(AgentSpec::tempered(2.0));
  const auto store = run_both(dir.path(), ds, agent);
  auto c = quick_config();
  c.seed = 5;
  const auto a = summary_json(analyze_run(store, ds, c));
  EXPECT_EQ(a, summary_json(analyze_run(store, ds, c)));
  c.seed = 6;
  EXPECT_NE(a, summary_json(analyze_run(store, ds, c)));
}

TEST(AnalyzeRun, RejectsForeignDataset) {
  const auto ds = animals::build_animals(25, 5);
  testsupport::TempDir dir;
  SyntheticBackend agent(AgentSpec::exact_bayes());
  const auto store = run_both(dir.path(), ds, agent);
  EXPECT_THROW(analyze_run(store, animals::build_animals(26, 5), quick_config()), ConfigError);
}

TEST(AnalyzeRun, OracleBreakdownForWrongDirection) {
  const auto ds = animals::build_animals(27, 15);
  testsupport::TempDir dir;
  testsupport::TempDir oracle_dir;
  SyntheticBackend agent(AgentSpec::wrong_direction(0.1));
  SyntheticBackend oracle_agent(AgentSpec::noisy_likelihood(1.0, 4));
  const auto store = run_both(dir.path(), ds, agent);
  const auto oracle = run_both(oracle_dir.path(), ds, oracle_agent);
  const auto a = analyze_run(store, ds, quick_config(), &oracle);
  for (const auto& m : a.modes) {
    std::size_t categorized = 0;
    for (const auto& [name, n] : m.oracle_counts) categorized += n;
    EXPECT_EQ(categorized, m.class_counts.at("wrong_direction"));
  }
  for (const auto& r : a.rows) {
    EXPECT_EQ(r.oracle.has_value(), r.update_class == UpdateClass::WrongDirection);
  }
}

TEST(AnalysisOutput, GoldenHeaders) {
  const auto ds = animals::build_animals(28, 8);
  testsupport::TempDir dir;
  SyntheticBackend agent(AgentSpec::exact_bayes());
  const auto store = run_both(dir / "store", ds, agent);
  write_analysis(analyze_run(store, ds, quick_config()), dir / "analysis");
  EXPECT_EQ(first_line(dir / "analysis" / "rows.csv"),
            "trajectory_id,step,mode,i_ler,kl_q_pi,delta,kl_pi_p,update_class,oracle_category,delta_oracle,"
            "i_ler_oracle,correct_index,prob_correct,argmax");
  EXPECT_EQ(first_line(dir / "analysis" / "steps.csv"),
            "mode,step,questions,auroc,auroc_low,auroc_high,ece,ece_low,ece_high,auroc_bayes,auroc_truth,updates,"
            "median_delta");
  const std::vector<LoadedAnalysis> loaded{load_analysis(dir / "analysis")};
  const auto r = write_report(loaded, dir / "report");
  EXPECT_EQ(first_line(dir / "report" / "comparison.csv"),
            "analysis,run_id,backend_identity,batch_validity_step,bp_validity_step,comparison_step,batch_auroc,"
            "bp_auroc,auroc_gap,batch_ece,bp_ece,batch_median_delta,bp_median_delta");
  EXPECT_EQ(first_line(dir / "report" / "scatter.csv"), "analysis,trajectory_id,step,mode,i_ler,kl_q_pi,delta,update_class");
  ASSERT_EQ(r.comparison.size(), 1u);
  EXPECT_FALSE(r.spearman_delta_auroc.has_value());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Report, ComparisonStepIsTheSmallerValidityStep) {
  LoadedAnalysis la;
  la.label = "x";
  la.summary = nlohmann::json::parse(R"({
    "run_id": "r", "backend_identity": "b",
    "modes": {"batch": {"validity_step": 7, "median_delta": 0.2},
              "bp": {"validity_step": 4, "median_delta": 0.1}},
    "steps": [{"mode": "batch", "step": 4, "auroc": 0.8, "ece": 0.1},
              {"mode": "bp", "step": 4, "auroc": 0.9, "ece": 0.05},
              {"mode": "batch", "step": 7, "auroc": 0.95, "ece": 0.02}]})");
  const auto c = compare_modes(la);
  EXPECT_EQ(c.comparison_step, 4u);
  EXPECT_EQ(c.batch_auroc, 0.8);
  EXPECT_EQ(c.bp_auroc, 0.9);
  std::ostringstream out;
  write_comparison_csv(out, std::vector<ComparisonRow>{c});
  EXPECT_NE(out.str().find("\nx,r,b,7,4,4,0.8,0.9,"), std::string::npos) << out.str();
}

TEST(Report, SpearmanAcrossThreeAnalyses) {
  std::vector<LoadedAnalysis> all;
  const double deltas[] = {0.1, 0.3, 0.2};
  const double aurocs[] = {0.9, 0.7, 0.8};
  for (int i = 0; i < 3; ++i) {
    LoadedAnalysis la;
    la.label = "a" + std::to_string(i);
    la.summary = {{"modes", {{"batch", {{"validity_step", 2}, {"median_delta", deltas[i]}}},
                             {"bp", {{"validity_step", 2}, {"median_delta", 0.0}}}}},
                  {"steps", nlohmann::json::array({{{"mode", "bp"}, {"step", 2}, {"auroc", aurocs[i]}}})}};
    all.push_back(la);
  }
  const auto r = build_report(all);
  ASSERT_TRUE(r.spearman_delta_auroc);
  EXPECT_DOUBLE_EQ(*r.spearman_delta_auroc, -1.0);
  EXPECT_THROW(build_report(std::vector<LoadedAnalysis>{}), ConfigError);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(std::nan("")), "");
  EXPECT_EQ(format_number(std::optional<double>{}), "");
  const double v = 1.0 / 3.0;
  EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
}
