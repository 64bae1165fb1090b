// beliefaudit: dataset generation, elicitation runs, analysis and reports.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "beliefaudit/analysis.hpp"
#include "beliefaudit/datasets.hpp"
#include "beliefaudit/http_backend.hpp"
#include "beliefaudit/pipeline.hpp"
#include "beliefaudit/synthetic.hpp"

namespace fs = std::filesystem;
using namespace beliefaudit;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kPartial = 2, kFatal = 3 };

constexpr std::string_view kSyntheticPrefix = "synthetic:";

std::vector<EvidenceTrajectory> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StoreError("cannot read dataset " + path);
  return load_trajectories(in);
}

std::vector<RunMode> parse_modes(const std::string& mode) {
  if (mode == "all") return {RunMode::Batch, RunMode::BP};
  return {run_mode_from_string(mode)};
}

struct RunArgs {
  std::string dataset;
  std::string store;
  std::string mode = "all";
  std::string backend_name;
  std::string backend_url;
  std::string profile = "animals";
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  double corruption = 0.0;
  double temperature = 0.0;
  int max_tokens = 2048;
};

std::unique_ptr<AgentBackend> make_backend(const RunArgs& a) {
  if (a.backend_name.starts_with(kSyntheticPrefix)) {
    const auto spec = AgentSpec::parse(std::string_view(a.backend_name).substr(kSyntheticPrefix.size()), a.seed);
    return std::make_unique<SyntheticBackend>(spec, a.corruption);
  }
  if (a.backend_url.empty()) throw ConfigError("--backend-url is required unless --backend-name is synthetic:<agent>");
  if (a.backend_name.empty()) throw ConfigError("--backend-name is required");
  HttpBackendConfig config;
  config.url = a.backend_url;
  config.model = a.backend_name;
  if (const char* key = std::getenv(kApiKeyEnv)) config.api_key = key;
  return std::make_unique<HttpBackend>(config);
}

int cmd_run(const RunArgs& a) {
  const auto dataset = read_dataset(a.dataset);
  const auto& profile = profiles::by_name(a.profile);
  auto backend = make_backend(a);
  RunOptions options;
  options.profile = &profile;
  options.generation = {a.temperature, a.max_tokens};
  options.parallelism = a.parallelism;
  options.progress = &std::cerr;
  const auto modes = parse_modes(a.mode);
  auto manifest = make_manifest(dataset, backend->identity(), modes, a.seed, std::string(profile.name), options.generation);
  auto store = RunStore::open_or_create(a.store, manifest);
  for (auto m : modes) {
    if (auto dropped = store.discarded_tail_bytes(m)) {
      std::cerr << "warning: discarded " << dropped << " bytes of incomplete records from " << mode_file_name(m)
                << '\n';
    }
  }
  nlohmann::json summaries = nlohmann::json::array();
  bool partial = false;
  for (auto m : modes) {
    const RunSummary s = m == RunMode::Batch ? run_batch(dataset, *backend, store, options)
                                             : run_bp(dataset, *backend, store, options);
    summaries.push_back(s.to_json());
    if (!s.complete()) {
      partial = true;
      std::cerr << "error: " << to_string(m) << " run stopped early: " << s.error << '\n';
      break;
    }
  }
  nlohmann::json result;
  result["run_id"] = store.manifest().run_id;
  result["runs"] = summaries;
  std::cout << result.dump(2) << '\n';
  return partial ? kPartial : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit belief updates of language-model agents against Bayes' rule"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::size_t count = animals::kDefaultQuestionCount;
  std::string out;
  auto* gen = app.add_subcommand("generate-dataset", "Write the Animals trajectory file (JSONL)");
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("--count", count, "Number of questions")->check(CLI::PositiveNumber);
  gen->add_option("--out", out, "Output path")->required();

  std::string species_out;
  auto* species = app.add_subcommand("export-species", "Write the species table and family map as CSV");
  species->add_option("--out", species_out, "Output directory")->required();

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Elicit beliefs and likelihoods into a run store");
  run_cmd->add_option("--dataset", run.dataset, "Trajectory file (JSONL)")->required();
  run_cmd->add_option("--store", run.store, "Run store directory")->required();
  run_cmd->add_option("--mode", run.mode, "batch, bp or all")->check(CLI::IsMember({"batch", "bp", "all"}));
  run_cmd->add_option("--backend-name", run.backend_name, "Model name, or synthetic:<agent>")->required();
  run_cmd->add_option("--backend-url", run.backend_url, "Chat-completions endpoint URL");
  run_cmd->add_option("--profile", run.profile, "Prompt profile")
      ->check(CLI::IsMember({"animals", "political_ideology", "mediq", "eleusis"}));
  run_cmd->add_option("--seed", run.seed, "Seed for synthetic agents");
  run_cmd->add_option("--parallelism", run.parallelism, "Concurrent trajectories")->check(CLI::PositiveNumber);
  run_cmd->add_option("--corruption", run.corruption, "Malformed-reply rate for synthetic agents")
      ->check(CLI::Range(0.0, 1.0));
  run_cmd->add_option("--temperature", run.temperature, "Sampling temperature");
  run_cmd->add_option("--max-tokens", run.max_tokens, "Token limit per reply")->check(CLI::PositiveNumber);

  std::string an_store, an_dataset, an_oracle, an_out;
  AnalysisConfig an_config;
  auto* analyze = app.add_subcommand("analyze", "Decompose updates and compute per-step metrics");
  analyze->add_option("--store", an_store, "Run store directory")->required();
  analyze->add_option("--dataset", an_dataset, "Trajectory file the run used")->required();
  analyze->add_option("--oracle-store", an_oracle, "Run store whose likelihoods act as the oracle");
  analyze->add_option("--threshold", an_config.threshold, "Optimal-update threshold (nats)")
      ->check(CLI::NonNegativeNumber);
  analyze->add_option("--bins", an_config.bins, "ECE bins")->check(CLI::PositiveNumber);
  analyze->add_option("--resamples", an_config.resamples, "Bootstrap resamples")->check(CLI::Range(100, 1000000));
  analyze->add_option("--seed", an_config.seed, "Bootstrap seed");
  analyze->add_option("--out", an_out, "Output directory")->required();

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Compare analyses and emit plot data");
  report->add_option("analyses", report_inputs, "Analysis directories")->required();
  report->add_option("--out", report_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) {
      const auto dataset = animals::build_animals(seed, count);
      std::ofstream f(out, std::ios::binary | std::ios::trunc);
      if (!f) throw StoreError("cannot write " + out);
      write_trajectories(f, dataset);
      if (!f.flush()) throw StoreError("write failed: " + out);
      std::cerr << "wrote " << dataset.size() << " questions to " << out << '\n';
      return kOk;
    }
    if (*species) {
      fs::create_directories(species_out);
      std::ofstream table(fs::path(species_out) / "species.csv", std::ios::binary | std::ios::trunc);
      std::ofstream families(fs::path(species_out) / "families.csv", std::ios::binary | std::ios::trunc);
      if (!table || !families) throw StoreError("cannot write into " + species_out);
      animals::export_species_csv(table);
      animals::export_family_map_csv(families);
      return kOk;
    }
    if (*run_cmd) return cmd_run(run);
    if (*analyze) {
      const auto dataset = read_dataset(an_dataset);
      const auto store = RunStore::open(an_store);
      std::optional<RunStore> oracle;
      if (!an_oracle.empty()) oracle.emplace(RunStore::open(an_oracle));
      const auto analysis = analyze_run(store, dataset, an_config, oracle ? &*oracle : nullptr);
      write_analysis(analysis, an_out);
      for (const auto& w : analysis.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << summary_json(analysis).dump(2) << '\n';
      return kOk;
    }
    if (*report) {
      std::vector<LoadedAnalysis> loaded;
      for (const auto& dir : report_inputs) loaded.push_back(load_analysis(dir));
      const auto r = write_report(loaded, report_out);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const BackendError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPartial;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFatal;
  }
  return kUsage;
}
