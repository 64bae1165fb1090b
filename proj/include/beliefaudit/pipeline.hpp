#pragma once

// Batch-mode and belief-propagation elicitation runs over a dataset, an
// append-only run store, and assembly of (prior, likelihood, post-data)
// update triples from stored records.
//
// Store layout: <dir>/manifest.json, <dir>/batch.jsonl, <dir>/bp.jsonl. Each
// record line is a self-contained JSON object carrying a crc32 of its own
// canonical serialization; a torn or corrupt tail is cut off on open.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <zlib.h>

#include "beliefaudit/backend.hpp"
#include "beliefaudit/datasets.hpp"
#include "beliefaudit/elicitation.hpp"
#include "beliefaudit/errors.hpp"
#include "beliefaudit/info.hpp"
#include "beliefaudit/metrics.hpp"

namespace beliefaudit {

enum class RunMode { Batch, BP };
enum class RecordKind { Prior, Posterior, Likelihood };

inline const char* to_string(RunMode m) { return m == RunMode::Batch ? "batch" : "bp"; }

inline RunMode run_mode_from_string(std::string_view s) {
  if (s == "batch") return RunMode::Batch;
  if (s == "bp") return RunMode::BP;
  throw ConfigError("unknown mode: " + std::string(s));
}

inline const char* to_string(RecordKind k) {
  switch (k) {
    case RecordKind::Prior: return "prior";
    case RecordKind::Posterior: return "posterior";
    case RecordKind::Likelihood: return "likelihood";
  }
  return "unknown";
}

inline RecordKind record_kind_from_string(std::string_view s) {
  if (s == "prior") return RecordKind::Prior;
  if (s == "posterior") return RecordKind::Posterior;
  if (s == "likelihood") return RecordKind::Likelihood;
  throw StoreError("unknown record kind: " + std::string(s));
}

struct RecordKey {
  std::string trajectory_id;
  std::size_t step = 0;
  RunMode mode = RunMode::Batch;
  RecordKind kind = RecordKind::Posterior;
  std::size_t option_index = 0;  // likelihood records only

  friend auto operator<=>(const RecordKey&, const RecordKey&) = default;
};

// One elicitation result. `valid == false` implies no parsed value.
struct BeliefRecord {
  RecordKey key;
  std::optional<std::vector<double>> distribution;
  std::optional<double> scalar;
  std::string raw;
  bool valid = false;
  std::string failure_reason;
  std::size_t attempts = 0;
  std::string backend_identity;
  std::string timestamp;
  nlohmann::json generation_params = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["trajectory_id"] = key.trajectory_id;
    j["step"] = key.step;
    j["mode"] = to_string(key.mode);
    j["kind"] = to_string(key.kind);
    if (key.kind == RecordKind::Likelihood) j["option_index"] = key.option_index;
    if (distribution) {
      j["parsed"] = *distribution;
    } else if (scalar) {
      j["parsed"] = *scalar;
    } else {
      j["parsed"] = nullptr;
    }
    j["raw"] = raw;
    j["valid"] = valid;
    if (!valid) j["failure_reason"] = failure_reason;
    j["attempts"] = attempts;
    j["backend_identity"] = backend_identity;
    j["timestamp"] = timestamp;
    j["generation_params"] = generation_params;
    return j;
  }

  static BeliefRecord from_json(const nlohmann::json& j) {
    BeliefRecord r;
    r.key.trajectory_id = j.at("trajectory_id").get<std::string>();
    r.key.step = j.at("step").get<std::size_t>();
    r.key.mode = run_mode_from_string(j.at("mode").get<std::string>());
    r.key.kind = record_kind_from_string(j.at("kind").get<std::string>());
    if (r.key.kind == RecordKind::Likelihood) r.key.option_index = j.at("option_index").get<std::size_t>();
    const auto& parsed = j.at("parsed");
    if (parsed.is_array()) {
      r.distribution = parsed.get<std::vector<double>>();
    } else if (parsed.is_number()) {
      r.scalar = parsed.get<double>();
    }
    r.raw = j.at("raw").get<std::string>();
    r.valid = j.at("valid").get<bool>();
    if (auto it = j.find("failure_reason"); it != j.end()) r.failure_reason = it->get<std::string>();
    r.attempts = j.at("attempts").get<std::size_t>();
    r.backend_identity = j.at("backend_identity").get<std::string>();
    r.timestamp = j.at("timestamp").get<std::string>();
    r.generation_params = j.at("generation_params");
    if (!r.valid && (r.distribution || r.scalar)) throw StoreError("invalid record carries a parsed value");
    return r;
  }
};

inline std::string hex_crc32(std::string_view text) {
  const uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size()));
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

inline std::string sha256_hex(std::string_view text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    out += buf;
  }
  return out;
}

// Serialized record line (no trailing newline) with its checksum field.
inline std::string encode_record_line(const BeliefRecord& r) {
  nlohmann::json j = r.to_json();
  j["crc32"] = hex_crc32(j.dump());
  return j.dump();
}

// Returns nothing for malformed lines or checksum mismatches.
inline std::optional<BeliefRecord> decode_record_line(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto it = j.find("crc32");
  if (it == j.end() || !it->is_string()) return std::nullopt;
  const std::string stored = it->get<std::string>();
  j.erase("crc32");
  if (hex_crc32(j.dump()) != stored) return std::nullopt;
  try {
    return BeliefRecord::from_json(j);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::string dataset_fingerprint(const std::vector<EvidenceTrajectory>& dataset) {
  std::ostringstream out;
  write_trajectories(out, dataset);
  return sha256_hex(out.str());
}

struct RunManifest {
  std::string run_id;
  std::string dataset_fingerprint;
  std::size_t dataset_size = 0;
  std::string backend_identity;
  std::string profile;
  std::vector<RunMode> modes;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::string created_at;

  bool has_mode(RunMode m) const { return std::find(modes.begin(), modes.end(), m) != modes.end(); }

  nlohmann::json to_json() const {
    nlohmann::json modes_json = nlohmann::json::array();
    for (auto m : modes) modes_json.push_back(to_string(m));
    return {{"run_id", run_id},
            {"dataset_fingerprint", dataset_fingerprint},
            {"dataset_size", dataset_size},
            {"backend_identity", backend_identity},
            {"profile", profile},
            {"modes", modes_json},
            {"seed", seed},
            {"config", config},
            {"created_at", created_at}};
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
    m.dataset_size = j.at("dataset_size").get<std::size_t>();
    m.backend_identity = j.at("backend_identity").get<std::string>();
    m.profile = j.at("profile").get<std::string>();
    for (const auto& s : j.at("modes")) m.modes.push_back(run_mode_from_string(s.get<std::string>()));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config");
    m.created_at = j.at("created_at").get<std::string>();
    return m;
  }
};

inline std::string utc_now_iso8601() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

using Clock = std::function<std::string()>;

inline RunManifest make_manifest(const std::vector<EvidenceTrajectory>& dataset, const std::string& backend_identity,
                                 std::vector<RunMode> modes, std::uint64_t seed, const std::string& profile,
                                 const GenerationParams& generation, const Clock& clock = utc_now_iso8601) {
  RunManifest m;
  m.dataset_fingerprint = dataset_fingerprint(dataset);
  m.dataset_size = dataset.size();
  m.backend_identity = backend_identity;
  m.profile = profile;
  m.modes = std::move(modes);
  m.seed = seed;
  m.config = {{"generation", generation.to_json()}, {"profile", profile}};
  m.created_at = clock();
  std::string basis = m.dataset_fingerprint + "|" + backend_identity + "|" + profile + "|" + std::to_string(seed);
  for (auto mode : m.modes) basis += std::string("|") + to_string(mode);
  m.run_id = sha256_hex(basis).substr(0, 16);
  return m;
}

inline std::string mode_file_name(RunMode m) { return std::string(to_string(m)) + ".jsonl"; }

class RunStore {
 public:
  // Opens an existing store. Throws StoreError when the manifest is missing.
  static RunStore open(const std::filesystem::path& dir) {
    RunStore s(dir);
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw StoreError("no run manifest at " + manifest_path.string());
    try {
      s.manifest_ = RunManifest::from_json(nlohmann::json::parse(in));
    } catch (const std::exception& e) {
      throw StoreError("unreadable manifest " + manifest_path.string() + ": " + e.what());
    }
    for (auto mode : {RunMode::Batch, RunMode::BP}) s.load(mode);
    return s;
  }

  // Creates a new store, or reopens one whose manifest matches the dataset,
  // backend, profile and modes of `manifest`.
  static RunStore open_or_create(const std::filesystem::path& dir, const RunManifest& manifest) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw StoreError("cannot create store directory " + dir.string() + ": " + ec.message());
    if (std::filesystem::exists(dir / "manifest.json")) {
      RunStore s = open(dir);
      const auto& m = s.manifest_;
      if (m.dataset_fingerprint != manifest.dataset_fingerprint) {
        throw ConfigError("store " + dir.string() + " belongs to a different dataset");
      }
      if (m.backend_identity != manifest.backend_identity || m.profile != manifest.profile) {
        throw ConfigError("store " + dir.string() + " was written by backend '" + m.backend_identity + "'");
      }
      for (auto mode : manifest.modes) {
        if (!m.has_mode(mode)) {
          throw ConfigError(std::string("store ") + dir.string() + " was not created for mode " + to_string(mode));
        }
      }
      return s;
    }
    RunStore s(dir);
    s.manifest_ = manifest;
    const auto tmp = dir / "manifest.json.tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw StoreError("cannot write " + tmp.string());
      out << manifest.to_json().dump(2) << '\n';
      if (!out.flush()) throw StoreError("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, dir / "manifest.json", ec);
    if (ec) throw StoreError("cannot finalize manifest: " + ec.message());
    return s;
  }

  RunStore(RunStore&&) noexcept = default;
  RunStore& operator=(RunStore&&) noexcept = default;

  const RunManifest& manifest() const noexcept { return manifest_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

  std::vector<BeliefRecord> records(RunMode mode) const {
    std::lock_guard lock(*mutex_);
    return records_[index_of(mode)];
  }

  std::optional<BeliefRecord> find(const RecordKey& key) const {
    std::lock_guard lock(*mutex_);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return records_[index_of(key.mode)][it->second];
  }

  std::size_t discarded_tail_bytes(RunMode mode) const { return discarded_[index_of(mode)]; }

  // Appends one record line and flushes it. Duplicate keys are rejected.
  void append(const BeliefRecord& record) {
    std::lock_guard lock(*mutex_);
    if (index_.contains(record.key)) throw StoreError("duplicate record for " + record.key.trajectory_id);
    const std::size_t m = index_of(record.key.mode);
    if (!writers_[m]) {
      const auto path = dir_ / mode_file_name(record.key.mode);
      writers_[m] = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::app);
      if (!*writers_[m]) throw StoreError("cannot open " + path.string() + " for appending");
    }
    *writers_[m] << encode_record_line(record) << '\n';
    writers_[m]->flush();
    if (!*writers_[m]) throw StoreError("write failed in " + dir_.string());
    index_.emplace(record.key, records_[m].size());
    records_[m].push_back(record);
  }

 private:
  explicit RunStore(std::filesystem::path dir) : dir_(std::move(dir)), mutex_(std::make_unique<std::mutex>()) {}

  static std::size_t index_of(RunMode m) { return m == RunMode::Batch ? 0 : 1; }

  void load(RunMode mode) {
    const auto path = dir_ / mode_file_name(mode);
    if (!std::filesystem::exists(path)) return;
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    const std::size_t m = index_of(mode);
    while (pos < content.size()) {
      const auto nl = content.find('\n', pos);
      if (nl == std::string::npos) break;
      auto record = decode_record_line(std::string_view(content).substr(pos, nl - pos));
      if (!record || record->key.mode != mode || index_.contains(record->key)) break;
      index_.emplace(record->key, records_[m].size());
      records_[m].push_back(std::move(*record));
      pos = nl + 1;
    }
    if (pos < content.size()) {
      discarded_[m] = content.size() - pos;
      std::filesystem::resize_file(path, pos);
    }
  }

  std::filesystem::path dir_;
  RunManifest manifest_;
  std::unique_ptr<std::mutex> mutex_;
  std::map<RecordKey, std::size_t> index_;
  std::vector<BeliefRecord> records_[2];
  std::unique_ptr<std::ofstream> writers_[2];
  std::size_t discarded_[2] = {0, 0};
};

struct RunOptions {
  const DatasetProfile* profile = &profiles::kAnimals;
  GenerationParams generation;
  std::size_t parallelism = 1;
  Clock clock = utc_now_iso8601;
  // Called after every persisted record (progress hooks, fault injection).
  std::function<void(const BeliefRecord&)> after_append;
  std::ostream* progress = nullptr;
};

struct RunSummary {
  RunMode mode = RunMode::Batch;
  std::size_t trajectories = 0;
  std::size_t finished_trajectories = 0;
  std::size_t truncated_trajectories = 0;
  std::size_t records_written = 0;
  std::size_t records_reused = 0;
  std::size_t invalid_records = 0;
  std::size_t backend_calls = 0;
  std::string error;  // first backend failure, if the run stopped early

  double completion_fraction() const {
    return trajectories == 0 ? 1.0 : static_cast<double>(finished_trajectories) / static_cast<double>(trajectories);
  }
  bool complete() const { return finished_trajectories == trajectories; }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"mode", to_string(mode)},
                        {"trajectories", trajectories},
                        {"finished_trajectories", finished_trajectories},
                        {"truncated_trajectories", truncated_trajectories},
                        {"records_written", records_written},
                        {"records_reused", records_reused},
                        {"invalid_records", invalid_records},
                        {"backend_calls", backend_calls},
                        {"completion_fraction", completion_fraction()}};
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

// Rounds to the 4-decimal precision used in prompts.
inline double presented_value(double v) { return std::strtod(format_prob(v).c_str(), nullptr); }

// The prior exactly as a BP prompt shows it.
inline Distribution presented_belief(const Distribution& d) { return normalize(presented_distribution(d.values())); }

inline std::vector<double> presented_values(std::span<const double> values) {
  std::vector<double> v;
  for (double x : values) v.push_back(presented_value(x));
  return v;
}

namespace detail {

// Writes records in trajectory order regardless of which worker finishes
// first; with one worker every record is written as soon as it exists.
// Nothing is written after an interrupted trajectory's records, so a resumed
// store matches an uninterrupted one byte for byte.
class OrderedCommitter {
 public:
  OrderedCommitter(RunStore& store, const RunOptions& options) : store_(store), options_(options) {}

  void emit(std::size_t trajectory, const BeliefRecord& record) {
    std::lock_guard lock(mutex_);
    if (halted_ || trajectory > last_) return;
    if (trajectory == next_) {
      write(record);
    } else {
      pending_[trajectory].push_back(record);
    }
  }

  std::size_t written() {
    std::lock_guard lock(mutex_);
    return written_;
  }
  std::size_t invalid() {
    std::lock_guard lock(mutex_);
    return invalid_;
  }

  // `completed` is false when the trajectory stopped on an exception.
  void finish(std::size_t trajectory, bool completed) {
    std::lock_guard lock(mutex_);
    if (!completed) last_ = std::min(last_, trajectory);
    done_.insert(trajectory);
    while (!halted_ && next_ < last_ && done_.contains(next_)) {
      done_.erase(next_);
      ++next_;
      if (auto it = pending_.find(next_); it != pending_.end()) {
        auto records = std::move(it->second);
        pending_.erase(it);
        for (const auto& r : records) write(r);
      }
    }
  }

 private:
  void write(const BeliefRecord& r) {
    try {
      store_.append(r);
      written_ += 1;
      if (!r.valid) invalid_ += 1;
      if (options_.after_append) options_.after_append(r);
    } catch (...) {
      halted_ = true;
      throw;
    }
  }

  RunStore& store_;
  const RunOptions& options_;
  std::mutex mutex_;
  std::size_t written_ = 0;
  std::size_t invalid_ = 0;
  std::size_t next_ = 0;
  std::size_t last_ = std::numeric_limits<std::size_t>::max();
  bool halted_ = false;
  std::set<std::size_t> done_;
  std::map<std::size_t, std::vector<BeliefRecord>> pending_;
};

struct RunCounters {
  std::atomic<std::size_t> reused{0};
  std::atomic<std::size_t> calls{0};
  std::atomic<std::size_t> finished{0};
  std::atomic<std::size_t> truncated{0};
};

struct TrajectoryContext {
  const EvidenceTrajectory& trajectory;
  std::size_t index;
  RunMode mode;
  AgentBackend& backend;
  RunStore& store;
  OrderedCommitter& committer;
  const RunOptions& options;
  RunCounters& counters;
};

// Returns the stored record for `key` or elicits it: one request, one
// re-ask with a format reminder on a parse failure, then an invalid record.
inline BeliefRecord get_or_elicit(TrajectoryContext& ctx, RecordKey key, const std::function<PromptBundle()>& render,
                                  std::optional<std::size_t> option_count) {
  if (auto existing = ctx.store.find(key)) {
    ctx.counters.reused += 1;
    return *existing;
  }
  const PromptBundle prompt = render();
  BeliefRecord r;
  r.key = std::move(key);
  r.backend_identity = ctx.backend.identity();
  r.generation_params = ctx.options.generation.to_json();
  for (std::size_t attempt = 0; attempt < 2; ++attempt) {
    const PromptBundle request =
        attempt == 0 ? prompt : with_format_reminder(prompt, option_count.value_or(ctx.trajectory.option_count()));
    ctx.counters.calls += 1;
    r.raw = ctx.backend.complete(request, ctx.options.generation);
    r.attempts = attempt + 1;
    if (option_count) {
      auto parsed = parse_distribution(r.raw, *option_count);
      if (parsed) {
        r.distribution = parsed.value().values();
        r.valid = true;
        break;
      }
      r.failure_reason = to_string(parsed.failure().reason);
    } else {
      auto parsed = parse_probability(r.raw);
      if (parsed) {
        r.scalar = parsed.value();
        r.valid = true;
        break;
      }
      r.failure_reason = to_string(parsed.failure().reason);
    }
  }
  if (r.valid) r.failure_reason.clear();
  r.timestamp = ctx.options.clock();
  ctx.committer.emit(ctx.index, r);
  return r;
}

inline RecordKey make_key(const TrajectoryContext& ctx, RecordKind kind, std::size_t step, std::size_t option = 0) {
  return {ctx.trajectory.id, step, ctx.mode, kind, kind == RecordKind::Likelihood ? option : 0};
}

// Elicits every per-option likelihood of evidence item `step`. Returns
// nothing if any of them is invalid.
inline std::optional<std::vector<double>> elicit_likelihoods(TrajectoryContext& ctx, std::size_t step) {
  const auto& t = ctx.trajectory;
  std::vector<double> values;
  bool all_valid = true;
  for (std::size_t k = 0; k < t.option_count(); ++k) {
    auto r = get_or_elicit(
        ctx, make_key(ctx, RecordKind::Likelihood, step, k),
        [&] { return render_likelihood_prompt(t, step, k, *ctx.options.profile); }, std::nullopt);
    if (r.valid) {
      values.push_back(*r.scalar);
    } else {
      all_valid = false;
    }
  }
  if (!all_valid) return std::nullopt;
  return values;
}

inline void batch_trajectory(TrajectoryContext& ctx) {
  const auto& t = ctx.trajectory;
  for (std::size_t n = 0; n <= t.step_count(); ++n) {
    get_or_elicit(
        ctx, make_key(ctx, RecordKind::Posterior, n), [&] { return render_batch_prompt(t, n, *ctx.options.profile); },
        t.option_count());
    if (n >= 1) elicit_likelihoods(ctx, n);
  }
}

inline void bp_trajectory(TrajectoryContext& ctx) {
  const auto& t = ctx.trajectory;
  const auto prior = get_or_elicit(
      ctx, make_key(ctx, RecordKind::Prior, 0), [&] { return render_batch_prompt(t, 0, *ctx.options.profile); },
      t.option_count());
  Distribution belief = prior.valid ? Distribution::from_normalized(*prior.distribution)
                                    : Distribution::uniform(t.option_count());
  for (std::size_t n = 1; n <= t.step_count(); ++n) {
    const auto lik = elicit_likelihoods(ctx, n);
    if (!lik) {
      ctx.counters.truncated += 1;
      return;
    }
    const auto post = get_or_elicit(
        ctx, make_key(ctx, RecordKind::Posterior, n),
        [&] { return render_bp_prompt(t, belief.values(), t.evidence[n - 1], *lik, *ctx.options.profile); },
        t.option_count());
    if (!post.valid) {
      ctx.counters.truncated += 1;
      return;
    }
    belief = Distribution::from_normalized(*post.distribution);
  }
}

inline RunSummary run_mode(const std::vector<EvidenceTrajectory>& dataset, AgentBackend& backend, RunStore& store,
                           const RunOptions& options, RunMode mode) {
  if (dataset.empty()) throw ConfigError("dataset is empty");
  if (!store.manifest().has_mode(mode)) {
    throw ConfigError(std::string("store was not created for mode ") + to_string(mode));
  }
  OrderedCommitter committer(store, options);
  RunCounters counters;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex error_mutex;
  std::string first_error;
  std::exception_ptr fatal;

  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= dataset.size()) break;
      TrajectoryContext ctx{dataset[i], i, mode, backend, store, committer, options, counters};
      bool completed = false;
      try {
        if (mode == RunMode::Batch) {
          batch_trajectory(ctx);
        } else {
          bp_trajectory(ctx);
        }
        completed = true;
        const std::size_t done = counters.finished.fetch_add(1) + 1;
        if (options.progress && (done % 10 == 0 || done == dataset.size())) {
          std::lock_guard lock(error_mutex);
          *options.progress << to_string(mode) << ": " << done << "/" << dataset.size() << " trajectories\n";
        }
      } catch (const BackendError& e) {
        std::lock_guard lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
        abort = true;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        abort = true;
      }
      try {
        committer.finish(i, completed);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        abort = true;
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.parallelism, dataset.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  RunSummary s;
  s.mode = mode;
  s.trajectories = dataset.size();
  s.finished_trajectories = counters.finished;
  s.truncated_trajectories = counters.truncated;
  s.records_written = committer.written();
  s.records_reused = counters.reused;
  s.invalid_records = committer.invalid();
  s.backend_calls = counters.calls;
  s.error = first_error;
  return s;
}

}  // namespace detail

// Steps 0..N: one batch posterior each; steps 1..N: one likelihood per option.
inline RunSummary run_batch(const std::vector<EvidenceTrajectory>& dataset, AgentBackend& backend, RunStore& store,
                            const RunOptions& options = {}) {
  return detail::run_mode(dataset, backend, store, options, RunMode::Batch);
}

// Step-0 prior from the empty-evidence batch prompt, then per step the
// per-option likelihoods and a BP posterior given the carried belief. A step
// whose likelihoods or posterior stay invalid after the re-ask truncates the
// trajectory there.
inline RunSummary run_bp(const std::vector<EvidenceTrajectory>& dataset, AgentBackend& backend, RunStore& store,
                         const RunOptions& options = {}) {
  return detail::run_mode(dataset, backend, store, options, RunMode::BP);
}

// ---------------------------------------------------------------------------
// Assembly

struct UpdateTriple {
  std::string trajectory_id;
  std::size_t step = 0;
  RunMode mode = RunMode::Batch;
  Distribution prior;
  LikelihoodVector likelihood;
  Distribution post;
};

struct AssembledUpdates {
  std::vector<UpdateTriple> triples;
  std::size_t excluded = 0;  // steps with a missing or invalid component
};

namespace detail {

inline std::optional<Distribution> valid_distribution(const RunStore& store, const RecordKey& key) {
  auto r = store.find(key);
  if (!r || !r->valid || !r->distribution) return std::nullopt;
  return Distribution::from_normalized(*r->distribution);
}

inline std::optional<std::vector<double>> valid_likelihoods(const RunStore& store, const std::string& id,
                                                            std::size_t step, RunMode mode, std::size_t options) {
  std::vector<double> out;
  for (std::size_t k = 0; k < options; ++k) {
    auto r = store.find({id, step, mode, RecordKind::Likelihood, k});
    if (!r || !r->valid || !r->scalar) return std::nullopt;
    out.push_back(*r->scalar);
  }
  return out;
}

}  // namespace detail

// Carried belief for BP mode: the step-0 prior (uniform when invalid), then
// each valid BP posterior.
inline std::optional<Distribution> bp_belief(const RunStore& store, const EvidenceTrajectory& t, std::size_t step) {
  if (step == 0) {
    auto prior = store.find({t.id, 0, RunMode::BP, RecordKind::Prior, 0});
    if (!prior) return std::nullopt;
    if (!prior->valid) return Distribution::uniform(t.option_count());
    return Distribution::from_normalized(*prior->distribution);
  }
  return detail::valid_distribution(store, {t.id, step, RunMode::BP, RecordKind::Posterior, 0});
}

// The belief a mode reports after `step` evidence items, if valid.
inline std::optional<Distribution> reported_belief(const RunStore& store, const EvidenceTrajectory& t, RunMode mode,
                                                   std::size_t step) {
  if (mode == RunMode::BP) return bp_belief(store, t, step);
  return detail::valid_distribution(store, {t.id, step, RunMode::Batch, RecordKind::Posterior, 0});
}

// Elicited likelihoods of evidence item `step` (1-based), if all valid.
inline std::optional<std::vector<double>> elicited_likelihoods(const RunStore& store, const EvidenceTrajectory& t,
                                                               RunMode mode, std::size_t step) {
  return detail::valid_likelihoods(store, t.id, step, mode, t.option_count());
}

// Batch: previous batch posterior, elicited likelihoods, next batch
// posterior. BP: the prior and likelihoods as the BP prompt presented them,
// and the BP posterior.
inline AssembledUpdates assemble_updates(const RunStore& store, const std::vector<EvidenceTrajectory>& dataset,
                                         RunMode mode) {
  AssembledUpdates out;
  for (const auto& t : dataset) {
    for (std::size_t n = 1; n <= t.step_count(); ++n) {
      auto prior = reported_belief(store, t, mode, n - 1);
      auto lik = elicited_likelihoods(store, t, mode, n);
      auto post = reported_belief(store, t, mode, n);
      if (!prior || !lik || !post) {
        ++out.excluded;
        continue;
      }
      try {
        if (mode == RunMode::BP) {
          prior = presented_belief(*prior);
          *lik = presented_values(*lik);
        }
        LikelihoodVector l(*lik);
        marginal_likelihood(*prior, l);
        out.triples.push_back({t.id, n, mode, *prior, std::move(l), *post});
      } catch (const Error&) {
        ++out.excluded;
      }
    }
  }
  return out;
}

// Per evidence step: questions whose belief and every likelihood are valid,
// out of all questions in the dataset.
inline std::vector<StepValidity> step_validity(const RunStore& store, const std::vector<EvidenceTrajectory>& dataset,
                                               RunMode mode) {
  std::size_t max_steps = 0;
  for (const auto& t : dataset) max_steps = std::max(max_steps, t.step_count());
  std::vector<StepValidity> out;
  for (std::size_t n = 1; n <= max_steps; ++n) {
    StepValidity v{n, 0, dataset.size()};
    for (const auto& t : dataset) {
      if (n > t.step_count()) continue;
      const auto post = store.find({t.id, n, mode, RecordKind::Posterior, 0});
      if (post && post->valid && elicited_likelihoods(store, t, mode, n)) ++v.valid;
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace beliefaudit
