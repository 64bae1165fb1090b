#pragma once

// Deterministic agents with a known deviation from Bayes' rule, plus an
// in-process backend that reads their inputs back out of rendered Animals
// prompts and answers in the same text formats a chat model would.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "beliefaudit/backend.hpp"
#include "beliefaudit/datasets.hpp"
#include "beliefaudit/elicitation.hpp"
#include "beliefaudit/errors.hpp"
#include "beliefaudit/info.hpp"
#include "beliefaudit/random.hpp"

namespace beliefaudit {

enum class AgentKind { ExactBayes, Tempered, WrongDirection, NoisyLikelihood };

struct AgentSpec {
  AgentKind kind = AgentKind::ExactBayes;
  // beta for Tempered, gamma for WrongDirection, sigma for NoisyLikelihood.
  double parameter = 0.0;
  std::uint64_t seed = 0;
  double consistent_likelihood = 0.95;
  double inconsistent_likelihood = 0.05;

  static AgentSpec exact_bayes(std::uint64_t seed = 0) { return checked({AgentKind::ExactBayes, 0.0, seed}); }
  static AgentSpec tempered(double beta, std::uint64_t seed = 0) {
    return checked({AgentKind::Tempered, beta, seed});
  }
  static AgentSpec wrong_direction(double gamma, std::uint64_t seed = 0) {
    return checked({AgentKind::WrongDirection, gamma, seed});
  }
  static AgentSpec noisy_likelihood(double sigma, std::uint64_t seed = 0) {
    return checked({AgentKind::NoisyLikelihood, sigma, seed});
  }

  static AgentSpec checked(AgentSpec s) {
    switch (s.kind) {
      case AgentKind::ExactBayes: break;
      case AgentKind::Tempered:
        if (!(s.parameter > 0.0) || !std::isfinite(s.parameter)) throw ConfigError("tempered agent needs beta > 0");
        break;
      case AgentKind::WrongDirection:
        if (!(s.parameter > 0.0 && s.parameter <= 1.0)) throw ConfigError("wrong-direction agent needs gamma in (0,1]");
        break;
      case AgentKind::NoisyLikelihood:
        if (!(s.parameter >= 0.0) || !std::isfinite(s.parameter)) throw ConfigError("noisy agent needs sigma >= 0");
        break;
    }
    if (!(s.inconsistent_likelihood > 0.0 && s.inconsistent_likelihood <= s.consistent_likelihood &&
          s.consistent_likelihood <= 1.0)) {
      throw ConfigError("consistency likelihoods must satisfy 0 < inconsistent <= consistent <= 1");
    }
    return s;
  }

  // "exact-bayes", "tempered:0.5", "wrong-direction:0.1", "noisy:0.3".
  static AgentSpec parse(std::string_view text, std::uint64_t seed = 0) {
    const auto colon = text.find(':');
    const std::string_view name = text.substr(0, colon);
    double param = 0.0;
    if (colon != std::string_view::npos) {
      const std::string p(text.substr(colon + 1));
      char* end = nullptr;
      param = std::strtod(p.c_str(), &end);
      if (p.empty() || end != p.c_str() + p.size()) throw ConfigError("bad agent parameter: " + p);
    }
    if (name == "exact-bayes") return exact_bayes(seed);
    if (colon == std::string_view::npos) throw ConfigError("agent '" + std::string(name) + "' needs a parameter");
    if (name == "tempered") return tempered(param, seed);
    if (name == "wrong-direction") return wrong_direction(param, seed);
    if (name == "noisy") return noisy_likelihood(param, seed);
    throw ConfigError("unknown synthetic agent: " + std::string(text));
  }

  std::string describe() const {
    char buf[64];
    switch (kind) {
      case AgentKind::ExactBayes: return "exact-bayes";
      case AgentKind::Tempered: std::snprintf(buf, sizeof buf, "tempered:%g", parameter); return buf;
      case AgentKind::WrongDirection: std::snprintf(buf, sizeof buf, "wrong-direction:%g", parameter); return buf;
      case AgentKind::NoisyLikelihood: std::snprintf(buf, sizeof buf, "noisy:%g", parameter); return buf;
    }
    return "unknown";
  }
};

inline constexpr double kNoisyLikelihoodFloor = 0.01;

// Likelihood of one attribute revelation for one species.
inline double agent_likelihood(const AgentSpec& spec, std::string_view species, std::string_view evidence_item) {
  const auto& record = animals::find_species(species);
  const auto revealed = animals::parse_evidence(evidence_item);
  const double base =
      animals::is_consistent(record, revealed) ? spec.consistent_likelihood : spec.inconsistent_likelihood;
  if (spec.kind != AgentKind::NoisyLikelihood || spec.parameter == 0.0) return base;
  Rng rng(fnv1a(evidence_item, fnv1a(species, spec.seed ^ 0x9e3779b97f4a7c15ull)));
  const double noisy = base * std::exp(spec.parameter * standard_normal(rng));
  return std::clamp(noisy, kNoisyLikelihoodFloor, 1.0);
}

// `step` is 1-based: the likelihood of evidence item `step`.
inline double agent_likelihood(const AgentSpec& spec, const EvidenceTrajectory& t, std::size_t step,
                               std::size_t option) {
  if (step < 1 || step > t.step_count() || option >= t.option_count()) {
    throw DimensionError("agent_likelihood: step or option out of range");
  }
  return agent_likelihood(spec, t.options[option], t.evidence[step - 1]);
}

inline Distribution agent_posterior(const AgentSpec& spec, const Distribution& prior, const LikelihoodVector& lik) {
  if (prior.size() != lik.size()) throw DimensionError(detail::describe_size_mismatch(prior.size(), lik.size()));
  std::vector<double> w(prior.size());
  switch (spec.kind) {
    case AgentKind::ExactBayes:
    case AgentKind::NoisyLikelihood:
      return bayes_update(prior, lik);
    case AgentKind::Tempered:
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = prior[i] * std::pow(lik[i], spec.parameter);
      break;
    case AgentKind::WrongDirection: {
      const double top = *std::max_element(lik.values().begin(), lik.values().end());
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = prior[i] * (top - lik[i] + spec.parameter);
      break;
    }
  }
  return normalize(w);
}

// Reply formats of the mock backend.
inline std::string render_belief_reply(const Distribution& d) {
  std::string out = "Reasoning: weighing each option against the evidence.\nFinal answer:\n";
  char buf[48];
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%c: %.10f\n", option_letter(i), d[i]);
    out += buf;
  }
  return out;
}

inline std::string render_probability_reply(double p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "The probability is %.6f", p);
  return "Reasoning: checking the attribute against the asserted answer.\n" + std::string(buf);
}

namespace detail {

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    lines.push_back(text.substr(start, end - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

inline bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

struct ParsedPrompt {
  std::vector<std::string> options;
  std::vector<std::string> evidence;           // shown evidence block
  std::optional<std::string> asserted_answer;  // likelihood prompts
  std::optional<std::string> new_evidence;     // likelihood prompts
  std::string prior_block;                     // BP prompts
  std::string likelihood_block;                // BP prompts
};

// Reads the fields the templates place into a prompt. Only what the mock
// agents need is recovered.
inline ParsedPrompt read_prompt(const PromptBundle& prompt, const DatasetProfile& profile) {
  ParsedPrompt out;
  const auto lines = split_lines(prompt.user);
  const std::string evidence_prefix = std::string(profile.evidence_wrapper) + ": ";
  const std::string answer_prefix = std::string(profile.answer_wrapper) + ": ";
  const std::string new_prefix = std::string(profile.new_evidence_wrapper) + ": ";
  const std::string prior_header = std::string(profile.prior_wrapper) + ":";
  const std::string lik_header = std::string(profile.likelihood_wrapper) + ":";
  enum class Block { None, Options, Prior, Likelihood } block = Block::None;
  for (std::string_view line : lines) {
    if (block == Block::Options) {
      if (line.size() > 5 && starts_with(line, "  ") && line[3] == ':' && line[2] == option_letter(out.options.size())) {
        out.options.emplace_back(line.substr(5));
        continue;
      }
      block = Block::None;
    }
    if (block == Block::Prior || block == Block::Likelihood) {
      if (starts_with(line, "  ")) {
        (block == Block::Prior ? out.prior_block : out.likelihood_block).append(line).push_back('\n');
        continue;
      }
      block = Block::None;
    }
    if (starts_with(line, kQuestionPrefix)) {
      block = Block::Options;
    } else if (starts_with(line, evidence_prefix)) {
      std::string_view rest = line.substr(evidence_prefix.size());
      while (!rest.empty()) {
        auto cut = rest.find(". ");
        std::string_view item = rest.substr(0, cut);
        if (cut == std::string_view::npos && !item.empty() && item.back() == '.') item.remove_suffix(1);
        out.evidence.emplace_back(item);
        if (cut == std::string_view::npos) break;
        rest.remove_prefix(cut + 2);
      }
    } else if (starts_with(line, answer_prefix)) {
      std::string_view rest = line.substr(answer_prefix.size());
      if (!rest.empty() && rest.back() == '.') rest.remove_suffix(1);
      out.asserted_answer = std::string(rest);
    } else if (starts_with(line, new_prefix)) {
      out.new_evidence = std::string(line.substr(new_prefix.size()));
    } else if (line == prior_header) {
      block = Block::Prior;
    } else if (line == lik_header) {
      block = Block::Likelihood;
    }
  }
  return out;
}

}  // namespace detail

// Mock backend around an AgentSpec. Replies are a pure function of the
// prompt text, so resumed runs see identical answers. A positive
// `corruption_rate` replaces that fraction of replies (chosen by a hash of
// the prompt) with unparseable text.
class SyntheticBackend final : public AgentBackend {
 public:
  explicit SyntheticBackend(AgentSpec spec, double corruption_rate = 0.0)
      : spec_(AgentSpec::checked(spec)), corruption_rate_(corruption_rate) {
    if (!(corruption_rate >= 0.0 && corruption_rate <= 1.0)) throw ConfigError("corruption rate must be in [0,1]");
  }

  std::string complete(const PromptBundle& prompt, const GenerationParams&) override {
    if (corruption_rate_ > 0.0) {
      Rng rng(fnv1a(prompt.user, fnv1a(prompt.system, spec_.seed)));
      if (uniform_unit(rng) < corruption_rate_) {
        return (rng() & 1) ? "I am unable to assign probabilities here."
                           : "A: 0.9 B: 0.9 C: 0.9 D: 0.9 E: 0.9 F: 0.9 G: 0.9 H: 0.9 I: 0.9 J: 0.9";
      }
    }
    const auto& profile = profiles::by_name(prompt.dataset_profile);
    const auto parsed = detail::read_prompt(prompt, profile);
    if (parsed.options.size() < kMinOptions) throw BackendError("synthetic agent could not read the options");
    switch (prompt.mode) {
      case PromptMode::Likelihood: {
        if (!parsed.asserted_answer || !parsed.new_evidence) {
          throw BackendError("synthetic agent could not read the likelihood prompt");
        }
        return render_probability_reply(agent_likelihood(spec_, *parsed.asserted_answer, *parsed.new_evidence));
      }
      case PromptMode::BatchPosterior: {
        Distribution belief = Distribution::uniform(parsed.options.size());
        for (const auto& item : parsed.evidence) {
          std::vector<double> lik;
          for (const auto& option : parsed.options) lik.push_back(agent_likelihood(spec_, option, item));
          belief = agent_posterior(spec_, belief, LikelihoodVector(std::move(lik)));
        }
        return render_belief_reply(belief);
      }
      case PromptMode::BPPosterior: {
        const auto prior = parse_distribution(parsed.prior_block, parsed.options.size());
        const auto lik = parse_option_values(parsed.likelihood_block, parsed.options.size());
        if (!prior || !lik) throw BackendError("synthetic agent could not read the BP prompt");
        try {
          return render_belief_reply(agent_posterior(spec_, prior.value(), LikelihoodVector(*lik)));
        } catch (const Error&) {
          return "The stated likelihoods rule out every option; I cannot update.";
        }
      }
    }
    throw BackendError("unknown prompt mode");
  }

  std::string identity() const override {
    std::string id = "synthetic:" + spec_.describe();
    if (corruption_rate_ > 0.0) {
      char buf[48];
      std::snprintf(buf, sizeof buf, ";corruption=%g", corruption_rate_);
      id += buf;
    }
    return id;
  }

  const AgentSpec& spec() const noexcept { return spec_; }

 private:
  AgentSpec spec_;
  double corruption_rate_;
};

}  // namespace beliefaudit
