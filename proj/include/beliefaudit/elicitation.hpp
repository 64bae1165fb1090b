#pragma once

// Prompt rendering for likelihood, batch and belief-propagation elicitation,
// and strict extraction of verbalized probabilities from free-form replies.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "beliefaudit/datasets.hpp"
#include "beliefaudit/errors.hpp"
#include "beliefaudit/info.hpp"

namespace beliefaudit {

// Dataset-specific wrapper strings substituted into the prompt templates.
struct DatasetProfile {
  std::string_view name;
  std::string_view system;
  std::string_view evidence_wrapper;
  std::string_view answer_wrapper;
  std::string_view new_evidence_wrapper;
  std::string_view task_description;
  std::string_view prior_wrapper;
  std::string_view likelihood_wrapper;
};

namespace profiles {

inline constexpr DatasetProfile kAnimals{
    "animals",
    "You are a helpful assistant who is an expert on identifying animals from their attributes. You will be "
    "presented with various attributes that an animal possesses or not, and your task will be to identify the "
    "animal as best you can.",
    "ANIMAL ATTRIBUTES",
    "The correct answer to the question above is",
    "Consider the following piece of new information",
    "Given the correct answer and the provided information, your task is to determine the probability of "
    "observing the new information.",
    "Your current beliefs about the animals are",
    "The likelihoods of this attribute being observed for each animal are",
};

inline constexpr DatasetProfile kPoliticalIdeology{
    "political_ideology",
    "You are a social science reasoning assistant. You will receive a set of survey responses from an individual "
    "and a multiple-choice question about their demographic background. Each survey response is formatted as "
    "<|Q|>: <question text> <|A|>: <answer text>.",
    "SURVEY RESPONSES",
    "The actual demographic for this respondent is",
    "Consider the following survey response",
    "Given the respondent's actual demographic and the previous survey responses, your task is to determine the "
    "probability of observing this survey response.",
    "Your current beliefs about the respondent's demographic are",
    "The likelihoods of this survey response being observed for each demographic are",
};

inline constexpr DatasetProfile kMediQ{
    "mediq",
    "You are a medical doctor trying to reason through a real-life clinical case. Based on your understanding of "
    "basic and clinical science, medical knowledge, and mechanisms underlying health, disease, patient care, and "
    "modes of therapy, respond according to the task specified by the user. Base your response on the current and "
    "standard practices referenced in medical guidelines.",
    "A patient comes into the clinic presenting with the following symptoms: PATIENT INFORMATION",
    "The correct answer to the question above is",
    "Consider the following piece of new information",
    "Given the correct answer and the provided information, your task is to determine the probability of "
    "observing the new information.",
    "Your current beliefs about the diagnosis are",
    "The likelihoods of this symptom being observed for each diagnosis are",
};

inline constexpr DatasetProfile kEleusis{
    "eleusis",
    "You are a helpful assistant who is an expert in logical reasoning and pattern recognition. You will be "
    "presented with sequences of card plays from a card game where cards are either accepted or rejected "
    "according to a secret rule. Your task is to determine which rule governs which cards are accepted.",
    "CONTEXT",
    "The correct answer to the question above is",
    "Consider the following piece of new information",
    "Given the correct answer and the provided information, your task is to determine the probability of "
    "observing the new information.",
    "Your current beliefs about the rule are",
    "The likelihoods of this card play being observed for each rule are",
};

inline constexpr std::array<const DatasetProfile*, 4> kAll = {&kAnimals, &kPoliticalIdeology, &kMediQ, &kEleusis};

inline const DatasetProfile& by_name(std::string_view name) {
  for (const auto* p : kAll) {
    if (p->name == name) return *p;
  }
  throw ConfigError("unknown dataset profile: " + std::string(name));
}

}  // namespace profiles

enum class PromptMode { Likelihood, BatchPosterior, BPPosterior };

inline const char* to_string(PromptMode m) {
  switch (m) {
    case PromptMode::Likelihood: return "likelihood";
    case PromptMode::BatchPosterior: return "batch_posterior";
    case PromptMode::BPPosterior: return "bp_posterior";
  }
  return "unknown";
}

struct PromptBundle {
  std::string system;
  std::string user;
  PromptMode mode = PromptMode::BatchPosterior;
  std::string dataset_profile;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

inline constexpr std::string_view kQuestionPrefix = "QUESTION: ";
inline constexpr std::string_view kBpNewEvidence = "You now observe the new evidence";
inline constexpr std::string_view kReasoningInstruction = "First, provide a step-by-step explanation of your reasoning.";

inline char option_letter(std::size_t i) { return static_cast<char>('A' + i); }

// "4 decimal places" rendering used for every number placed in a prompt.
inline std::string format_prob(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

namespace detail {

inline std::string letters_list(std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ", ";
    out += option_letter(i);
  }
  return out;
}

inline bool ends_with_terminal(std::string_view s) {
  return !s.empty() && (s.back() == '.' || s.back() == '?' || s.back() == '!');
}

// "<wrapper>: X1. X2. ... Xn." or nothing for an empty span.
inline std::string evidence_block(std::string_view wrapper, std::span<const std::string> items) {
  if (items.empty()) return {};
  std::string out(wrapper);
  out += ":";
  for (const auto& item : items) {
    out += ' ';
    out += item;
    if (!ends_with_terminal(item)) out += '.';
  }
  out += '\n';
  return out;
}

inline std::string question_block(const EvidenceTrajectory& t) {
  std::string out(kQuestionPrefix);
  out += t.question;
  out += '\n';
  for (std::size_t i = 0; i < t.options.size(); ++i) {
    out += "  ";
    out += option_letter(i);
    out += ": ";
    out += t.options[i];
    out += '\n';
  }
  return out;
}

inline std::string belief_instruction(std::size_t option_count) {
  return std::string(kReasoningInstruction) + " Then, respond with the probability for each answer (" +
         letters_list(option_count) + ") as numbers between 0.0 and 1.0 summing to 1.0.";
}

}  // namespace detail

// Per-option values as "  A: 0.2500" lines.
inline std::string render_option_values(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += "  ";
    out += option_letter(i);
    out += ": ";
    out += format_prob(values[i]);
    out += '\n';
  }
  return out;
}

inline constexpr long kProbUnits = 10000;

// A distribution in whole units of 1e-4 that sum to exactly 1 (largest
// remainder rounding). Each value moves by less than one unit.
inline std::vector<long> distribution_units(std::span<const double> values) {
  double total = 0.0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw NormalizationError("distribution values must be finite and >= 0");
    total += v;
  }
  if (!(total > 0.0)) throw NormalizationError("distribution values sum to zero");
  std::vector<long> units(values.size());
  std::vector<std::pair<double, std::size_t>> rest(values.size());
  long assigned = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double scaled = values[i] / total * static_cast<double>(kProbUnits);
    units[i] = static_cast<long>(std::floor(scaled));
    rest[i] = {scaled - static_cast<double>(units[i]), i};
    assigned += units[i];
  }
  std::stable_sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (long k = 0; assigned + k < kProbUnits && k < static_cast<long>(rest.size()); ++k) units[rest[k].second] += 1;
  return units;
}

// The values a rendered distribution shows, summing to 1.
inline std::vector<double> presented_distribution(std::span<const double> values) {
  std::vector<double> out;
  for (long u : distribution_units(values)) out.push_back(static_cast<double>(u) / static_cast<double>(kProbUnits));
  return out;
}

// Like render_option_values, but the shown values sum to exactly 1.
inline std::string render_distribution_values(std::span<const double> values) {
  return render_option_values(presented_distribution(values));
}

// Likelihood of evidence item `step` (1-based) given option `option` is the
// answer; items 1..step-1 are shown as prior evidence.
inline PromptBundle render_likelihood_prompt(const EvidenceTrajectory& t, std::size_t step, std::size_t option,
                                             const DatasetProfile& profile) {
  if (step < 1 || step > t.step_count()) throw DimensionError("likelihood step out of range");
  if (option >= t.option_count()) throw DimensionError("option index out of range");
  const std::span<const std::string> evidence(t.evidence);
  std::string user = detail::evidence_block(profile.evidence_wrapper, evidence.first(step - 1));
  user += detail::question_block(t);
  user += std::string(profile.answer_wrapper) + ": " + t.options[option] + ".\n";
  user += std::string(profile.new_evidence_wrapper) + ": " + t.evidence[step - 1] + "\n";
  user += std::string(profile.task_description) + " " + std::string(kReasoningInstruction) +
          " Then, output the probability as a number between 0.0 and 1.0.";
  return {std::string(profile.system), std::move(user), PromptMode::Likelihood, std::string(profile.name)};
}

// Belief after the first `step` evidence items (step 0 elicits the prior).
inline PromptBundle render_batch_prompt(const EvidenceTrajectory& t, std::size_t step, const DatasetProfile& profile) {
  if (step > t.step_count()) throw DimensionError("batch step out of range");
  const std::span<const std::string> evidence(t.evidence);
  std::string user = detail::evidence_block(profile.evidence_wrapper, evidence.first(step));
  user += detail::question_block(t);
  user += detail::belief_instruction(t.option_count());
  return {std::string(profile.system), std::move(user), PromptMode::BatchPosterior, std::string(profile.name)};
}

// Belief update from a stated prior, one new item, and per-option
// likelihoods. Earlier evidence items are deliberately absent.
inline PromptBundle render_bp_prompt(const EvidenceTrajectory& t, std::span<const double> prior,
                                     std::string_view new_evidence, std::span<const double> lik,
                                     const DatasetProfile& profile) {
  if (prior.size() != t.option_count() || lik.size() != t.option_count()) {
    throw DimensionError("prior and likelihood must have one value per option");
  }
  std::string user = detail::question_block(t);
  user += std::string(profile.prior_wrapper) + ":\n";
  user += render_distribution_values(prior);
  user += std::string(kBpNewEvidence) + ": " + std::string(new_evidence) + "\n";
  user += std::string(profile.likelihood_wrapper) + ":\n";
  user += render_option_values(lik);
  user += detail::belief_instruction(t.option_count());
  return {std::string(profile.system), std::move(user), PromptMode::BPPosterior, std::string(profile.name)};
}

// Format reminder appended to the user turn when re-asking after a parse
// failure.
inline PromptBundle with_format_reminder(PromptBundle prompt, std::size_t option_count) {
  if (prompt.mode == PromptMode::Likelihood) {
    prompt.user += "\n\nYour previous answer could not be read. End your reply with a single probability as a "
                   "number between 0.0 and 1.0.";
  } else {
    prompt.user += "\n\nYour previous answer could not be read. End your reply with one line per option in the form";
    for (std::size_t i = 0; i < option_count; ++i) {
      prompt.user += ' ';
      prompt.user += option_letter(i);
      prompt.user += ": <probability>";
    }
    prompt.user += ", with the probabilities summing to 1.0.";
  }
  return prompt;
}

// Any "{...}" left in a rendered prompt.
inline std::vector<std::string> unresolved_placeholders(const PromptBundle& p) {
  std::vector<std::string> out;
  for (const std::string* text : {&p.system, &p.user}) {
    std::size_t pos = 0;
    while ((pos = text->find('{', pos)) != std::string::npos) {
      const auto close = text->find('}', pos);
      if (close == std::string::npos) break;
      out.push_back(text->substr(pos, close - pos + 1));
      pos = close + 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

enum class ParseFailureReason { MissingOptions, OutOfRange, BadSum, NoNumbersFound };

inline const char* to_string(ParseFailureReason r) {
  switch (r) {
    case ParseFailureReason::MissingOptions: return "missing_options";
    case ParseFailureReason::OutOfRange: return "out_of_range";
    case ParseFailureReason::BadSum: return "bad_sum";
    case ParseFailureReason::NoNumbersFound: return "no_numbers_found";
  }
  return "unknown";
}

struct ParseFailure {
  ParseFailureReason reason;
  std::string detail;
};

// Either a parsed value or the reason parsing failed.
template <class T>
class ParseResult {
 public:
  ParseResult(T value) : v_(std::move(value)) {}
  ParseResult(ParseFailure failure) : v_(std::move(failure)) {}

  bool ok() const noexcept { return std::holds_alternative<T>(v_); }
  explicit operator bool() const noexcept { return ok(); }
  const T& value() const { return std::get<T>(v_); }
  const ParseFailure& failure() const { return std::get<ParseFailure>(v_); }

 private:
  std::variant<T, ParseFailure> v_;
};

inline constexpr double kParsedSumLow = 0.99;
inline constexpr double kParsedSumHigh = 1.01;

namespace detail {

enum class TokenKind { Label, Number, LBracket, RBracket, Comma, Other };

struct Token {
  TokenKind kind = TokenKind::Other;
  std::size_t letter = 0;  // option index for labels
  double value = 0.0;
};

inline bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Reads a standalone decimal number (optional sign, fraction, exponent,
// trailing percent) starting at `i`. Returns the end position or npos.
inline std::size_t scan_number(std::string_view s, std::size_t i, double& out) {
  const std::size_t begin = i;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
  const std::size_t digits_begin = i;
  while (i < s.size() && is_digit(s[i])) ++i;
  bool has_digits = i > digits_begin;
  if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
    has_digits = true;
  } else if (i < s.size() && s[i] == '.' && has_digits) {
    ++i;  // "1." at a sentence end
  }
  if (!has_digits) return std::string_view::npos;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    std::size_t j = i + 1;
    if (j < s.size() && (s[j] == '-' || s[j] == '+')) ++j;
    if (j < s.size() && is_digit(s[j])) {
      while (j < s.size() && is_digit(s[j])) ++j;
      i = j;
    }
  }
  const std::string text(s.substr(begin, i - begin));
  out = std::strtod(text.c_str(), nullptr);
  if (i < s.size() && s[i] == '%') {
    out /= 100.0;
    ++i;
  }
  if (i < s.size() && is_alnum(s[i])) return std::string_view::npos;
  return i;
}

inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    const bool standalone = i == 0 || !is_alnum(s[i - 1]);
    if (standalone && c >= 'A' && c <= 'J') {
      // Option label: "A:", "A.", "A)", "A =", "**A**:".
      std::size_t j = i + 1;
      bool closed = false;
      while (j < s.size() && s[j] == '*') ++j;
      if (j < s.size() && s[j] == ')') {
        closed = true;
        ++j;
      }
      while (j < s.size() && s[j] == '*') ++j;
      while (j < s.size() && (s[j] == ' ' || s[j] == '\t')) ++j;
      bool sep = false;
      if (j < s.size() && (s[j] == ':' || s[j] == '=' || s[j] == ')' || (s[j] == '.' && !(j + 1 < s.size() && is_digit(s[j + 1]))))) {
        sep = true;
        ++j;
      }
      if ((sep || closed) && (j >= s.size() || !is_alnum(s[j]) || is_digit(s[j]) || is_space(s[j]))) {
        Token t;
        t.kind = TokenKind::Label;
        t.letter = static_cast<std::size_t>(c - 'A');
        out.push_back(t);
        i = j;
        continue;
      }
    }
    if (standalone && (is_digit(c) || ((c == '.' || c == '-' || c == '+') && i + 1 < s.size() && (is_digit(s[i + 1]) || s[i + 1] == '.')))) {
      double v = 0.0;
      const std::size_t end = scan_number(s, i, v);
      if (end != std::string_view::npos) {
        Token t;
        t.kind = TokenKind::Number;
        t.value = v;
        out.push_back(t);
        i = end;
        continue;
      }
      // Part of a longer word: skip it whole.
      while (i < s.size() && (is_alnum(s[i]) || s[i] == '.')) ++i;
      out.push_back({});
      continue;
    }
    if (c == '[') {
      out.push_back({TokenKind::LBracket});
    } else if (c == ']') {
      out.push_back({TokenKind::RBracket});
    } else if (c == ',') {
      out.push_back({TokenKind::Comma});
    } else if (is_alnum(c)) {
      while (i < s.size() && is_alnum(s[i])) ++i;
      out.push_back({});
      continue;
    } else {
      out.push_back({});
    }
    ++i;
  }
  return out;
}

// The last complete "A: v ... K: v" run or "[v, ..., v]" list with exactly
// `option_count` values.
inline std::optional<std::vector<double>> last_option_set(const std::vector<Token>& tokens, std::size_t option_count) {
  std::optional<std::vector<double>> best;
  std::vector<double> partial;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.kind == TokenKind::Label) {
      const bool has_value = i + 1 < tokens.size() && tokens[i + 1].kind == TokenKind::Number;
      if (!has_value) {
        partial.clear();
        continue;
      }
      if (t.letter == 0) {
        partial.assign(1, tokens[i + 1].value);
      } else if (!partial.empty() && t.letter == partial.size()) {
        partial.push_back(tokens[i + 1].value);
      } else {
        partial.clear();
      }
      if (partial.size() == option_count) {
        best = partial;
        partial.clear();
      }
      ++i;
    } else if (t.kind == TokenKind::LBracket) {
      std::vector<double> values;
      std::size_t j = i + 1;
      bool well_formed = false;
      while (j < tokens.size() && tokens[j].kind == TokenKind::Number) {
        values.push_back(tokens[j].value);
        ++j;
        if (j < tokens.size() && tokens[j].kind == TokenKind::Comma) {
          ++j;
          continue;
        }
        well_formed = j < tokens.size() && tokens[j].kind == TokenKind::RBracket;
        break;
      }
      if (well_formed && values.size() == option_count) {
        best = std::move(values);
        partial.clear();
        i = j;
      }
    }
  }
  return best;
}

inline bool any_number(const std::vector<Token>& tokens) {
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::Number) return true;
  }
  return false;
}

}  // namespace detail

// Extracts the last complete per-option probability list from a reply.
// Accepts values in [0,1] summing to within [0.99, 1.01], renormalized.
inline ParseResult<Distribution> parse_distribution(std::string_view raw, std::size_t option_count) {
  if (option_count < kMinOptions || option_count > kMaxOptions) {
    throw DimensionError("option count must be between 2 and 10");
  }
  const auto tokens = detail::tokenize(raw);
  const auto set = detail::last_option_set(tokens, option_count);
  if (!set) {
    if (!detail::any_number(tokens)) return ParseFailure{ParseFailureReason::NoNumbersFound, "no numbers in reply"};
    return ParseFailure{ParseFailureReason::MissingOptions,
                        "no complete set of " + std::to_string(option_count) + " option probabilities"};
  }
  double sum = 0.0;
  for (double v : *set) {
    if (!(v >= 0.0 && v <= 1.0)) {
      return ParseFailure{ParseFailureReason::OutOfRange, "value " + std::to_string(v) + " outside [0,1]"};
    }
    sum += v;
  }
  if (sum < kParsedSumLow || sum > kParsedSumHigh) {
    return ParseFailure{ParseFailureReason::BadSum, "probabilities sum to " + std::to_string(sum)};
  }
  return normalize(*set);
}

// The last standalone number in the reply, required to lie in [0,1].
inline ParseResult<double> parse_probability(std::string_view raw) {
  const auto tokens = detail::tokenize(raw);
  for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
    if (it->kind != detail::TokenKind::Number) continue;
    if (!(it->value >= 0.0 && it->value <= 1.0)) {
      return ParseFailure{ParseFailureReason::OutOfRange, "value " + std::to_string(it->value) + " outside [0,1]"};
    }
    return it->value;
  }
  return ParseFailure{ParseFailureReason::NoNumbersFound, "no numbers in reply"};
}

// Labeled per-option values ("A: v" ... ) without any sum constraint; used
// to read likelihood blocks back out of rendered prompts.
inline std::optional<std::vector<double>> parse_option_values(std::string_view text, std::size_t option_count) {
  return detail::last_option_set(detail::tokenize(text), option_count);
}

}  // namespace beliefaudit
