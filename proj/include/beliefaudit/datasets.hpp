#pragma once

// Evidence trajectories: the generic line-delimited JSON ingestion path and
// the self-contained Animals generator with its consistency-filter ground
// truth.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "beliefaudit/errors.hpp"
#include "beliefaudit/info.hpp"
#include "beliefaudit/random.hpp"
#include "beliefaudit/species_table.hpp"

namespace beliefaudit {

inline constexpr std::size_t kMinOptions = 2;
inline constexpr std::size_t kMaxOptions = 10;

struct EvidenceTrajectory {
  std::string id;
  std::string question;
  std::vector<std::string> options;
  std::size_t correct_index = 0;
  std::vector<std::string> evidence;
  std::optional<std::vector<std::string>> family_tags;
  // One distribution per evidence prefix length 0..n.
  std::optional<std::vector<Distribution>> ground_truth;

  std::size_t option_count() const { return options.size(); }
  std::size_t step_count() const { return evidence.size(); }
};

inline nlohmann::json to_json(const EvidenceTrajectory& t) {
  nlohmann::json j;
  j["id"] = t.id;
  j["question"] = t.question;
  j["options"] = t.options;
  j["correct_index"] = t.correct_index;
  j["evidence"] = t.evidence;
  if (t.family_tags) j["family_tags"] = *t.family_tags;
  if (t.ground_truth) {
    auto gt = nlohmann::json::array();
    for (const auto& d : *t.ground_truth) gt.push_back(d.values());
    j["ground_truth"] = std::move(gt);
  }
  return j;
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, std::size_t index, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw IngestError(index, field, "missing");
  return *it;
}

inline std::vector<std::string> nonempty_strings(const nlohmann::json& j, std::size_t index, const char* field) {
  if (!j.is_array()) throw IngestError(index, field, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& item : j) {
    if (!item.is_string() || item.get_ref<const std::string&>().empty()) {
      throw IngestError(index, field, "expected non-empty strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace detail

// Validates one decoded record. `index` is the 0-based record position used
// in error messages.
inline EvidenceTrajectory trajectory_from_json(const nlohmann::json& j, std::size_t index) {
  static const std::set<std::string> known = {"id",       "question",    "options",     "correct_index",
                                              "evidence", "family_tags", "ground_truth"};
  if (!j.is_object()) throw IngestError(index, "<record>", "expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw IngestError(index, key, "unknown field");
  }
  EvidenceTrajectory t;
  const auto& id = detail::require_field(j, index, "id");
  if (!id.is_string() || id.get_ref<const std::string&>().empty()) {
    throw IngestError(index, "id", "expected a non-empty string");
  }
  t.id = id.get<std::string>();
  const auto& question = detail::require_field(j, index, "question");
  if (!question.is_string()) throw IngestError(index, "question", "expected a string");
  t.question = question.get<std::string>();

  t.options = detail::nonempty_strings(detail::require_field(j, index, "options"), index, "options");
  if (t.options.size() < kMinOptions || t.options.size() > kMaxOptions) {
    throw IngestError(index, "options", "expected 2 to 10 options, got " + std::to_string(t.options.size()));
  }
  const auto& correct = detail::require_field(j, index, "correct_index");
  if (!correct.is_number_integer() || correct.get<long long>() < 0 ||
      static_cast<std::size_t>(correct.get<long long>()) >= t.options.size()) {
    throw IngestError(index, "correct_index", "out of range");
  }
  t.correct_index = correct.get<std::size_t>();

  t.evidence = detail::nonempty_strings(detail::require_field(j, index, "evidence"), index, "evidence");
  if (t.evidence.empty()) throw IngestError(index, "evidence", "expected at least one evidence item");

  if (auto it = j.find("family_tags"); it != j.end() && !it->is_null()) {
    auto tags = detail::nonempty_strings(*it, index, "family_tags");
    if (tags.size() != t.options.size()) throw IngestError(index, "family_tags", "expected one tag per option");
    t.family_tags = std::move(tags);
  }
  if (auto it = j.find("ground_truth"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != t.evidence.size() + 1) {
      throw IngestError(index, "ground_truth", "expected one distribution per prefix length 0..n");
    }
    std::vector<Distribution> gt;
    for (const auto& row : *it) {
      if (!row.is_array() || row.size() != t.options.size()) {
        throw IngestError(index, "ground_truth", "expected one probability per option");
      }
      std::vector<double> mass;
      for (const auto& v : row) {
        if (!v.is_number()) throw IngestError(index, "ground_truth", "expected numbers");
        mass.push_back(v.get<double>());
      }
      try {
        gt.push_back(Distribution::from_normalized(std::move(mass)));
      } catch (const NormalizationError& e) {
        throw IngestError(index, "ground_truth", e.what());
      }
    }
    t.ground_truth = std::move(gt);
  }
  return t;
}

// One trajectory per non-blank line; duplicate ids are rejected.
inline std::vector<EvidenceTrajectory> load_trajectories(std::istream& in) {
  std::vector<EvidenceTrajectory> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw IngestError(index, "<record>", std::string("malformed JSON: ") + e.what());
    }
    auto t = trajectory_from_json(j, index);
    if (!seen.insert(t.id).second) throw IngestError(index, "id", "duplicate id '" + t.id + "'");
    out.push_back(std::move(t));
    ++index;
  }
  return out;
}

inline void write_trajectories(std::ostream& out, const std::vector<EvidenceTrajectory>& trajectories) {
  for (const auto& t : trajectories) out << to_json(t).dump() << '\n';
}

// Quotes a CSV field when it contains a separator, quote or newline.
inline std::string csv_field(std::string_view v) {
  if (v.find_first_of(",\"\n") == std::string_view::npos) return std::string(v);
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace animals {

inline const SpeciesRecord& find_species(std::string_view name) {
  for (const auto& s : kSpecies) {
    if (s.name == name) return s;
  }
  throw DatasetError("unknown species: " + std::string(name));
}

inline std::size_t attribute_index(std::string_view attribute) {
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    if (kAttributeNames[i] == attribute) return i;
  }
  throw DatasetError("unknown attribute: " + std::string(attribute));
}

struct AttributeValue {
  std::size_t attribute = 0;
  std::string value;

  friend bool operator==(const AttributeValue&, const AttributeValue&) = default;
};

inline std::string format_evidence(const AttributeValue& a) {
  return std::string(kAttributeNames[a.attribute]) + ": " + a.value;
}

// Inverse of format_evidence ("<attribute>: <value>").
inline AttributeValue parse_evidence(std::string_view item) {
  const auto colon = item.find(": ");
  if (colon == std::string_view::npos) throw DatasetError("not an attribute revelation: " + std::string(item));
  return {attribute_index(item.substr(0, colon)), std::string(item.substr(colon + 2))};
}

// Absent species values are consistent with anything.
inline bool is_consistent(const SpeciesRecord& s, const AttributeValue& a) {
  const auto& v = s.attributes[a.attribute];
  return !v || *v == a.value;
}

struct GroundTruth {
  Distribution posterior;
  bool degenerate = false;  // no option was consistent; posterior is uniform
};

// Uniform over the options consistent with every revealed attribute.
inline GroundTruth ground_truth_posterior(const std::vector<std::string>& options,
                                          const std::vector<AttributeValue>& revealed) {
  std::vector<double> mass(options.size(), 0.0);
  for (std::size_t i = 0; i < options.size(); ++i) {
    const auto& species = find_species(options[i]);
    const bool ok = std::all_of(revealed.begin(), revealed.end(),
                                [&](const AttributeValue& a) { return is_consistent(species, a); });
    mass[i] = ok ? 1.0 : 0.0;
  }
  const bool any = std::any_of(mass.begin(), mass.end(), [](double m) { return m > 0.0; });
  if (!any) return {Distribution::uniform(options.size()), true};
  return {normalize(mass), false};
}

inline std::vector<AttributeValue> present_attributes(const SpeciesRecord& s) {
  std::vector<AttributeValue> out;
  for (std::size_t a = 0; a < kAttributeCount; ++a) {
    if (s.attributes[a]) out.push_back({a, std::string(*s.attributes[a])});
  }
  return out;
}

// True when some attribute the target reveals rules `other` out.
inline bool distinguishable_from(const SpeciesRecord& target, const SpeciesRecord& other) {
  const auto attrs = present_attributes(target);
  return std::any_of(attrs.begin(), attrs.end(), [&](const AttributeValue& a) { return !is_consistent(other, a); });
}

inline constexpr std::size_t kDefaultQuestionCount = 500;
inline constexpr std::size_t kOptionsPerQuestion = 4;
inline constexpr std::string_view kQuestionText = "Which animal is described by these attributes?";

inline std::string question_id(std::size_t i) {
  std::string digits = std::to_string(i + 1);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "animals-" + digits;
}

// Each question: one target, one same-family distractor, two more
// distractors from anywhere; options shuffled; evidence is the target's
// present attributes in a shuffled order. Distractors that agree with every
// target attribute are never drawn.
inline std::vector<EvidenceTrajectory> build_animals(std::uint64_t seed,
                                                     std::size_t question_count = kDefaultQuestionCount) {
  if (question_count == 0) throw DatasetError("question_count must be positive");
  Rng rng(seed);
  std::vector<EvidenceTrajectory> out;
  out.reserve(question_count);
  for (std::size_t q = 0; q < question_count; ++q) {
    const std::size_t target = uniform_index(rng, kSpeciesCount);
    const auto& target_rec = kSpecies[target];

    std::vector<std::size_t> family_pool;
    std::vector<std::size_t> other_pool;
    for (std::size_t s = 0; s < kSpeciesCount; ++s) {
      if (s == target || !distinguishable_from(target_rec, kSpecies[s])) continue;
      (kSpecies[s].family == target_rec.family ? family_pool : other_pool).push_back(s);
    }
    if (family_pool.empty()) throw DatasetError("no same-family distractor for " + std::string(target_rec.name));

    std::vector<std::size_t> chosen = {target};
    const std::size_t family_pick = family_pool[uniform_index(rng, family_pool.size())];
    chosen.push_back(family_pick);
    // Remaining distractors may also come from the target's family.
    std::vector<std::size_t> pool = other_pool;
    for (std::size_t s : family_pool) {
      if (s != family_pick) pool.push_back(s);
    }
    std::sort(pool.begin(), pool.end());
    while (chosen.size() < kOptionsPerQuestion) {
      const std::size_t k = uniform_index(rng, pool.size());
      chosen.push_back(pool[k]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
    }
    shuffle_in_place(std::span<std::size_t>(chosen), rng);

    auto evidence = present_attributes(target_rec);
    shuffle_in_place(std::span<AttributeValue>(evidence), rng);

    EvidenceTrajectory t;
    t.id = question_id(q);
    t.question = std::string(kQuestionText);
    std::vector<std::string> tags;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      t.options.emplace_back(kSpecies[chosen[i]].name);
      tags.emplace_back(kSpecies[chosen[i]].family);
      if (chosen[i] == target) t.correct_index = i;
    }
    t.family_tags = std::move(tags);
    std::vector<Distribution> gt;
    std::vector<AttributeValue> revealed;
    gt.push_back(ground_truth_posterior(t.options, revealed).posterior);
    for (const auto& a : evidence) {
      t.evidence.push_back(format_evidence(a));
      revealed.push_back(a);
      gt.push_back(ground_truth_posterior(t.options, revealed).posterior);
    }
    t.ground_truth = std::move(gt);
    out.push_back(std::move(t));
  }
  return out;
}


// Species table as CSV in table column order; absent values as "--".
inline void export_species_csv(std::ostream& out) {
  for (std::size_t i = 0; i < kCsvHeader.size(); ++i) out << (i ? "," : "") << csv_field(kCsvHeader[i]);
  out << '\n';
  for (const auto& s : kSpecies) {
    out << csv_field(s.name);
    for (const auto& v : s.attributes) out << ',' << csv_field(v ? *v : "--");
    out << '\n';
  }
}

inline void export_family_map_csv(std::ostream& out) {
  out << "Species,Family\n";
  for (const auto& s : kSpecies) out << csv_field(s.name) << ',' << s.family << '\n';
}

}  // namespace animals
}  // namespace beliefaudit
