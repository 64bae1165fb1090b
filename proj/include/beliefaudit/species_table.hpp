#pragma once

// Embedded Animals species table: 50 species, 11 categorical attributes,
// and the family grouping used for same-family distractors. An absent value
// is std::nullopt (rendered as "--").

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace beliefaudit::animals {

inline constexpr std::size_t kAttributeCount = 11;

inline constexpr std::array<std::string_view, kAttributeCount> kAttributeNames = {
    "color",  "food",    "habitat",          "locomotion", "reproduces", "active",
    "exterior", "pattern", "social structure", "size",       "extremities"};

// Column headers in table order, species column first.
inline constexpr std::array<std::string_view, kAttributeCount + 1> kCsvHeader = {
    "Species", "Color",   "Food",    "Habitat",          "Locomotion", "Reproduces",
    "Active",  "Exterior", "Pattern", "Social structure", "Size",       "Extremities"};

struct SpeciesRecord {
  std::string_view name;
  std::string_view family;
  std::array<std::optional<std::string_view>, kAttributeCount> attributes;
};

inline constexpr std::size_t kSpeciesCount = 50;

inline constexpr std::array<SpeciesRecord, kSpeciesCount> kSpecies = {{
    {"Lion", "big_cats", {"brown", "vertebrate", "grassland", "terrestrial", "live birth", "nocturnal", "fur", "solid", "pack", "large", "paws"}},
    {"Tiger", "big_cats", {"orange", "vertebrate", "forest", "terrestrial", "live birth", "nocturnal", "fur", "striped", "solitary", "large", "paws"}},
    {"Cheetah", "big_cats", {"yellow", "vertebrate", "grassland", "terrestrial", "live birth", "diurnal", "fur", "spotted", "solitary", "large", "legs"}},
    {"Cougar", "big_cats", {"brown", "vertebrate", "forest", "terrestrial", "live birth", "crepuscular", "fur", "solid", "solitary", "large", "paws"}},
    {"Canada Lynx", "big_cats", {"gray", "vertebrate", "forest", "terrestrial", "live birth", "nocturnal", "fur", "marked", std::nullopt, "medium", "paws"}},
    {"Polar Bear", "bears", {"white", "vertebrate", "arctic", "amphibious", "live birth", "cathemeral", "fur", "solid", "solitary", "huge", "paws"}},
    {"Grizzly Bear", "bears", {"brown", "vertebrate", "forest", "terrestrial", "live birth", "diurnal", "fur", "mottled", "solitary", "large", "paws"}},
    {"American Black Bear", "bears", {"black", "plant", "forest", "terrestrial", "live birth", "crepuscular", "fur", "solid", "solitary", "large", "paws"}},
    {"Sun Bear", "bears", {"black", "invertebrate", "forest", "terrestrial", "live birth", "diurnal", "fur", "marked", "solitary", "medium", "paws"}},
    {"Sloth Bear", "bears", {"black", "invertebrate", "forest", "terrestrial", "live birth", "nocturnal", "fur", "marked", "solitary", "large", "paws"}},
    {"Gray Wolf", "canids", {"gray", "vertebrate", "forest", "terrestrial", "live birth", "crepuscular", "fur", "mottled", "pack", "large", "paws"}},
    {"Red Fox", "canids", {"red", "vertebrate", "forest", "terrestrial", "live birth", "nocturnal", "fur", "marked", "solitary", "small", "paws"}},
    {"Coyote", "canids", {"gray", "vertebrate", "grassland", "terrestrial", "live birth", "nocturnal", "fur", "mottled", "pack", "medium", "paws"}},
    {"Arctic Fox", "canids", {"white", "vertebrate", "arctic", "terrestrial", "live birth", "cathemeral", "fur", "solid", "pair", "small", "paws"}},
    {"Fennec Fox", "canids", {"yellow", "invertebrate", "desert", "terrestrial", "live birth", "nocturnal", "fur", "solid", "pack", "small", "paws"}},
    {"Western Gorilla", "primates", {"black", "fruit", "forest", "terrestrial", "live birth", "diurnal", "fur", "solid", "troop", "large", "hands"}},
    {"Common Chimpanzee", "primates", {"black", "fruit", "forest", "terrestrial", "live birth", "diurnal", "fur", "solid", "troop", "large", "hands"}},
    {"Bornean Orangutan", "primates", {"orange", "fruit", "forest", "terrestrial", "live birth", "diurnal", "fur", "solid", "solitary", "large", "hands"}},
    {"Olive Baboon", "primates", {"gray", "plant", "grassland", "terrestrial", "live birth", "diurnal", "fur", "mottled", "troop", "medium", "hands"}},
    {"Japanese Macaque", "primates", {"brown", "plant", "forest", "terrestrial", "live birth", "diurnal", "fur", "solid", "troop", "medium", "hands"}},
    {"Blue Whale", "cetaceans", {"blue", "invertebrate", "ocean", "aquatic", "live birth", "cathemeral", "skin", "mottled", "solitary", "huge", "flippers"}},
    {"Sperm Whale", "cetaceans", {"gray", "invertebrate", "ocean", "aquatic", "live birth", "cathemeral", "skin", "solid", "pod", "huge", "flippers"}},
    {"Common Bottlenose Dolphin", "cetaceans", {"gray", "vertebrate", "ocean", "aquatic", "live birth", "cathemeral", "skin", "countershading", "pod", "large", "flippers"}},
    {"Beluga Whale", "cetaceans", {"white", "vertebrate", "arctic", "aquatic", "live birth", "cathemeral", "skin", "solid", "pod", "large", "flippers"}},
    {"Narwhal", "cetaceans", {"gray", "vertebrate", "arctic", "aquatic", "live birth", "cathemeral", "skin", "mottled", "pod", "large", "flippers"}},
    {"Walrus", "pinnipeds", {"brown", "invertebrate", "arctic", "amphibious", "live birth", "cathemeral", "skin", "solid", "colony", "huge", "flippers"}},
    {"California Sea Lion", "pinnipeds", {"brown", "vertebrate", "ocean", "amphibious", "live birth", "cathemeral", "fur", "solid", "colony", "large", "flippers"}},
    {"Leopard Seal", "pinnipeds", {"gray", "vertebrate", "ocean", "amphibious", "live birth", "diurnal", "fur", "spotted", "solitary", "large", "flippers"}},
    {"Northern Elephant Seal", "pinnipeds", {"brown", "invertebrate", "ocean", "amphibious", "live birth", "cathemeral", "fur", "solid", "colony", "huge", "flippers"}},
    {"Harbor Seal", "pinnipeds", {"gray", "vertebrate", "ocean", "amphibious", "live birth", "cathemeral", "fur", "spotted", "colony", "medium", "flippers"}},
    {"King Cobra", "snakes", {"brown", "vertebrate", "forest", "slithering", "lays eggs", "diurnal", "scales", "striped", "solitary", "large", "none"}},
    {"Green Anaconda", "snakes", {"green", "vertebrate", "freshwater", "amphibious", "live birth", "nocturnal", "scales", "spotted", "solitary", "huge", "none"}},
    {"Boa Constrictor", "snakes", {"brown", "vertebrate", "forest", "slithering", "live birth", "nocturnal", "scales", "geometric", "solitary", "large", "none"}},
    {"Western Diamondback Rattlesnake", "snakes", {"brown", "vertebrate", "desert", "slithering", "live birth", "nocturnal", "scales", "geometric", "solitary", "medium", "none"}},
    {"Burmese Python", "snakes", {"brown", "vertebrate", "forest", "slithering", "lays eggs", "nocturnal", "scales", "mottled", "solitary", "huge", "none"}},
    {"Great White Shark", "sharks", {"gray", "vertebrate", "ocean", "aquatic", "live birth", "diurnal", "scales", "countershading", "solitary", "huge", "fins"}},
    {"Whale Shark", "sharks", {"gray", "invertebrate", "ocean", "aquatic", "live birth", "cathemeral", "skin", "spotted", "solitary", "huge", "fins"}},
    {"Great Hammerhead Shark", "sharks", {"gray", "vertebrate", "ocean", "aquatic", "live birth", "cathemeral", "scales", "countershading", "solitary", "large", "fins"}},
    {"Tiger Shark", "sharks", {"gray", "vertebrate", "ocean", "aquatic", "live birth", "nocturnal", "scales", "striped", "solitary", "large", "fins"}},
    {"Bull Shark", "sharks", {"gray", "vertebrate", "ocean", "aquatic", "live birth", "cathemeral", "scales", "countershading", "solitary", "large", "fins"}},
    {"Black Widow Spider", "arachnids", {"black", "invertebrate", "forest", "terrestrial", "lays eggs", "nocturnal", "exoskeleton", "marked", "solitary", "small", "legs"}},
    {"Emperor Scorpion", "arachnids", {"black", "invertebrate", "forest", "terrestrial", "live birth", "nocturnal", "exoskeleton", "solid", "colony", "small", "legs"}},
    {"Brown Recluse Spider", "arachnids", {"brown", "invertebrate", "forest", "terrestrial", "lays eggs", "nocturnal", "exoskeleton", "marked", "solitary", "small", "legs"}},
    {"Goliath Birdeater", "arachnids", {"brown", "invertebrate", "forest", "terrestrial", "lays eggs", "nocturnal", "exoskeleton", "solid", "solitary", "large", "legs"}},
    {"European Garden Spider", "arachnids", {"brown", "invertebrate", "forest", "terrestrial", "lays eggs", "nocturnal", "exoskeleton", "geometric", "solitary", "small", "legs"}},
    {"Mute Swan", "birds", {"white", "plant", "freshwater", "amphibious", "lays eggs", "diurnal", "feathers", "solid", "pair", "large", "wings"}},
    {"American Crow", "birds", {"black", "invertebrate", "forest", "aerial", "lays eggs", "diurnal", "feathers", "solid", "flock", "medium", "wings"}},
    {"Golden Eagle", "birds", {"brown", "vertebrate", "forest", "aerial", "lays eggs", "diurnal", "feathers", "solid", "pair", "large", "wings"}},
    {"Greater Flamingo", "birds", {"pink", "invertebrate", "freshwater", "aerial", "lays eggs", "diurnal", "feathers", "solid", "colony", "large", "wings"}},
    {"Emu", "birds", {"brown", "plant", "grassland", "terrestrial", "lays eggs", "diurnal", "feathers", "solid", "flock", "large", "legs"}},}};

}  // namespace beliefaudit::animals
