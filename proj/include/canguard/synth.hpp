#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "canguard/record.hpp"

namespace canguard {

struct IdWeight {
  std::uint16_t id = 0;
  double weight = 1.0;
};

struct ClassSynthConfig {
  std::size_t count = 0;
  std::vector<IdWeight> ids;
  /// Distinct payload templates per arbitration id. Template 0 of DOS is all
  /// zero bytes and template 0 of each spoofed signal is a fixed pattern.
  std::size_t templates = 1;
  /// Probability that a record has one random byte overwritten.
  double noise = 0.0;
};

/// Per-class generator settings, indexed by SpecificClass.
struct SynthConfig {
  std::array<ClassSynthConfig, kNumSpecificClasses> classes;

  ClassSynthConfig& operator[](SpecificClass c) { return classes[static_cast<std::size_t>(c)]; }
  const ClassSynthConfig& operator[](SpecificClass c) const {
    return classes[static_cast<std::size_t>(c)];
  }

  std::size_t total() const;

  /// Roughly 1% of the CICIoV2024 class sizes with the observed ID signatures.
  static SynthConfig defaults();
  /// Overlays a JSON document onto defaults(); see README for the schema.
  static SynthConfig from_json(const nlohmann::json& doc);
  static SynthConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

RecordTable generate_synthetic(const SynthConfig& config, std::uint64_t seed);

}  // namespace canguard
