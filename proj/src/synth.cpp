#include "canguard/synth.hpp"

#include <fstream>
#include <numeric>

#include "canguard/error.hpp"
#include "canguard/rng.hpp"

namespace canguard {
namespace {

using Payload = std::array<std::uint8_t, kPayloadBytes>;

Payload fixed_spoof_pattern(SpecificClass c) {
  switch (c) {
    case SpecificClass::kGas: return {0, 0, 255, 0, 0, 0, 0, 0};
    case SpecificClass::kRpm: return {255, 255, 0, 0, 0, 0, 0, 0};
    case SpecificClass::kSpeed: return {0, 0, 0, 0, 0, 0, 255, 255};
    case SpecificClass::kSteeringWheel: return {255, 0, 255, 0, 255, 0, 255, 0};
    default: return {};
  }
}

Payload template_payload(SpecificClass c, std::uint16_t id, std::size_t t, std::uint64_t seed) {
  if (t == 0 && c == SpecificClass::kDos) return Payload{};
  if (t == 0 && category_of(c) == Category::kSpoofing) return fixed_spoof_pattern(c);
  Rng rng(derive_seed(seed, (static_cast<std::uint64_t>(c) << 40) ^ (std::uint64_t{id} << 20) ^ t));
  Payload p{};
  // Benign-looking frames: a few active leading bytes, zero tail.
  const std::size_t active = 2 + rng.index(kPayloadBytes - 1);
  for (std::size_t b = 0; b < active; ++b) p[b] = static_cast<std::uint8_t>(rng.index(256));
  return p;
}

std::size_t pick_weighted(Rng& rng, const std::vector<IdWeight>& pool, double total_weight) {
  double u = rng.uniform() * total_weight;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    u -= pool[i].weight;
    if (u < 0.0) return i;
  }
  return pool.size() - 1;
}

std::vector<IdWeight> uniform_pool(std::initializer_list<std::uint16_t> ids) {
  std::vector<IdWeight> pool;
  for (auto id : ids) pool.push_back({id, 1.0});
  return pool;
}

}  // namespace

std::size_t SynthConfig::total() const {
  std::size_t n = 0;
  for (const auto& c : classes) n += c.count;
  return n;
}

SynthConfig SynthConfig::defaults() {
  SynthConfig cfg;
  auto& benign = cfg[SpecificClass::kBenign];
  benign.count = 12237;
  benign.ids = {{535, 8.0}, {516, 7.0}, {359, 6.0}};
  for (std::uint16_t id : {65, 117, 131, 166, 200, 260, 300, 357, 400, 452, 545, 578, 580, 608, 672,
                           704, 770, 790, 809, 848, 880, 936, 996, 1024, 1068, 1072, 1200, 1349, 1438})
    benign.ids.push_back({id, 1.0});
  benign.templates = 4;
  benign.noise = 0.02;

  auto& dos = cfg[SpecificClass::kDos];
  dos.count = 747;
  dos.ids = uniform_pool({291});
  dos.noise = 0.03;

  const std::array<std::pair<SpecificClass, std::size_t>, 4> spoof = {{
      {SpecificClass::kGas, 100},
      {SpecificClass::kRpm, 549},
      {SpecificClass::kSpeed, 250},
      {SpecificClass::kSteeringWheel, 200},
  }};
  const std::array<std::uint16_t, 4> spoof_ids = {513, 476, 128, 344};
  for (std::size_t i = 0; i < spoof.size(); ++i) {
    auto& c = cfg[spoof[i].first];
    c.count = spoof[i].second;
    c.ids = {{spoof_ids[i], 1.0}};
    c.noise = 0.05;
  }
  return cfg;
}

SynthConfig SynthConfig::from_json(const nlohmann::json& doc) {
  SynthConfig cfg = defaults();
  try {
    if (!doc.is_object()) throw ConfigError("synth config must be a JSON object");
    if (!doc.contains("classes")) return cfg;
    for (const auto& [name, body] : doc.at("classes").items()) {
      const auto cls = parse_specific_class(name);
      if (!cls) throw ConfigError("synth config: unknown class '" + name + "'");
      auto& c = cfg[*cls];
      if (body.contains("count")) c.count = body.at("count").get<std::size_t>();
      if (body.contains("templates")) c.templates = body.at("templates").get<std::size_t>();
      if (body.contains("noise")) c.noise = body.at("noise").get<double>();
      if (body.contains("ids")) {
        c.ids.clear();
        for (const auto& entry : body.at("ids")) {
          if (entry.is_array()) c.ids.push_back({entry.at(0).get<std::uint16_t>(), entry.at(1).get<double>()});
          else c.ids.push_back({entry.get<std::uint16_t>(), 1.0});
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  return cfg;
}

SynthConfig SynthConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open synth config " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("synth config " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json SynthConfig::to_json() const {
  nlohmann::json classes_doc = nlohmann::json::object();
  for (SpecificClass cls : kAllSpecificClasses) {
    const auto& c = (*this)[cls];
    nlohmann::json ids = nlohmann::json::array();
    for (const auto& w : c.ids) ids.push_back({w.id, w.weight});
    classes_doc[std::string(to_string(cls))] = {
        {"count", c.count}, {"ids", ids}, {"templates", c.templates}, {"noise", c.noise}};
  }
  return {{"classes", classes_doc}};
}

RecordTable generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  for (SpecificClass cls : kAllSpecificClasses) {
    const auto& c = config[cls];
    if (c.count == 0) continue;
    const std::string name(to_string(cls));
    if (c.ids.empty()) throw ConfigError("synth config: empty id pool for " + name);
    if (c.templates == 0) throw ConfigError("synth config: zero payload templates for " + name);
    if (!(c.noise >= 0.0 && c.noise <= 1.0)) throw ConfigError("synth config: noise outside [0, 1] for " + name);
    double w = 0.0;
    for (const auto& id : c.ids) {
      if (id.id > kMaxCanId) throw ConfigError("synth config: id " + std::to_string(id.id) + " exceeds 2047");
      if (!(id.weight >= 0.0)) throw ConfigError("synth config: negative id weight for " + name);
      w += id.weight;
    }
    if (!(w > 0.0)) throw ConfigError("synth config: id weights sum to zero for " + name);
  }

  std::vector<CanFrameRecord> records;
  records.reserve(config.total());
  for (SpecificClass cls : kAllSpecificClasses) {
    const auto& c = config[cls];
    if (c.count == 0) continue;
    const double total_weight = std::accumulate(c.ids.begin(), c.ids.end(), 0.0,
                                                [](double s, const IdWeight& w) { return s + w.weight; });
    Rng rng(derive_seed(seed, 0x5e000 + static_cast<std::uint64_t>(cls)));
    for (std::size_t i = 0; i < c.count; ++i) {
      const std::uint16_t id = c.ids[pick_weighted(rng, c.ids, total_weight)].id;
      const std::size_t t = static_cast<std::size_t>(rng.index(c.templates));
      Payload p = template_payload(cls, id, t, seed);
      if (rng.uniform() < c.noise) {
        const std::size_t b = static_cast<std::size_t>(rng.index(kPayloadBytes));
        p[b] = static_cast<std::uint8_t>(rng.index(256));
      }
      records.push_back(make_record(id, p, cls));
    }
  }
  return RecordTable(std::move(records), "SYNTH");
}

}  // namespace canguard
