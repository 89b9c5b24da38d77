#include "canguard/record.hpp"

#include <numeric>

#include "canguard/error.hpp"

namespace canguard {

std::string_view to_string(Label v) {
  return v == Label::kBenign ? "BENIGN" : "ATTACK";
}

std::string_view to_string(Category v) {
  switch (v) {
    case Category::kBenign: return "BENIGN";
    case Category::kDos: return "DOS";
    case Category::kSpoofing: return "SPOOFING";
  }
  return "?";
}

std::string_view to_string(SpecificClass v) {
  switch (v) {
    case SpecificClass::kBenign: return "BENIGN";
    case SpecificClass::kDos: return "DOS";
    case SpecificClass::kGas: return "GAS";
    case SpecificClass::kRpm: return "RPM";
    case SpecificClass::kSpeed: return "SPEED";
    case SpecificClass::kSteeringWheel: return "STEERING_WHEEL";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view s) {
  if (s == "BENIGN") return Label::kBenign;
  if (s == "ATTACK") return Label::kAttack;
  return std::nullopt;
}

std::optional<Category> parse_category(std::string_view s) {
  for (Category c : kAllCategories)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

std::optional<SpecificClass> parse_specific_class(std::string_view s) {
  for (SpecificClass c : kAllSpecificClasses)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

Category category_of(SpecificClass c) {
  switch (c) {
    case SpecificClass::kBenign: return Category::kBenign;
    case SpecificClass::kDos: return Category::kDos;
    default: return Category::kSpoofing;
  }
}

Label label_of(Category c) {
  return c == Category::kBenign ? Label::kBenign : Label::kAttack;
}

bool taxonomy_consistent(Label label, Category category, SpecificClass specific) {
  return category_of(specific) == category && label_of(category) == label;
}

int CanFrameRecord::payload_sum() const {
  return std::accumulate(data.begin(), data.end(), 0);
}

CanFrameRecord make_record(std::uint16_t id, const std::array<std::uint8_t, kPayloadBytes>& data,
                           SpecificClass specific) {
  CanFrameRecord r;
  r.id = id;
  r.data = data;
  r.specific_class = specific;
  r.category = category_of(specific);
  r.label = label_of(r.category);
  return r;
}

std::size_t CanFrameRecordHash::operator()(const CanFrameRecord& r) const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  feed(r.id);
  for (auto b : r.data) feed(b);
  feed(static_cast<std::uint64_t>(r.label));
  feed(static_cast<std::uint64_t>(r.category));
  feed(static_cast<std::uint64_t>(r.specific_class));
  return static_cast<std::size_t>(h);
}

RecordTable::RecordTable(std::vector<CanFrameRecord> records, std::vector<std::string> source_tags)
    : records_(std::move(records)), source_tags_(std::move(source_tags)) {
  if (records_.size() != source_tags_.size())
    throw ShapeError("record table: " + std::to_string(records_.size()) + " records but " +
                     std::to_string(source_tags_.size()) + " source tags");
}

RecordTable::RecordTable(std::vector<CanFrameRecord> records, const std::string& source_tag)
    : records_(std::move(records)), source_tags_(records_.size(), source_tag) {}

void RecordTable::push_back(const CanFrameRecord& record, std::string source_tag) {
  records_.push_back(record);
  source_tags_.push_back(std::move(source_tag));
}

RecordTable RecordTable::subset(std::span<const std::size_t> indices) const {
  std::vector<CanFrameRecord> recs;
  std::vector<std::string> tags;
  recs.reserve(indices.size());
  tags.reserve(indices.size());
  for (std::size_t i : indices) {
    recs.push_back(records_.at(i));
    tags.push_back(source_tags_.at(i));
  }
  return RecordTable(std::move(recs), std::move(tags));
}

}  // namespace canguard
