#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace canguard {

enum class Label : std::uint8_t { kBenign, kAttack };
enum class Category : std::uint8_t { kBenign, kDos, kSpoofing };
enum class SpecificClass : std::uint8_t { kBenign, kDos, kGas, kRpm, kSpeed, kSteeringWheel };

inline constexpr std::size_t kNumCategories = 3;
inline constexpr std::size_t kNumSpecificClasses = 6;
inline constexpr std::size_t kPayloadBytes = 8;
inline constexpr std::uint16_t kMaxCanId = 2047;

inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::kBenign, Category::kDos, Category::kSpoofing};
inline constexpr std::array<SpecificClass, kNumSpecificClasses> kAllSpecificClasses = {
    SpecificClass::kBenign, SpecificClass::kDos,   SpecificClass::kGas,
    SpecificClass::kRpm,    SpecificClass::kSpeed, SpecificClass::kSteeringWheel};

std::string_view to_string(Label v);
std::string_view to_string(Category v);
std::string_view to_string(SpecificClass v);

// Accept already-normalized (trimmed, uppercase) names only.
std::optional<Label> parse_label(std::string_view s);
std::optional<Category> parse_category(std::string_view s);
std::optional<SpecificClass> parse_specific_class(std::string_view s);

/// The unique category implied by a specific class.
Category category_of(SpecificClass c);
Label label_of(Category c);

/// category = BENIGN <=> label = BENIGN <=> specific = BENIGN, DOS => DOS,
/// SPOOFING => one of the four spoofed signals.
bool taxonomy_consistent(Label label, Category category, SpecificClass specific);

struct CanFrameRecord {
  std::uint16_t id = 0;
  std::array<std::uint8_t, kPayloadBytes> data{};
  Label label = Label::kBenign;
  Category category = Category::kBenign;
  SpecificClass specific_class = SpecificClass::kBenign;

  friend auto operator<=>(const CanFrameRecord&, const CanFrameRecord&) = default;
  friend bool operator==(const CanFrameRecord&, const CanFrameRecord&) = default;

  int payload_sum() const;
};

/// Builds a record whose label and category follow from the specific class.
CanFrameRecord make_record(std::uint16_t id, const std::array<std::uint8_t, kPayloadBytes>& data,
                           SpecificClass specific);

struct CanFrameRecordHash {
  std::size_t operator()(const CanFrameRecord& r) const noexcept;
};

/// Ordered records plus the origin of each one (input file stem or "SYNTH").
class RecordTable {
 public:
  RecordTable() = default;
  RecordTable(std::vector<CanFrameRecord> records, std::vector<std::string> source_tags);
  RecordTable(std::vector<CanFrameRecord> records, const std::string& source_tag);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const std::vector<CanFrameRecord>& records() const { return records_; }
  const std::vector<std::string>& source_tags() const { return source_tags_; }
  const CanFrameRecord& operator[](std::size_t i) const { return records_[i]; }

  void push_back(const CanFrameRecord& record, std::string source_tag);

  /// Rows at the given indices, in the given order.
  RecordTable subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const RecordTable&, const RecordTable&) = default;

 private:
  std::vector<CanFrameRecord> records_;
  std::vector<std::string> source_tags_;
};

}  // namespace canguard
