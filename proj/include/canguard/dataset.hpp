#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "canguard/record.hpp"

namespace canguard {

inline constexpr std::size_t kNumColumns = 12;
inline constexpr std::size_t kNumNumericColumns = 9;  // ID, DATA_0..DATA_7
inline constexpr std::size_t kNumTextColumns = 3;     // label, category, specific_class

inline constexpr std::array<std::string_view, kNumColumns> kColumnNames = {
    "ID",     "DATA_0", "DATA_1", "DATA_2", "DATA_3",   "DATA_4",
    "DATA_5", "DATA_6", "DATA_7", "label",  "category", "specific_class"};

/// File names of the six CICIoV2024 decimal captures, in merge order.
inline constexpr std::array<std::string_view, 6> kCanonicalFiles = {
    "decimal_benign.csv",          "decimal_DoS.csv",
    "decimal_spoofing-GAS.csv",    "decimal_spoofing-RPM.csv",
    "decimal_spoofing-SPEED.csv",  "decimal_spoofing-STEERING_WHEEL.csv"};

inline constexpr std::array<SpecificClass, 6> kCanonicalFileClasses = {
    SpecificClass::kBenign, SpecificClass::kDos,   SpecificClass::kGas,
    SpecificClass::kRpm,    SpecificClass::kSpeed, SpecificClass::kSteeringWheel};

inline constexpr const char* kDataDirEnv = "CANGUARD_DATA_DIR";

// ---------------------------------------------------------------------------
// Text stage: cells as they arrived on disk, before typing.
// ---------------------------------------------------------------------------

enum class CellState : std::uint8_t { kPresent, kMissing, kInvalid };

struct NumericCell {
  std::int32_t value = 0;
  CellState state = CellState::kPresent;
  friend bool operator==(const NumericCell&, const NumericCell&) = default;
};

/// Untyped table read straight from CSV. Numeric cells are trimmed and parsed
/// eagerly (text that is not a decimal integer is kept as kInvalid);
/// categorical cells are interned strings, stored untouched.
class RawTable {
 public:
  static constexpr std::uint32_t kMissingText = 0xFFFFFFFFu;

  struct Row {
    std::array<NumericCell, kNumNumericColumns> numeric{};
    std::array<std::uint32_t, kNumTextColumns> text{kMissingText, kMissingText, kMissingText};
    std::uint32_t line = 0;  // 1-based line in the source file
    friend bool operator==(const Row&, const Row&) = default;
  };

  explicit RawTable(std::string source_tag = {}) : source_tag_(std::move(source_tag)) {}

  const std::string& source_tag() const { return source_tag_; }
  std::size_t size() const { return rows_.size(); }
  const std::vector<Row>& rows() const { return rows_; }
  std::vector<Row>& rows() { return rows_; }

  std::uint32_t intern(std::string_view text);
  /// Categorical cell text, or nullopt when missing. column ∈ [0, 3).
  std::optional<std::string_view> text(std::size_t row, std::size_t column) const;

  /// Original text of a kInvalid numeric cell.
  std::string invalid_text(std::size_t row, std::size_t column) const;
  void set_invalid_text(std::size_t row, std::size_t column, std::string text);

  std::size_t missing_cells() const;

  friend bool operator==(const RawTable& a, const RawTable& b);

 private:
  std::string source_tag_;
  std::vector<Row> rows_;
  std::vector<std::string> pool_;
  std::unordered_map<std::string, std::uint32_t> pool_index_;
  std::unordered_map<std::size_t, std::string> invalid_;
};

RawTable read_raw_csv(std::istream& in, const std::string& source_tag);
RawTable read_raw_csv(const std::filesystem::path& path, const std::string& source_tag);

/// Trims and uppercases the three label columns and checks them against the
/// taxonomy. Missing cells stay missing.
RawTable normalize_labels(const RawTable& table);

/// Fills missing numeric cells with the column median and missing label cells
/// with the column mode (computed before any filling).
RawTable impute_missing(const RawTable& table);

/// Types a cleaned raw table; every cell must be present and in range.
RecordTable to_records(const RawTable& table);

// ---------------------------------------------------------------------------
// Typed stage
// ---------------------------------------------------------------------------

/// read -> normalize_labels -> impute_missing -> to_records.
RecordTable parse_decimal_csv(const std::filesystem::path& path, const std::string& source_tag);

void write_decimal_csv(std::ostream& out, const RecordTable& table);
void write_decimal_csv(const std::filesystem::path& path, const RecordTable& table);

RecordTable merge_tables(std::span<const RecordTable> tables);

/// The data directory from an explicit flag, else the environment variable.
std::optional<std::filesystem::path> resolve_data_dir(const std::optional<std::filesystem::path>& flag);

/// Loads the six canonical files from dir (parsed in parallel, merged in
/// canonical order). Throws IoError naming every missing file.
RecordTable load_dataset(const std::filesystem::path& dir);

struct DuplicateRow {
  Category category = Category::kBenign;
  std::size_t duplicate_count = 0;
  std::size_t total_records = 0;
  double duplicate_fraction = 0.0;
  std::size_t unique_messages = 0;
};

struct DuplicateReport {
  std::vector<DuplicateRow> rows;  // categories present, in enum order
  std::size_t total_records = 0;
  std::size_t unique_total = 0;  // distinct rows over the whole table
};

DuplicateReport duplicate_report(const RecordTable& table);

/// Keeps the first occurrence of every distinct 12-field row.
RecordTable deduplicate(const RecordTable& table);

struct SplitResult {
  RecordTable train;
  RecordTable test;
  std::vector<std::size_t> train_indices;  // into the input table
  std::vector<std::size_t> test_indices;
  std::uint64_t seed = 0;
  double ratio = 0.0;
};

/// Per-class (specific_class) shuffled split. The overall test size is
/// ceil(N * test_fraction) when every class can stay within one record of
/// n_c * f and keep a train record; otherwise as close as that allows.
/// Single-record classes stay in train unless the total needs them.
SplitResult stratified_split(const RecordTable& table, double test_fraction, std::uint64_t seed);

/// Per-class test counts used by stratified_split, indexed by SpecificClass.
std::array<std::size_t, kNumSpecificClasses> stratified_test_counts(
    const std::array<std::size_t, kNumSpecificClasses>& class_sizes, double test_fraction);

}  // namespace canguard
