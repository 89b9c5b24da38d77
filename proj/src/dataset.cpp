#include "canguard/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "canguard/error.hpp"
#include "canguard/rng.hpp"

namespace canguard {
namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

void split_fields(std::string_view line, std::vector<std::string_view>& fields) {
  fields.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

NumericCell parse_numeric(std::string_view raw) {
  const std::string_view s = trim(unquote(trim(raw)));
  if (s.empty()) return {0, CellState::kMissing};
  std::int32_t value = 0;
  std::string_view digits = s;
  if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return {0, CellState::kInvalid};
  return {value, CellState::kPresent};
}

std::size_t invalid_key(std::size_t row, std::size_t column) {
  return row * kNumNumericColumns + column;
}

std::string row_context(const RawTable& table, std::size_t row) {
  std::ostringstream os;
  os << "row " << (row + 1) << " (line " << table.rows()[row].line << ")";
  if (!table.source_tag().empty()) os << " of " << table.source_tag();
  return os.str();
}

double median_of(std::vector<std::int32_t> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (static_cast<double>(values[n / 2 - 1]) + static_cast<double>(values[n / 2])) / 2.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// RawTable

std::uint32_t RawTable::intern(std::string_view text) {
  std::string key(text);
  auto it = pool_index_.find(key);
  if (it != pool_index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(pool_.size());
  pool_.push_back(key);
  pool_index_.emplace(std::move(key), id);
  return id;
}

std::optional<std::string_view> RawTable::text(std::size_t row, std::size_t column) const {
  const std::uint32_t id = rows_.at(row).text.at(column);
  if (id == kMissingText) return std::nullopt;
  return std::string_view(pool_.at(id));
}

std::string RawTable::invalid_text(std::size_t row, std::size_t column) const {
  auto it = invalid_.find(invalid_key(row, column));
  return it == invalid_.end() ? std::string() : it->second;
}

void RawTable::set_invalid_text(std::size_t row, std::size_t column, std::string text) {
  invalid_[invalid_key(row, column)] = std::move(text);
}

std::size_t RawTable::missing_cells() const {
  std::size_t n = 0;
  for (const Row& r : rows_) {
    for (const NumericCell& c : r.numeric) n += c.state == CellState::kMissing;
    for (std::uint32_t t : r.text) n += t == kMissingText;
  }
  return n;
}

bool operator==(const RawTable& a, const RawTable& b) {
  if (a.size() != b.size() || a.source_tag_ != b.source_tag_) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.rows_[i].numeric != b.rows_[i].numeric || a.rows_[i].line != b.rows_[i].line) return false;
    for (std::size_t c = 0; c < kNumTextColumns; ++c)
      if (a.text(i, c) != b.text(i, c)) return false;
    for (std::size_t c = 0; c < kNumNumericColumns; ++c)
      if (a.rows_[i].numeric[c].state == CellState::kInvalid &&
          a.invalid_text(i, c) != b.invalid_text(i, c))
        return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Reading

RawTable read_raw_csv(std::istream& in, const std::string& source_tag) {
  RawTable table(source_tag);
  std::string line;
  std::uint32_t line_no = 0;
  std::vector<std::string_view> fields;

  // Header: locate the twelve columns by trimmed name.
  std::array<std::size_t, kNumColumns> position{};
  std::size_t header_width = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    split_fields(line, fields);
    header_width = fields.size();
    for (std::size_t c = 0; c < kNumColumns; ++c) {
      auto it = std::find_if(fields.begin(), fields.end(), [&](std::string_view f) {
        return trim(unquote(trim(f))) == kColumnNames[c];
      });
      if (it == fields.end())
        throw SchemaError("missing column '" + std::string(kColumnNames[c]) + "' in header of " +
                          source_tag);
      position[c] = static_cast<std::size_t>(it - fields.begin());
    }
    have_header = true;
    break;
  }
  if (!have_header) throw SchemaError("no header row in " + source_tag);

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    split_fields(line, fields);
    if (fields.size() != header_width)
      throw ParseError("line " + std::to_string(line_no) + " of " + source_tag + " has " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(header_width));
    RawTable::Row row;
    row.line = line_no;
    const std::size_t row_index = table.size();
    for (std::size_t c = 0; c < kNumNumericColumns; ++c) {
      const std::string_view f = fields[position[c]];
      row.numeric[c] = parse_numeric(f);
      if (row.numeric[c].state == CellState::kInvalid)
        table.set_invalid_text(row_index, c, std::string(f));
    }
    for (std::size_t c = 0; c < kNumTextColumns; ++c) {
      const std::string_view f = unquote(fields[position[kNumNumericColumns + c]]);
      row.text[c] = trim(f).empty() ? RawTable::kMissingText : table.intern(f);
    }
    table.rows().push_back(row);
  }
  return table;
}

RawTable read_raw_csv(const std::filesystem::path& path, const std::string& source_tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_raw_csv(in, source_tag);
}

// ---------------------------------------------------------------------------
// Cleaning

RawTable normalize_labels(const RawTable& table) {
  RawTable out(table.source_tag());
  out.rows().reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    RawTable::Row row = table.rows()[i];
    std::array<std::optional<std::string>, kNumTextColumns> values;
    for (std::size_t c = 0; c < kNumTextColumns; ++c) {
      const auto text = table.text(i, c);
      if (!text) continue;
      values[c] = upper(trim(*text));
      row.text[c] = out.intern(*values[c]);
    }
    for (std::size_t c = 0; c < kNumNumericColumns; ++c)
      if (row.numeric[c].state == CellState::kInvalid)
        out.set_invalid_text(i, c, table.invalid_text(i, c));

    std::optional<Label> label;
    std::optional<Category> category;
    std::optional<SpecificClass> specific;
    if (values[0] && !(label = parse_label(*values[0])))
      throw LabelError(row_context(table, i) + ": unknown label '" + *values[0] + "'");
    if (values[1] && !(category = parse_category(*values[1])))
      throw LabelError(row_context(table, i) + ": unknown category '" + *values[1] + "'");
    if (values[2] && !(specific = parse_specific_class(*values[2])))
      throw LabelError(row_context(table, i) + ": unknown specific_class '" + *values[2] + "'");
    if (label && category && specific && !taxonomy_consistent(*label, *category, *specific))
      throw LabelError(row_context(table, i) + ": inconsistent labels " + *values[0] + "/" +
                       *values[1] + "/" + *values[2]);
    out.rows().push_back(row);
  }
  return out;
}

RawTable impute_missing(const RawTable& table) {
  if (table.missing_cells() == 0) return table;

  std::array<std::optional<std::int32_t>, kNumNumericColumns> numeric_fill{};
  std::array<bool, kNumNumericColumns> fill_is_fractional{};
  std::array<double, kNumNumericColumns> fractional_fill{};
  for (std::size_t c = 0; c < kNumNumericColumns; ++c) {
    bool any_missing = false;
    std::vector<std::int32_t> present;
    for (const auto& row : table.rows()) {
      if (row.numeric[c].state == CellState::kPresent) present.push_back(row.numeric[c].value);
      any_missing |= row.numeric[c].state == CellState::kMissing;
    }
    if (!any_missing) continue;
    if (present.empty())
      throw ImputationError("column " + std::string(kColumnNames[c]) + " of " + table.source_tag() +
                            " has no values; median undefined");
    const double m = median_of(std::move(present));
    if (m == std::floor(m)) {
      numeric_fill[c] = static_cast<std::int32_t>(m);
    } else {
      fill_is_fractional[c] = true;
      fractional_fill[c] = m;
    }
  }

  std::array<std::string, kNumTextColumns> text_mode;
  for (std::size_t c = 0; c < kNumTextColumns; ++c) {
    std::map<std::string_view, std::size_t> counts;  // ordered: ties go to the smallest value
    bool any_missing = false;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto t = table.text(i, c);
      if (t) ++counts[*t];
      else any_missing = true;
    }
    if (!any_missing) continue;
    if (counts.empty())
      throw ImputationError("column " + std::string(kColumnNames[kNumNumericColumns + c]) + " of " +
                            table.source_tag() + " has no values; mode undefined");
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it)
      if (it->second > best->second) best = it;
    text_mode[c] = std::string(best->first);
  }

  RawTable out = table;
  std::array<std::uint32_t, kNumTextColumns> text_fill{};
  for (std::size_t c = 0; c < kNumTextColumns; ++c)
    text_fill[c] = text_mode[c].empty() ? RawTable::kMissingText : out.intern(text_mode[c]);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& row = out.rows()[i];
    for (std::size_t c = 0; c < kNumNumericColumns; ++c) {
      if (row.numeric[c].state != CellState::kMissing) continue;
      if (fill_is_fractional[c]) {
        // A fractional median cannot be stored in an integer column; it
        // surfaces as a parse error when the table is typed.
        row.numeric[c].state = CellState::kInvalid;
        std::ostringstream os;
        os << fractional_fill[c];
        out.set_invalid_text(i, c, os.str());
      } else {
        row.numeric[c] = {*numeric_fill[c], CellState::kPresent};
      }
    }
    for (std::size_t c = 0; c < kNumTextColumns; ++c)
      if (row.text[c] == RawTable::kMissingText) row.text[c] = text_fill[c];
  }
  return out;
}

RecordTable to_records(const RawTable& table) {
  std::vector<CanFrameRecord> records;
  records.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table.rows()[i];
    CanFrameRecord rec;
    for (std::size_t c = 0; c < kNumNumericColumns; ++c) {
      const NumericCell cell = row.numeric[c];
      if (cell.state == CellState::kMissing)
        throw ParseError(row_context(table, i) + ": missing value in " + std::string(kColumnNames[c]));
      if (cell.state == CellState::kInvalid)
        throw ParseError(row_context(table, i) + ": non-integer value '" + table.invalid_text(i, c) +
                         "' in " + std::string(kColumnNames[c]));
      const std::int32_t hi = c == 0 ? kMaxCanId : 255;
      if (cell.value < 0 || cell.value > hi)
        throw ParseError(row_context(table, i) + ": " + std::string(kColumnNames[c]) + " value " +
                         std::to_string(cell.value) + " outside [0, " + std::to_string(hi) + "]");
      if (c == 0) rec.id = static_cast<std::uint16_t>(cell.value);
      else rec.data[c - 1] = static_cast<std::uint8_t>(cell.value);
    }
    std::array<std::string_view, kNumTextColumns> text;
    for (std::size_t c = 0; c < kNumTextColumns; ++c) {
      const auto t = table.text(i, c);
      if (!t)
        throw LabelError(row_context(table, i) + ": missing " +
                         std::string(kColumnNames[kNumNumericColumns + c]));
      text[c] = *t;
    }
    const auto label = parse_label(text[0]);
    const auto category = parse_category(text[1]);
    const auto specific = parse_specific_class(text[2]);
    if (!label || !category || !specific)
      throw LabelError(row_context(table, i) + ": unnormalized or unknown labels " + std::string(text[0]) +
                       "/" + std::string(text[1]) + "/" + std::string(text[2]));
    if (!taxonomy_consistent(*label, *category, *specific))
      throw LabelError(row_context(table, i) + ": inconsistent labels " + std::string(text[0]) + "/" +
                       std::string(text[1]) + "/" + std::string(text[2]));
    rec.label = *label;
    rec.category = *category;
    rec.specific_class = *specific;
    records.push_back(rec);
  }
  return RecordTable(std::move(records), table.source_tag());
}

RecordTable parse_decimal_csv(const std::filesystem::path& path, const std::string& source_tag) {
  return to_records(impute_missing(normalize_labels(read_raw_csv(path, source_tag))));
}

// ---------------------------------------------------------------------------
// Writing

void write_decimal_csv(std::ostream& out, const RecordTable& table) {
  for (std::size_t c = 0; c < kNumColumns; ++c) out << (c ? "," : "") << kColumnNames[c];
  out << '\n';
  std::string line;
  for (const CanFrameRecord& r : table.records()) {
    line.clear();
    line += std::to_string(r.id);
    for (auto b : r.data) {
      line += ',';
      line += std::to_string(b);
    }
    line += ',';
    line += to_string(r.label);
    line += ',';
    line += to_string(r.category);
    line += ',';
    line += to_string(r.specific_class);
    line += '\n';
    out << line;
  }
}

void write_decimal_csv(const std::filesystem::path& path, const RecordTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_decimal_csv(out, table);
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Merge and discovery

RecordTable merge_tables(std::span<const RecordTable> tables) {
  std::size_t total = 0;
  for (const auto& t : tables) total += t.size();
  std::vector<CanFrameRecord> records;
  std::vector<std::string> tags;
  records.reserve(total);
  tags.reserve(total);
  for (const auto& t : tables) {
    records.insert(records.end(), t.records().begin(), t.records().end());
    tags.insert(tags.end(), t.source_tags().begin(), t.source_tags().end());
  }
  return RecordTable(std::move(records), std::move(tags));
}

std::optional<std::filesystem::path> resolve_data_dir(const std::optional<std::filesystem::path>& flag) {
  if (flag && !flag->empty()) return flag;
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

RecordTable load_dataset(const std::filesystem::path& dir) {
  std::vector<std::string> missing;
  for (auto name : kCanonicalFiles)
    if (!std::filesystem::is_regular_file(dir / name)) missing.emplace_back(name);
  if (!missing.empty()) {
    std::string msg = "data directory " + dir.string() + " is missing:";
    for (const auto& m : missing) msg += " " + m;
    throw IoError(msg);
  }
  std::vector<std::future<RecordTable>> jobs;
  for (auto name : kCanonicalFiles) {
    const std::filesystem::path path = dir / name;
    const std::string tag = std::filesystem::path(name).stem().string();
    jobs.push_back(std::async(std::launch::async, [path, tag] { return parse_decimal_csv(path, tag); }));
  }
  std::vector<RecordTable> tables;
  for (auto& job : jobs) tables.push_back(job.get());
  return merge_tables(tables);
}

// ---------------------------------------------------------------------------
// Duplicates

DuplicateReport duplicate_report(const RecordTable& table) {
  std::array<std::size_t, kNumCategories> totals{};
  std::array<std::size_t, kNumCategories> unique{};
  std::unordered_set<CanFrameRecord, CanFrameRecordHash> seen;
  seen.reserve(table.size() / 64 + 16);
  for (const CanFrameRecord& r : table.records()) {
    const auto c = static_cast<std::size_t>(r.category);
    ++totals[c];
    if (seen.insert(r).second) ++unique[c];
  }
  DuplicateReport report;
  report.total_records = table.size();
  report.unique_total = seen.size();
  for (Category cat : kAllCategories) {
    const auto c = static_cast<std::size_t>(cat);
    if (totals[c] == 0) continue;
    DuplicateRow row;
    row.category = cat;
    row.total_records = totals[c];
    row.unique_messages = unique[c];
    row.duplicate_count = totals[c] - unique[c];
    row.duplicate_fraction = static_cast<double>(row.duplicate_count) / static_cast<double>(totals[c]);
    report.rows.push_back(row);
  }
  return report;
}

RecordTable deduplicate(const RecordTable& table) {
  std::unordered_set<CanFrameRecord, CanFrameRecordHash> seen;
  seen.reserve(table.size() / 64 + 16);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < table.size(); ++i)
    if (seen.insert(table[i]).second) keep.push_back(i);
  return table.subset(keep);
}

// ---------------------------------------------------------------------------
// Split

std::array<std::size_t, kNumSpecificClasses> stratified_test_counts(
    const std::array<std::size_t, kNumSpecificClasses>& class_sizes, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw SplitError("test fraction must lie in (0, 1), got " + std::to_string(test_fraction));
  const std::size_t total = std::accumulate(class_sizes.begin(), class_sizes.end(), std::size_t{0});
  const double slack = 1e-9 * std::max(1.0, static_cast<double>(total));
  const auto target = static_cast<std::size_t>(std::ceil(static_cast<double>(total) * test_fraction - slack));

  std::array<std::size_t, kNumSpecificClasses> counts{};
  std::array<std::size_t, kNumSpecificClasses> cap{};
  std::array<double, kNumSpecificClasses> remainder{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < kNumSpecificClasses; ++c) {
    const std::size_t n = class_sizes[c];
    cap[c] = n >= 2 ? n - 1 : 0;
    const double exact = static_cast<double>(n) * test_fraction;
    counts[c] = std::min(cap[c], static_cast<std::size_t>(std::floor(exact + 1e-9)));
    remainder[c] = exact - static_cast<double>(counts[c]);
    assigned += counts[c];
  }

  std::array<std::size_t, kNumSpecificClasses> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return class_sizes[a] > class_sizes[b];
  });
  for (std::size_t c : order) {
    if (assigned >= target) break;
    if (remainder[c] > 0.0 && counts[c] < cap[c]) {
      ++counts[c];
      ++assigned;
    }
  }
  // Caps can leave a shortfall. Singletons may go to test first (still within
  // one record of the exact share).
  for (std::size_t c : order) {
    if (assigned >= target) break;
    if (class_sizes[c] == 1) {
      counts[c] = 1;
      ++assigned;
    }
  }
  // Then the largest classes take one more record each, never leaving the
  // band; a total the band cannot hold is undershot.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return class_sizes[a] > class_sizes[b]; });
  for (std::size_t c : order) {
    if (assigned >= target) break;
    const double exact = static_cast<double>(class_sizes[c]) * test_fraction;
    if (counts[c] < cap[c] && static_cast<double>(counts[c]) + 1.0 <= exact + 1.0 + 1e-9) {
      ++counts[c];
      ++assigned;
    }
  }
  if (assigned == 0 || assigned == total)
    throw SplitError("test fraction " + std::to_string(test_fraction) + " on " + std::to_string(total) +
                     " records leaves an empty train or test partition");
  return counts;
}

SplitResult stratified_split(const RecordTable& table, double test_fraction, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kNumSpecificClasses> members;
  for (std::size_t i = 0; i < table.size(); ++i)
    members[static_cast<std::size_t>(table[i].specific_class)].push_back(i);
  std::array<std::size_t, kNumSpecificClasses> sizes{};
  for (std::size_t c = 0; c < kNumSpecificClasses; ++c) sizes[c] = members[c].size();
  const auto test_counts = stratified_test_counts(sizes, test_fraction);

  SplitResult result;
  result.seed = seed;
  result.ratio = test_fraction;
  for (std::size_t c = 0; c < kNumSpecificClasses; ++c) {
    auto& idx = members[c];
    Rng rng(derive_seed(seed, c));
    rng.shuffle(std::span<std::size_t>(idx));
    result.test_indices.insert(result.test_indices.end(), idx.begin(), idx.begin() + test_counts[c]);
    result.train_indices.insert(result.train_indices.end(), idx.begin() + test_counts[c], idx.end());
  }
  std::sort(result.train_indices.begin(), result.train_indices.end());
  std::sort(result.test_indices.begin(), result.test_indices.end());
  result.train = table.subset(result.train_indices);
  result.test = table.subset(result.test_indices);
  return result;
}

}  // namespace canguard
