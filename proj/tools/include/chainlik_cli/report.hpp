#pragma once

// Output formatting. Machine output carries full double precision (%.17g);
// human tables print 4 significant digits of the same numbers.

#include <string>
#include <utility>
#include <vector>

namespace chainlik::cli {

std::string fmt_machine(double v);
std::string fmt_human(double v, int significant = 4);

/// CSV with a header row. Cells are stored as text; write numbers through
/// fmt_machine.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> row);
  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
  std::size_t column(const std::string& name) const;

  std::string to_csv() const;
  /// Aligned plain-text table; numeric cells reformatted with fmt_human.
  std::string to_human() const;

  static CsvTable parse(const std::string& text);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Flat "key=value" lines in insertion order.
class KeyValueDoc {
 public:
  void add(std::string key, std::string value);
  void add(std::string key, double value) { add(std::move(key), fmt_machine(value)); }
  const std::vector<std::pair<std::string, std::string>>& items() const noexcept { return items_; }
  std::string to_string() const;
  static KeyValueDoc parse(const std::string& text);
  /// Throws InvalidArgument when the key is missing.
  const std::string& get(const std::string& key) const;

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

}  // namespace chainlik::cli
