#include "chainlik_cli/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <optional>
#include <sstream>

#include "chainlik/error.hpp"

namespace chainlik::cli {

namespace {

bool as_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && p == s.data() + s.size();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  out.push_back(cell);
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::string fmt_machine(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_human(double v, int significant) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", significant, v);
  return buf;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) {
    throw Error(Errc::InvalidArgument, "CSV row has " + std::to_string(row.size()) + " cells; header has " +
                                           std::to_string(header_.size()));
  }
  rows_.push_back(std::move(row));
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header_.begin(), header_.end(), name);
  if (it == header_.end()) throw Error(Errc::InvalidArgument, "no CSV column '" + name + "'");
  return static_cast<std::size_t>(it - header_.begin());
}

std::string CsvTable::to_csv() const {
  std::ostringstream os;
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_escape(cells[i]);
    os << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return os.str();
}

std::string CsvTable::to_human() const {
  std::vector<std::vector<std::string>> cells;
  cells.push_back(header_);
  for (const auto& r : rows_) {
    std::vector<std::string> h;
    for (const std::string& c : r) {
      double v;
      h.push_back(as_number(c, v) ? fmt_human(v) : c);
    }
    cells.push_back(std::move(h));
  }
  std::vector<std::size_t> width(header_.size(), 0);
  for (const auto& r : cells)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  std::ostringstream os;
  for (const auto& r : cells) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      os << (i ? "  " : "") << r[i] << std::string(i + 1 < r.size() ? width[i] - r[i].size() : 0, ' ');
    }
    os << '\n';
  }
  return os.str();
}

CsvTable CsvTable::parse(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::optional<CsvTable> table;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto cells = split_csv_line(line);
    if (!table) {
      table.emplace(std::move(cells));
    } else {
      if (cells.size() != table->header().size()) throw Error(Errc::Parse, "CSV row width differs from header");
      table->add_row(std::move(cells));
    }
  }
  if (!table) throw Error(Errc::Parse, "empty CSV");
  return *table;
}

void KeyValueDoc::add(std::string key, std::string value) { items_.emplace_back(std::move(key), std::move(value)); }

std::string KeyValueDoc::to_string() const {
  std::string out;
  for (const auto& [k, v] : items_) out += k + "=" + v + "\n";
  return out;
}

KeyValueDoc KeyValueDoc::parse(const std::string& text) {
  KeyValueDoc doc;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (line.empty() || line.front() == '#' || eq == std::string::npos) continue;
    doc.add(line.substr(0, eq), line.substr(eq + 1));
  }
  return doc;
}

const std::string& KeyValueDoc::get(const std::string& key) const {
  for (const auto& [k, v] : items_) {
    if (k == key) return v;
  }
  throw Error(Errc::InvalidArgument, "no key '" + key + "'");
}

}  // namespace chainlik::cli
