#include "chainlik_cli/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chainlik/error.hpp"

namespace chainlik::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void parse_error(const std::string& path, std::size_t line, std::size_t column, const std::string& what) {
  throw Error(Errc::Parse, path + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what);
}

struct Token {
  std::string_view text;
  std::size_t line;
  std::size_t column;
};

/// Splits text into tokens and metadata. Separators are whitespace plus the
/// characters in extra_separators.
void tokenize(std::string_view text, std::string_view extra_separators, std::vector<Token>& tokens,
              Metadata* metadata) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) {
      if (metadata && trim(line.substr(0, hash)).empty()) {
        const std::string_view body = trim(line.substr(hash + 1));
        const std::size_t colon = body.find(':');
        if (colon != std::string_view::npos && colon > 0) {
          const std::string_view key = trim(body.substr(0, colon));
          if (key.find_first_of(" \t") == std::string_view::npos) {
            metadata->emplace_back(std::string(key), std::string(trim(body.substr(colon + 1))));
          }
        }
      }
      line = line.substr(0, hash);
    }
    std::size_t i = 0;
    auto is_sep = [&](char c) {
      return std::isspace(static_cast<unsigned char>(c)) || extra_separators.find(c) != std::string_view::npos;
    };
    while (i < line.size()) {
      while (i < line.size() && is_sep(line[i])) ++i;
      const std::size_t start = i;
      while (i < line.size() && !is_sep(line[i])) ++i;
      if (i > start) tokens.push_back({line.substr(start, i - start), line_no, start + 1});
    }
  }
}

std::optional<std::size_t> dna_index(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'A': return 0;
    case 'G': return 1;
    case 'C': return 2;
    case 'T': return 3;
    default: return std::nullopt;
  }
}

}  // namespace

const char* alphabet_name(Alphabet a) noexcept { return a == Alphabet::Dna ? "dna" : "integers"; }

Alphabet parse_alphabet(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "dna") return Alphabet::Dna;
  if (lower == "integers" || lower == "int") return Alphabet::Integers;
  throw Error(Errc::Config, "unknown alphabet '" + std::string(name) + "' (expected dna or integers)");
}

std::optional<std::string> SequenceFile::meta(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return std::nullopt;
}

SequenceFile parse_sequence(std::string_view text, std::optional<Alphabet> alphabet, std::size_t num_states,
                            const std::string& path) {
  SequenceFile out;
  out.path = path;
  std::vector<Token> tokens;
  tokenize(text, "", tokens, &out.metadata);

  if (!alphabet) {
    if (const auto a = out.meta("alphabet")) {
      alphabet = parse_alphabet(*a);
    } else if (!tokens.empty() && std::isalpha(static_cast<unsigned char>(tokens.front().text.front()))) {
      alphabet = Alphabet::Dna;
    } else {
      alphabet = Alphabet::Integers;
    }
  }
  out.alphabet = *alphabet;

  std::vector<std::uint32_t> x;
  if (out.alphabet == Alphabet::Dna) {
    for (const Token& t : tokens) {
      for (std::size_t i = 0; i < t.text.size(); ++i) {
        const auto idx = dna_index(t.text[i]);
        if (!idx) parse_error(path, t.line, t.column + i, "unknown nucleotide '" + std::string(1, t.text[i]) + "'");
        x.push_back(static_cast<std::uint32_t>(*idx));
      }
    }
    out.parsed = ChainPath{StateSpace::dna(), std::move(x), std::nullopt};
  } else {
    if (num_states == 0) {
      if (const auto s = out.meta("states")) {
        std::size_t v = 0;
        const auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
        if (ec != std::errc{} || p != s->data() + s->size() || v < 1) {
          throw Error(Errc::Parse, path + ": bad 'states' metadata '" + *s + "'");
        }
        num_states = v;
      }
    }
    std::size_t largest = 0;
    for (const Token& t : tokens) {
      long v = 0;
      const auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec != std::errc{} || p != t.text.data() + t.text.size()) {
        parse_error(path, t.line, t.column, "expected a state number, got '" + std::string(t.text) + "'");
      }
      if (v < 1 || (num_states > 0 && static_cast<std::size_t>(v) > num_states)) {
        parse_error(path, t.line, t.column,
                    "state " + std::to_string(v) + " outside 1.." +
                        (num_states > 0 ? std::to_string(num_states) : std::string("S")));
      }
      largest = std::max(largest, static_cast<std::size_t>(v));
      x.push_back(static_cast<std::uint32_t>(v - 1));
    }
    const std::size_t s = num_states > 0 ? num_states : std::max<std::size_t>(largest, 1);
    out.parsed = ChainPath{StateSpace::numbered(s, 1), std::move(x), std::nullopt};
  }
  if (const auto seed = out.meta("seed")) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(seed->data(), seed->data() + seed->size(), v);
    if (ec == std::errc{} && p == seed->data() + seed->size()) out.parsed.seed = v;
  }
  return out;
}

SequenceFile read_sequence(const std::string& path, std::optional<Alphabet> alphabet, std::size_t num_states) {
  return parse_sequence(read_file(path), alphabet, num_states, path);
}

std::string format_sequence(const ChainPath& path, Alphabet alphabet, const Metadata& metadata) {
  std::ostringstream os;
  for (const auto& [k, v] : metadata) os << "# " << k << ": " << v << '\n';
  if (alphabet == Alphabet::Dna) {
    static const char letters[] = {'A', 'G', 'C', 'T'};
    for (std::size_t i = 0; i < path.x.size(); ++i) {
      if (path.x[i] >= 4) throw Error(Errc::InvalidArgument, "state outside the DNA alphabet");
      os << letters[path.x[i]];
      if ((i + 1) % 60 == 0 || i + 1 == path.x.size()) os << '\n';
    }
  } else {
    for (std::size_t i = 0; i < path.x.size(); ++i) {
      os << (path.x[i] + 1);
      os << (((i + 1) % 30 == 0 || i + 1 == path.x.size()) ? '\n' : ' ');
    }
  }
  return os.str();
}

Matrix parse_count_matrix(std::string_view text, const std::string& path) {
  std::vector<Token> tokens;
  tokenize(text, ",", tokens, nullptr);
  std::vector<std::vector<double>> rows;
  std::size_t current_line = 0;
  for (const Token& t : tokens) {
    if (rows.empty() || t.line != current_line) {
      rows.emplace_back();
      current_line = t.line;
    }
    double v = 0.0;
    const auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc{} || p != t.text.data() + t.text.size() || !std::isfinite(v) || v < 0.0) {
      parse_error(path, t.line, t.column, "expected a nonnegative count, got '" + std::string(t.text) + "'");
    }
    rows.back().push_back(v);
  }
  const std::size_t s = rows.size();
  if (s < 2) throw Error(Errc::Parse, path + ": a count matrix needs at least two rows");
  Matrix m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
  for (std::size_t a = 0; a < s; ++a) {
    if (rows[a].size() != s) {
      throw Error(Errc::Parse, path + ": row " + std::to_string(a + 1) + " has " + std::to_string(rows[a].size()) +
                                   " entries; expected " + std::to_string(s));
    }
    for (std::size_t b = 0; b < s; ++b) m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = rows[a][b];
  }
  return m;
}

Matrix read_count_matrix(const std::string& path) { return parse_count_matrix(read_file(path), path); }

std::string format_count_matrix(const Matrix& counts) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index a = 0; a < counts.rows(); ++a) {
    for (Eigen::Index b = 0; b < counts.cols(); ++b) os << (b ? " " : "") << counts(a, b);
    os << '\n';
  }
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw Error(Errc::Io, "error reading '" + path + "'");
  return os.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(Errc::Io, "error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(Errc::Io, "cannot rename into '" + path + "'");
  }
}

}  // namespace chainlik::cli
