#pragma once

// Sequence and count files.
//
// A sequence file holds one chain as whitespace separated tokens. Lines
// starting with '#' are comments; a comment of the form "# key: value" is
// kept as metadata. Integer files use one-based state numbers. DNA files
// use the letters A, G, C, T (any case), mapped to states 1..4 in that
// order; letters may run together, so "AGGT" is four states.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chainlik/chain_core.hpp"

namespace chainlik::cli {

enum class Alphabet { Integers, Dna };

const char* alphabet_name(Alphabet a) noexcept;
Alphabet parse_alphabet(std::string_view name);

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct SequenceFile {
  std::string path;
  Alphabet alphabet = Alphabet::Integers;
  ChainPath parsed{StateSpace::dna(), {}, std::nullopt};  ///< empty until parsed
  Metadata metadata;

  /// Value of the first metadata entry with this key.
  std::optional<std::string> meta(std::string_view key) const;
};

/// Parses sequence text. The alphabet comes from the argument, else from an
/// "alphabet" metadata entry, else from the first token. For integers the
/// state count comes from num_states, else a "states" entry, else the
/// largest token. Malformed tokens throw Parse with "path:line:column".
SequenceFile parse_sequence(std::string_view text, std::optional<Alphabet> alphabet = std::nullopt,
                            std::size_t num_states = 0, const std::string& path = "<input>");

SequenceFile read_sequence(const std::string& path, std::optional<Alphabet> alphabet = std::nullopt,
                           std::size_t num_states = 0);

/// Metadata lines, then the states: 60 letters per line for DNA, 30
/// numbers per line for integers.
std::string format_sequence(const ChainPath& path, Alphabet alphabet, const Metadata& metadata);

/// An S x S matrix of pair counts: one row per line, entries separated by
/// whitespace or commas, '#' comments allowed.
Matrix parse_count_matrix(std::string_view text, const std::string& path = "<input>");
Matrix read_count_matrix(const std::string& path);
std::string format_count_matrix(const Matrix& counts);

std::string read_file(const std::string& path);
/// Writes to a temporary file next to path, then renames it over path.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace chainlik::cli
