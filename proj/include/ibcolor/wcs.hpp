#pragma once

// Parsers for WCS-distribution data files and estimation of per-language
// empirical encoders q_l(w|c).
//
// File formats (tab-separated):
//   chip.txt           chip_id, grid row letter, grid column, Munsell code;
//                      330 rows, no header.
//   cnum-vhcm-lab.txt  one header row; first column is the chip number,
//                      the last three columns are L*, a*, b*.
//   term.txt           language_id, speaker_id, chip_id, term; no header.
// The English dataset uses the term.txt format and is ingested with its
// language id forced to 111.

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ibcolor/matrix.hpp"
#include "ibcolor/meaning_space.hpp"

namespace ibcolor {

inline constexpr int kWcsChipCount = 330;
inline constexpr int kEnglishLanguageId = 111;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NamingObservation {
  int language_id = 0;
  int speaker_id = 0;
  int chip_id = 0;
  std::string term;
};

struct TermData {
  std::vector<NamingObservation> observations;
  int skipped_blank = 0;
};

struct LanguageEncoder {
  int language_id = 0;
  std::vector<std::string> terms;  // first-appearance order
  Matrix cond;                     // chips x terms, rows q_l(w|c)
};

// Per-chip index of the modal term, ties broken toward the lowest index.
using ModeMap = std::vector<int>;

// chip.txt -> palette skeleton (grid coordinates, no CIELAB). Enforces the
// 330-chip layout.
Palette parse_chip_table(std::istream& in);

// cnum-vhcm-lab.txt -> chip id -> CIELAB triple, exactly one per chip 1..330.
std::map<int, Lab> parse_lab_table(std::istream& in);
void serialize_lab_table(std::ostream& out, const std::map<int, Lab>& labs);

// Attaches parsed CIELAB coordinates to a palette skeleton.
void apply_lab(Palette& palette, const std::map<int, Lab>& labs);

// term.txt -> observations. Terms are trimmed and lowercased; rows with a
// blank term are skipped and counted. language_override forces every row's
// language id (used for the English dataset).
TermData parse_term_file(std::istream& in, std::optional<int> language_override = std::nullopt);

// Empirical encoder for one language: q_l(w|c) = count(w, c) / count(c).
// Every chip 1..n_chips must be covered or the error lists the gaps.
LanguageEncoder estimate_encoder(const std::vector<NamingObservation>& observations,
                                 int language_id, int n_chips);

ModeMap mode_map(const LanguageEncoder& encoder);

// Number of distinct terms that are modal for at least one chip.
int frequent_term_count(const LanguageEncoder& encoder);

// Groups observations by language id and estimates every encoder, sorted by
// language id.
std::vector<LanguageEncoder> estimate_all_encoders(const std::vector<NamingObservation>& observations,
                                                   int n_chips);

}  // namespace ibcolor
