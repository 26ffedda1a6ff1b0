#include "ibcolor/wcs.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace ibcolor {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

int parse_int(const std::string& field, int line_no, const char* what) {
  std::string t = trim(field);
  int value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + field + "'");
  }
  return value;
}

double parse_double(const std::string& field, int line_no, const char* what) {
  std::string t = trim(field);
  try {
    std::size_t consumed = 0;
    double value = std::stod(t, &consumed);
    if (consumed != t.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + field + "'");
  }
}

// Reads lines tolerant of trailing \r from Windows-style files.
bool get_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

Palette parse_chip_table(std::istream& in) {
  Palette palette;
  std::string line;
  int line_no = 0;
  std::set<int> seen;
  while (get_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() < 3) {
      throw ParseError("line " + std::to_string(line_no) + ": expected at least 3 columns");
    }
    ColorChip chip;
    chip.id = parse_int(fields[0], line_no, "chip id");
    std::string row = trim(fields[1]);
    if (row.size() != 1 || row[0] < 'A' || row[0] > 'J') {
      throw ParseError("line " + std::to_string(line_no) + ": bad grid row '" + fields[1] + "'");
    }
    chip.grid_row = row[0];
    chip.grid_col = parse_int(fields[2], line_no, "grid column");
    if (fields.size() > 3) chip.munsell = trim(fields[3]);
    if (!seen.insert(chip.id).second) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate chip id " +
                       std::to_string(chip.id));
    }
    if (chip.id < 1 || chip.id > kWcsChipCount) {
      throw ParseError("line " + std::to_string(line_no) + ": chip id " + std::to_string(chip.id) +
                       " out of range 1.." + std::to_string(kWcsChipCount));
    }
    palette.chips.push_back(chip);
  }
  if (palette.chips.empty()) throw ParseError("chip table: no rows");
  if (palette.chips.size() != kWcsChipCount) {
    throw ParseError("chip table: expected " + std::to_string(kWcsChipCount) + " chips, found " +
                     std::to_string(palette.chips.size()));
  }
  std::sort(palette.chips.begin(), palette.chips.end(),
            [](const ColorChip& a, const ColorChip& b) { return a.id < b.id; });
  palette.validate();
  return palette;
}

std::map<int, Lab> parse_lab_table(std::istream& in) {
  std::map<int, Lab> labs;
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  while (get_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!saw_header) {
      saw_header = true;  // first non-empty line is the header
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() < 4) {
      throw ParseError("line " + std::to_string(line_no) + ": expected at least 4 columns");
    }
    int id = parse_int(fields[0], line_no, "chip number");
    Lab lab;
    lab[0] = parse_double(fields[fields.size() - 3], line_no, "L*");
    lab[1] = parse_double(fields[fields.size() - 2], line_no, "a*");
    lab[2] = parse_double(fields[fields.size() - 1], line_no, "b*");
    if (!labs.emplace(id, lab).second) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate chip number " +
                       std::to_string(id));
    }
  }
  if (labs.empty()) throw ParseError("lab table: no data rows");
  for (int id = 1; id <= kWcsChipCount; ++id) {
    if (!labs.count(id)) throw ParseError("lab table: missing chip " + std::to_string(id));
  }
  if (labs.size() != kWcsChipCount) {
    throw ParseError("lab table: unexpected extra rows");
  }
  return labs;
}

void serialize_lab_table(std::ostream& out, const std::map<int, Lab>& labs) {
  out << "#cnum\tL*\ta*\tb*\n";
  char buf[96];
  for (const auto& [id, lab] : labs) {
    std::snprintf(buf, sizeof(buf), "%d\t%.17g\t%.17g\t%.17g\n", id, lab[0], lab[1], lab[2]);
    out << buf;
  }
}

void apply_lab(Palette& palette, const std::map<int, Lab>& labs) {
  for (ColorChip& chip : palette.chips) {
    auto it = labs.find(chip.id);
    if (it == labs.end()) {
      throw ParseError("no CIELAB coordinates for chip " + std::to_string(chip.id));
    }
    chip.lab = it->second;
  }
}

TermData parse_term_file(std::istream& in, std::optional<int> language_override) {
  TermData data;
  std::string line;
  int line_no = 0;
  while (get_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() < 4) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 columns");
    }
    NamingObservation obs;
    obs.language_id = language_override ? *language_override
                                        : parse_int(fields[0], line_no, "language id");
    obs.speaker_id = parse_int(fields[1], line_no, "speaker id");
    obs.chip_id = parse_int(fields[2], line_no, "chip id");
    if (obs.chip_id < 1 || obs.chip_id > kWcsChipCount) {
      throw ParseError("line " + std::to_string(line_no) + ": chip id " +
                       std::to_string(obs.chip_id) + " out of range 1.." +
                       std::to_string(kWcsChipCount));
    }
    obs.term = lower(trim(fields[3]));
    if (obs.term.empty()) {
      ++data.skipped_blank;
      continue;
    }
    data.observations.push_back(std::move(obs));
  }
  return data;
}

LanguageEncoder estimate_encoder(const std::vector<NamingObservation>& observations,
                                 int language_id, int n_chips) {
  LanguageEncoder enc;
  enc.language_id = language_id;

  std::map<std::string, std::size_t> term_index;
  std::vector<std::vector<double>> counts;  // per chip, per term
  counts.assign(static_cast<std::size_t>(n_chips), {});

  for (const NamingObservation& obs : observations) {
    if (obs.language_id != language_id) continue;
    auto [it, inserted] = term_index.emplace(obs.term, enc.terms.size());
    if (inserted) enc.terms.push_back(obs.term);
    auto& row = counts[static_cast<std::size_t>(obs.chip_id - 1)];
    if (row.size() < enc.terms.size()) row.resize(enc.terms.size(), 0.0);
    row[it->second] += 1.0;
  }

  std::vector<int> uncovered;
  for (int c = 0; c < n_chips; ++c) {
    if (counts[static_cast<std::size_t>(c)].empty()) uncovered.push_back(c + 1);
  }
  if (!uncovered.empty()) {
    std::string msg = "language " + std::to_string(language_id) + ": no observations for chips";
    for (int id : uncovered) msg += " " + std::to_string(id);
    throw std::invalid_argument(msg);
  }
  if (enc.terms.empty()) {
    throw std::invalid_argument("language " + std::to_string(language_id) + ": no observations");
  }

  enc.cond = Matrix(static_cast<std::size_t>(n_chips), enc.terms.size(), 0.0);
  for (int c = 0; c < n_chips; ++c) {
    const auto& row = counts[static_cast<std::size_t>(c)];
    double total = 0.0;
    for (double x : row) total += x;
    for (std::size_t w = 0; w < row.size(); ++w) {
      enc.cond(static_cast<std::size_t>(c), w) = row[w] / total;
    }
  }
  return enc;
}

ModeMap mode_map(const LanguageEncoder& encoder) {
  ModeMap map(encoder.cond.rows(), 0);
  for (std::size_t c = 0; c < encoder.cond.rows(); ++c) {
    auto row = encoder.cond.row(c);
    std::size_t best = 0;
    for (std::size_t w = 1; w < row.size(); ++w) {
      if (row[w] > row[best]) best = w;  // strict: ties keep the lowest index
    }
    map[c] = static_cast<int>(best);
  }
  return map;
}

int frequent_term_count(const LanguageEncoder& encoder) {
  ModeMap map = mode_map(encoder);
  std::set<int> modal(map.begin(), map.end());
  return static_cast<int>(modal.size());
}

std::vector<LanguageEncoder> estimate_all_encoders(const std::vector<NamingObservation>& observations,
                                                   int n_chips) {
  std::set<int> ids;
  for (const NamingObservation& obs : observations) ids.insert(obs.language_id);
  std::vector<LanguageEncoder> encoders;
  encoders.reserve(ids.size());
  for (int id : ids) {
    encoders.push_back(estimate_encoder(observations, id, n_chips));
  }
  return encoders;
}

}  // namespace ibcolor
