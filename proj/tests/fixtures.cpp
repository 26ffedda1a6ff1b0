#include "fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "ibcolor/rng.hpp"

namespace ibcolor::testing {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Palette synthetic_palette() {
  // Deterministic jitter keeps the grid from being perfectly symmetric;
  // a symmetric ring makes the whole lexicon split in one degenerate phase
  // transition, which no real stimulus set does.
  SplitMix64 jitter(0x57c5u);
  auto wobble = [&] { return 3.0 * (jitter.uniform() - 0.5); };

  Palette palette;
  int id = 1;
  // Achromatic column: A0..J0.
  for (int r = 0; r < 10; ++r) {
    ColorChip chip;
    chip.id = id++;
    chip.grid_row = static_cast<char>('A' + r);
    chip.grid_col = 0;
    chip.lab = {96.0 - 9.0 * r + wobble(), wobble(), wobble()};
    chip.munsell = "N" + std::to_string(10 - r);
    palette.chips.push_back(chip);
  }
  // Chromatic grid: rows B..I, columns 1..40.
  for (int r = 1; r <= 8; ++r) {
    double lightness = 96.0 - 9.0 * r;
    double chroma = 20.0 + 12.0 * std::sin(kPi * r / 9.0);
    for (int c = 1; c <= 40; ++c) {
      double hue = 2.0 * kPi * (c - 1) / 40.0;
      ColorChip chip;
      chip.id = id++;
      chip.grid_row = static_cast<char>('A' + r);
      chip.grid_col = c;
      chip.lab = {lightness + wobble(), chroma * std::cos(hue) + wobble(),
                  chroma * std::sin(hue) + wobble()};
      chip.munsell = "H" + std::to_string(c) + "V" + std::to_string(r);
      palette.chips.push_back(chip);
    }
  }
  palette.validate();
  return palette;
}

Palette synthetic_subpalette(std::size_t n) {
  Palette full = synthetic_palette();
  if (n > full.size()) throw std::invalid_argument("subpalette larger than palette");
  Palette sub;
  sub.chips.assign(full.chips.begin(), full.chips.begin() + static_cast<std::ptrdiff_t>(n));
  return sub;
}

Palette toy_palette(const std::vector<Lab>& labs) {
  Palette palette;
  for (std::size_t i = 0; i < labs.size(); ++i) {
    ColorChip chip;
    chip.id = static_cast<int>(i) + 1;
    chip.grid_row = static_cast<char>('B' + i / 40);
    chip.grid_col = static_cast<int>(i % 40) + 1;
    chip.lab = labs[i];
    palette.chips.push_back(chip);
  }
  return palette;
}

std::string chip_table_text(const Palette& palette) {
  std::string out;
  for (const ColorChip& c : palette.chips) {
    out += std::to_string(c.id) + "\t" + std::string(1, c.grid_row) + "\t" +
           std::to_string(c.grid_col) + "\t" + c.munsell + "\n";
  }
  return out;
}

std::string lab_table_text(const Palette& palette) {
  std::string out = "#cnum\tV\tH\tL*\ta*\tb*\n";
  char buf[128];
  for (const ColorChip& c : palette.chips) {
    std::snprintf(buf, sizeof(buf), "%d\t%c\t%d\t%.17g\t%.17g\t%.17g\n", c.id, c.grid_row,
                  c.grid_col, c.lab[0], c.lab[1], c.lab[2]);
    out += buf;
  }
  return out;
}

std::string term_file_text(const Palette& palette, const std::vector<SyntheticLanguage>& languages,
                           std::uint64_t seed) {
  std::string out;
  const std::size_t n = palette.size();
  for (const SyntheticLanguage& lang : languages) {
    SplitMix64 rng(derive_seed(seed, "lang", static_cast<std::uint64_t>(lang.language_id)));

    // Farthest-point sample of focal chips.
    std::vector<std::size_t> focals;
    focals.push_back(rng.below(n));
    while (focals.size() < static_cast<std::size_t>(lang.n_terms)) {
      std::size_t best = 0;
      double best_d = -1.0;
      for (std::size_t c = 0; c < n; ++c) {
        double nearest = 1e300;
        for (std::size_t f : focals) {
          nearest = std::min(nearest, cielab_distance(palette.chips[c].lab, palette.chips[f].lab));
        }
        if (nearest > best_d) {
          best_d = nearest;
          best = c;
        }
      }
      focals.push_back(best);
    }

    // Soft-Voronoi naming distribution per chip.
    const double kappa = 400.0;  // (20 dE)^2
    for (std::size_t c = 0; c < n; ++c) {
      Vec weights(focals.size());
      double total = 0.0;
      for (std::size_t f = 0; f < focals.size(); ++f) {
        double d = cielab_distance(palette.chips[c].lab, palette.chips[focals[f]].lab);
        weights[f] = std::exp(-d * d / (2.0 * kappa));
        total += weights[f];
      }
      for (int s = 0; s < lang.n_speakers; ++s) {
        double u = rng.uniform() * total;
        std::size_t pick = 0;
        double acc = 0.0;
        for (std::size_t f = 0; f < focals.size(); ++f) {
          acc += weights[f];
          if (u <= acc) {
            pick = f;
            break;
          }
        }
        out += std::to_string(lang.language_id) + "\t" + std::to_string(s + 1) + "\t" +
               std::to_string(palette.chips[c].id) + "\tt" + std::to_string(pick) + "\n";
      }
    }
  }
  return out;
}

Matrix random_encoder(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = 0.02 + rng.uniform();
  }
  normalize_rows(m);
  return m;
}

Vec random_prior(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Vec p(n);
  double total = 0.0;
  for (double& x : p) {
    x = 0.05 + rng.uniform();
    total += x;
  }
  for (double& x : p) x /= total;
  return p;
}

FixtureFiles write_fixture_files(const std::filesystem::path& dir,
                                 const std::vector<SyntheticLanguage>& languages,
                                 std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  Palette palette = synthetic_palette();
  FixtureFiles files;
  files.chip = dir / "chip.txt";
  files.lab = dir / "cnum-vhcm-lab.txt";
  files.term = dir / "term.txt";
  std::ofstream(files.chip) << chip_table_text(palette);
  std::ofstream(files.lab) << lab_table_text(palette);
  std::ofstream(files.term) << term_file_text(palette, languages, seed);
  return files;
}

}  // namespace ibcolor::testing
