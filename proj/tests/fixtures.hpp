#pragma once

// Shared test fixtures: a synthetic 330-chip palette laid out on the WCS
// grid (rows A..J, achromatic column 0, chromatic columns 1..40), writers
// that emit it in the exact WCS file formats, and seeded synthetic naming
// data produced by soft-Voronoi speakers.

#include <filesystem>
#include <string>
#include <vector>

#include "ibcolor/matrix.hpp"
#include "ibcolor/meaning_space.hpp"
#include "ibcolor/wcs.hpp"

namespace ibcolor::testing {

// 330 chips: lightness falls with the row letter, chromatic chips circle the
// hue wheel with row-dependent chroma. Deterministic closed form.
Palette synthetic_palette();

// First n chips of the synthetic palette re-labelled as a valid palette.
Palette synthetic_subpalette(std::size_t n);

// Tiny palette from explicit CIELAB triples (grid cells assigned B1, B2...).
Palette toy_palette(const std::vector<Lab>& labs);

std::string chip_table_text(const Palette& palette);
std::string lab_table_text(const Palette& palette);

struct SyntheticLanguage {
  int language_id = 0;
  int n_terms = 0;
  int n_speakers = 0;
};

// term.txt-format rows for seeded soft-Voronoi languages: each language gets
// k focal chips (farthest-point sample) and every speaker names every chip by
// sampling from a Gaussian-weighted focal assignment.
std::string term_file_text(const Palette& palette, const std::vector<SyntheticLanguage>& languages,
                           std::uint64_t seed);

// Random row-stochastic matrix with strictly positive entries.
Matrix random_encoder(std::size_t rows, std::size_t cols, std::uint64_t seed);

// Random strictly positive distribution.
Vec random_prior(std::size_t n, std::uint64_t seed);

// Writes chip.txt, cnum-vhcm-lab.txt and term.txt fixtures into dir.
struct FixtureFiles {
  std::filesystem::path chip;
  std::filesystem::path lab;
  std::filesystem::path term;
};
FixtureFiles write_fixture_files(const std::filesystem::path& dir,
                                 const std::vector<SyntheticLanguage>& languages,
                                 std::uint64_t seed);

}  // namespace ibcolor::testing
