#pragma once

// The perceptual environment: color chips with CIELAB coordinates and the
// Gaussian meaning distributions centered on them. A meaning m_c is a
// distribution over chips, m_c(y) proportional to exp(-|y-c|^2 / (2 sigma^2)),
// normalized over the discrete palette.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "ibcolor/matrix.hpp"

namespace ibcolor {

using Lab = std::array<double, 3>;  // L*, a*, b*

struct ColorChip {
  int id = 0;        // 1-based chip number
  char grid_row = 0; // 'A'..'J'
  int grid_col = 0;  // 0 for achromatic, 1..40 for chromatic
  Lab lab{0.0, 0.0, 0.0};
  std::string munsell;
};

// Chips kept in ascending id order so every matrix in the project indexes
// them consistently (row/col i <-> chips[i]).
struct Palette {
  std::vector<ColorChip> chips;

  std::size_t size() const { return chips.size(); }
  // Throws std::invalid_argument on duplicate ids, duplicate grid cells,
  // out-of-range grid coordinates or ids not sorted ascending.
  void validate() const;
};

// CIELAB-1976 Euclidean difference. Throws on non-finite coordinates.
double cielab_distance(const Lab& a, const Lab& b);

struct MeaningSpace {
  double sigma_sq = 0.0;
  Palette palette;
  Matrix rows;  // N x N, row c = m_c(y)

  std::size_t size() const { return rows.rows(); }
};

// One Gaussian meaning as a distribution over the palette. sigma_sq must be
// positive.
Vec build_meaning(const ColorChip& center, const Palette& palette, double sigma_sq);

MeaningSpace build_meaning_space(const Palette& palette, double sigma_sq);

}  // namespace ibcolor
