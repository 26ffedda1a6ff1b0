#include "ibcolor/meaning_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <utility>

namespace ibcolor {

void Palette::validate() const {
  if (chips.empty()) throw std::invalid_argument("palette is empty");
  std::set<int> ids;
  std::set<std::pair<char, int>> cells;
  int prev_id = 0;
  for (const ColorChip& c : chips) {
    if (c.id <= prev_id) throw std::invalid_argument("palette chips not in ascending id order");
    prev_id = c.id;
    if (!ids.insert(c.id).second) {
      throw std::invalid_argument("duplicate chip id " + std::to_string(c.id));
    }
    if (!cells.insert({c.grid_row, c.grid_col}).second) {
      throw std::invalid_argument("duplicate grid cell for chip " + std::to_string(c.id));
    }
    if (c.grid_row < 'A' || c.grid_row > 'J') {
      throw std::invalid_argument("grid row out of range for chip " + std::to_string(c.id));
    }
    if (c.grid_col < 0 || c.grid_col > 40) {
      throw std::invalid_argument("grid column out of range for chip " + std::to_string(c.id));
    }
    if (c.grid_col > 0 && (c.grid_row == 'A' || c.grid_row == 'J')) {
      throw std::invalid_argument("chromatic chip in achromatic row: chip " + std::to_string(c.id));
    }
  }
}

double cielab_distance(const Lab& a, const Lab& b) {
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw std::invalid_argument("cielab_distance: non-finite coordinate");
    }
  }
  double dl = a[0] - b[0];
  double da = a[1] - b[1];
  double db = a[2] - b[2];
  return std::sqrt(dl * dl + da * da + db * db);
}

Vec build_meaning(const ColorChip& center, const Palette& palette, double sigma_sq) {
  if (!(sigma_sq > 0.0)) throw std::invalid_argument("build_meaning: sigma_sq must be positive");
  if (palette.chips.empty()) throw std::invalid_argument("build_meaning: empty palette");

  const std::size_t n = palette.size();
  Vec log_w(n);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < n; ++y) {
    double d = cielab_distance(palette.chips[y].lab, center.lab);
    log_w[y] = -(d * d) / (2.0 * sigma_sq);
    max_log = std::max(max_log, log_w[y]);
  }
  // Shift before exponentiating so a near-zero sigma_sq degenerates to a
  // point mass instead of 0/0.
  Vec probs(n);
  double total = 0.0;
  for (std::size_t y = 0; y < n; ++y) {
    probs[y] = std::exp(log_w[y] - max_log);
    total += probs[y];
  }
  for (double& p : probs) p /= total;
  return probs;
}

MeaningSpace build_meaning_space(const Palette& palette, double sigma_sq) {
  palette.validate();
  const std::size_t n = palette.size();
  MeaningSpace space;
  space.sigma_sq = sigma_sq;
  space.palette = palette;
  space.rows = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    Vec m = build_meaning(palette.chips[c], palette, sigma_sq);
    auto row = space.rows.row(c);
    std::copy(m.begin(), m.end(), row.begin());
  }
  return space;
}

}  // namespace ibcolor
