#include <cmath>
#include <doctest.h>
#include <limits>
#include <sstream>

#include "fixtures.hpp"
#include "ibcolor/info.hpp"
#include "ibcolor/meaning_space.hpp"
#include "ibcolor/wcs.hpp"

using namespace ibcolor;
namespace fx = ibcolor::testing;

TEST_CASE("cielab distance") {
  CHECK(cielab_distance({50, 0, 0}, {50, 0, 0}) == 0.0);
  CHECK(cielab_distance({50, 0, 0}, {50, 3, 4}) == doctest::Approx(5.0));
  CHECK(cielab_distance({50, 3, 4}, {50, 0, 0}) == cielab_distance({50, 0, 0}, {50, 3, 4}));
  double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(cielab_distance({inf, 0, 0}, {0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(cielab_distance({0, 0, 0}, {0, std::nan(""), 0}), std::invalid_argument);
}

TEST_CASE("cielab distance on parsed lab rows matches a hand computation") {
  Palette palette = fx::synthetic_palette();
  std::istringstream lab_in(fx::lab_table_text(palette));
  auto labs = parse_lab_table(lab_in);
  Lab a = labs.at(1), b = labs.at(2);
  double expected = std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                              (a[2] - b[2]) * (a[2] - b[2]));
  CHECK(cielab_distance(a, b) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("build_meaning near-zero sigma degenerates to a point mass") {
  Palette palette = fx::toy_palette({{0, 0, 0}, {10, 0, 0}, {20, 0, 0}});
  Vec m = build_meaning(palette.chips[1], palette, 1e-9);
  CHECK(m[1] == doctest::Approx(1.0));
  CHECK(m[0] == doctest::Approx(0.0));
  CHECK(m[2] == doctest::Approx(0.0));
}

TEST_CASE("build_meaning huge sigma approaches uniform") {
  Palette palette = fx::synthetic_palette();
  Vec m = build_meaning(palette.chips[7], palette, 1e12);
  for (double p : m) CHECK(p == doctest::Approx(1.0 / 330.0).epsilon(1e-6));
}

TEST_CASE("build_meaning matches the closed-form three-chip oracle") {
  // Chips on a line at distances {0, 10, 20} from the center, sigma^2 = 64.
  Palette palette = fx::toy_palette({{0, 0, 0}, {10, 0, 0}, {20, 0, 0}});
  double w0 = std::exp(-0.0 / 128.0);
  double w1 = std::exp(-100.0 / 128.0);
  double w2 = std::exp(-400.0 / 128.0);
  double z = w0 + w1 + w2;
  Vec m = build_meaning(palette.chips[0], palette, 64.0);
  CHECK(m[0] == doctest::Approx(w0 / z).epsilon(1e-14));
  CHECK(m[1] == doctest::Approx(w1 / z).epsilon(1e-14));
  CHECK(m[2] == doctest::Approx(w2 / z).epsilon(1e-14));
}

TEST_CASE("build_meaning rejects bad sigma") {
  Palette palette = fx::toy_palette({{0, 0, 0}});
  CHECK_THROWS_AS(build_meaning(palette.chips[0], palette, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_meaning(palette.chips[0], palette, -1.0), std::invalid_argument);
}

TEST_CASE("build_meaning_space on a single chip") {
  Palette palette = fx::toy_palette({{50, 10, -3}});
  MeaningSpace space = build_meaning_space(palette, 64.0);
  CHECK(space.rows.rows() == 1);
  CHECK(space.rows(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("meaning space rows are normalized distributions peaked at their center") {
  Palette palette = fx::synthetic_palette();
  MeaningSpace space = build_meaning_space(palette, 64.0);
  REQUIRE(space.rows.rows() == 330);
  for (std::size_t c = 0; c < 330; ++c) {
    auto row = space.rows.row(c);
    double total = 0.0;
    std::size_t argmax = 0;
    for (std::size_t y = 0; y < row.size(); ++y) {
      total += row[y];
      if (row[y] > row[argmax]) argmax = y;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(argmax == c);
  }
}

TEST_CASE("meaning rows are monotone in perceptual distance") {
  Palette palette = fx::synthetic_subpalette(60);
  MeaningSpace space = build_meaning_space(palette, 64.0);
  for (std::size_t c = 0; c < palette.size(); c += 7) {
    for (std::size_t y1 = 0; y1 < palette.size(); ++y1) {
      for (std::size_t y2 = 0; y2 < palette.size(); ++y2) {
        double d1 = cielab_distance(palette.chips[y1].lab, palette.chips[c].lab);
        double d2 = cielab_distance(palette.chips[y2].lab, palette.chips[c].lab);
        if (d1 <= d2) CHECK(space.rows(c, y1) >= space.rows(c, y2));
      }
    }
  }
}

TEST_CASE("doubling sigma_sq increases the entropy of every row") {
  Palette palette = fx::synthetic_subpalette(40);
  MeaningSpace narrow = build_meaning_space(palette, 64.0);
  MeaningSpace wide = build_meaning_space(palette, 128.0);
  for (std::size_t c = 0; c < palette.size(); ++c) {
    Vec a(narrow.rows.row(c).begin(), narrow.rows.row(c).end());
    Vec b(wide.rows.row(c).begin(), wide.rows.row(c).end());
    CHECK(entropy_bits(b) > entropy_bits(a));
  }
}

TEST_CASE("palette validation rejects duplicates and bad grids") {
  Palette p = fx::toy_palette({{0, 0, 0}, {1, 0, 0}});
  p.chips[1].id = p.chips[0].id;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);

  Palette q = fx::toy_palette({{0, 0, 0}, {1, 0, 0}});
  q.chips[1].grid_row = q.chips[0].grid_row;
  q.chips[1].grid_col = q.chips[0].grid_col;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);

  Palette r = fx::toy_palette({{0, 0, 0}});
  r.chips[0].grid_row = 'A';  // chromatic column in an achromatic row
  r.chips[0].grid_col = 5;
  CHECK_THROWS_AS(r.validate(), std::invalid_argument);
}
