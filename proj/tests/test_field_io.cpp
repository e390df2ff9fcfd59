#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "matzoh/errors.hpp"
#include "matzoh/field_io.hpp"

using namespace matzoh;

namespace {

ScalarField irrational_field() {
  auto grid = testing::grid_nd(2, 7, -1.0, 1.0);
  auto mask = testing::predicate_mask(grid, [](std::span<const double> x) {
    return std::hypot(x[0], x[1]) <= 1.01;
  });
  return ScalarField::sample(
      grid, mask,
      [](std::span<const double> x) { return std::sin(x[0] * 12.9898 + x[1] * 78.233) * 0.317; },
      1.0 / 3.0);
}

}  // namespace

TEST_SUITE("field_io") {

TEST_CASE("serialize / parse / serialize reproduces the text byte for byte") {
  const ScalarField f = irrational_field();
  const std::string text = field_to_string(f);
  const ScalarField back = field_from_string(text);
  CHECK(field_to_string(back) == text);

  // Values, structure and time tag survive exactly.
  CHECK(back.grid() == f.grid());
  CHECK(back.mask() == f.mask());
  CHECK(back.time() == f.time());
  for (std::size_t node = 0; node < f.grid().size(); ++node) {
    if (f.mask().is_exterior(node)) continue;
    CHECK(back.value(node) == f.value(node));
  }
}

TEST_CASE("serialized text uses LF line endings only") {
  const std::string text = field_to_string(irrational_field());
  CHECK(text.find('\r') == std::string::npos);
  CHECK(!text.empty());
  CHECK(text.back() == '\n');
}

TEST_CASE("exterior rows are written with value zero") {
  const ScalarField f = irrational_field();
  bool has_exterior = false;
  for (std::size_t node = 0; node < f.grid().size(); ++node)
    has_exterior = has_exterior || f.mask().is_exterior(node);
  REQUIRE(has_exterior);

  const std::string text = field_to_string(f);
  std::istringstream in(text);
  std::string line;
  bool checked = false;
  while (std::getline(in, line)) {
    if (line.size() >= 2 && line.substr(line.size() - 2) == " E") {
      // Row layout: i_1 ... i_N value mask.
      std::istringstream row(line);
      std::size_t i0, i1;
      double value;
      std::string mask_tag;
      row >> i0 >> i1 >> value >> mask_tag;
      CHECK(value == 0.0);
      CHECK(mask_tag == "E");
      checked = true;
    }
  }
  CHECK(checked);
}

TEST_CASE("file round trip through a directory") {
  testing::TempDir dir("field_io");
  const ScalarField f = irrational_field();
  const auto path = dir.path() / "snapshot.field";
  write_field(path, f);
  const ScalarField back = read_field(path);
  CHECK(field_to_string(back) == field_to_string(f));
}

TEST_CASE("malformed text is rejected") {
  CHECK_THROWS_AS(field_from_string("not a field\n"), Error);
  CHECK_THROWS_AS(field_from_string(""), Error);

  // Tamper with the node count.
  std::string text = field_to_string(irrational_field());
  text = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  CHECK_THROWS_AS(field_from_string(text), Error);
}

TEST_CASE("missing file is reported") {
  CHECK_THROWS_AS(read_field("/nonexistent/definitely/missing.field"), Error);
}

TEST_CASE("series round trip preserves order and times") {
  auto grid = testing::grid_1d(9, 0.0, 1.0);
  auto mask = testing::box_mask(grid);
  const TimeSeriesField series = testing::sample_series(
      grid, mask, [](std::span<const double> x, double t) { return std::exp(-t) * std::sin(x[0]); },
      {0.25, 0.5, 0.75, 1.0});

  testing::TempDir dir("series_io");
  write_series(dir.path(), series);
  const TimeSeriesField back = read_series(dir.path());
  REQUIRE(back.size() == series.size());
  for (std::size_t j = 0; j < series.size(); ++j) {
    CHECK(back.times()[j] == series.times()[j]);
    CHECK(field_to_string(back.snapshot(j)) == field_to_string(series.snapshot(j)));
  }
}

TEST_CASE("reading an empty directory fails") {
  testing::TempDir dir("series_empty");
  CHECK_THROWS_AS(read_series(dir.path()), Error);
}

}  // TEST_SUITE("field_io")
