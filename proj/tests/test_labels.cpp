// Copyright (c) 2026 The chaindiar authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <limits>

#include "chaindiar/labels.hpp"
#include "chaindiar/rng.hpp"
#include "doctest.h"

using namespace chaindiar;

namespace {
BinaryMatrix from_rows(const std::vector<std::vector<int>>& rows) {
  BinaryMatrix m(static_cast<Index>(rows.size()),
                 rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Index>(r), static_cast<Index>(c)) =
          static_cast<std::uint8_t>(rows[r][c]);
  return m;
}
}  // namespace

TEST_CASE("derive_sad basics") {
  CHECK((derive_sad(from_rows({{0, 0, 0, 0}})).array() == 0).all());

  BinaryVector sad = derive_sad(from_rows({{1, 1, 0, 0}, {0, 1, 1, 0}}));
  BinaryVector want = derive_sad(from_rows({{1, 1, 1, 0}}));
  CHECK(sad == want);

  BinaryMatrix one = from_rows({{1, 0, 1, 1}});
  CHECK(derive_sad(one) == BinaryVector(one.row(0).transpose()));
}

TEST_CASE("derive_od basics") {
  CHECK((derive_od(from_rows({{1, 1, 0, 1}})).array() == 0).all());

  BinaryVector od = derive_od(from_rows({{1, 1, 0, 0}, {0, 1, 1, 0}}));
  CHECK(od == derive_sad(from_rows({{0, 1, 0, 0}})));

  // indicator, not a count: three simultaneous speakers still give 1
  BinaryVector od3 = derive_od(from_rows({{1}, {1}, {1}}));
  CHECK(od3(0) == 1);
}

TEST_CASE("sad/od match brute-force per-column evaluation exactly") {
  Rng rng(123);
  for (int trial = 0; trial < 1000; ++trial) {
    const Index s = static_cast<Index>(uniform_int(rng, 8));  // up to 7 rows
    const Index t = 1 + static_cast<Index>(uniform_int(rng, 64));
    BinaryMatrix a(s, t);
    for (Index r = 0; r < s; ++r)
      for (Index c = 0; c < t; ++c)
        a(r, c) = coin(rng, 0.4) ? 1 : 0;

    BinaryVector sad = derive_sad(a);
    BinaryVector od = derive_od(a);
    for (Index c = 0; c < t; ++c) {
      int count = 0;
      for (Index r = 0; r < s; ++r) count += a(r, c);
      REQUIRE(sad(c) == (count >= 1 ? 1 : 0));
      REQUIRE(od(c) == (count >= 2 ? 1 : 0));
      REQUIRE(od(c) <= sad(c));  // overlap implies speech
    }
  }
}

TEST_CASE("threshold is strict at 0.5") {
  Vector p(2);
  p << 0.49, 0.51;
  BinaryVector d = threshold(p);
  CHECK(d(0) == 0);
  CHECK(d(1) == 1);

  Vector half(1);
  half << 0.5;
  CHECK(threshold(half)(0) == 0);
}

TEST_CASE("threshold matches the elementwise oracle and is idempotent") {
  Rng rng(77);
  Vector p(64);
  for (Index t = 0; t < p.size(); ++t) p(t) = uniform_real(rng);
  BinaryVector d = threshold(p);
  for (Index t = 0; t < p.size(); ++t)
    CHECK(d(t) == (p(t) > 0.5 ? 1 : 0));

  Vector as_probs(64);
  for (Index t = 0; t < 64; ++t) as_probs(t) = static_cast<Scalar>(d(t));
  CHECK(threshold(as_probs) == d);
}

TEST_CASE("threshold rejects NaN") {
  Vector p(2);
  p << 0.3, std::numeric_limits<Scalar>::quiet_NaN();
  CHECK_THROWS_AS(threshold(p), NumericError);
}
