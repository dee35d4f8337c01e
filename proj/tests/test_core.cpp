// Core vocabulary: deterministic vector arithmetic and checked operator
// evaluation.

#include "doctest.h"

#include "feg/core.hpp"
#include "feg/problems.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

using feg::OperatorHandle;
using feg::Vec;

namespace {

Vec v2(double a, double b) {
  Vec z(2);
  z << a, b;
  return z;
}

}  // namespace

TEST_CASE("vector_combine computes exact linear combinations") {
  const Vec e = v2(1, 0);
  const Vec s = v2(2, 4);
  const Vec u = v2(1, 1);
  const Vec w = v2(0, 2);

  Vec r = feg::vector_combine({{1.0, &e}, {-1.0, &e}});
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.0);

  r = feg::vector_combine({{0.5, &s}});
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 2.0);

  r = feg::vector_combine({{1.0, &u}, {0.5, &w}, {-1.0, &e}});
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 2.0);
}

TEST_CASE("vector_combine accumulates strictly left to right") {
  Vec big(1), neg(1), one(1);
  big << 1e16;
  neg << -1e16;
  one << 1.0;

  // (1e16 + -1e16) + 1 = 1 exactly, while (1 + 1e16) + -1e16 rounds the
  // intermediate sum and gives 0. Both outcomes are deterministic; which one
  // we get pins the summation order.
  Vec cancel_first = feg::vector_combine({{1.0, &big}, {1.0, &neg}, {1.0, &one}});
  CHECK(cancel_first[0] == 1.0);
  Vec one_first = feg::vector_combine({{1.0, &one}, {1.0, &big}, {1.0, &neg}});
  CHECK(one_first[0] == 0.0);
}

TEST_CASE("vector_combine is bitwise reproducible") {
  Vec a(3), b(3), c(3);
  a << 0.1, std::sqrt(2.0), -1.0 / 3.0;
  b << std::acos(-1.0), -0.7, 1e-9;
  c << 1e9, 2.0 / 7.0, -std::exp(1.0);
  const std::vector<std::pair<double, const Vec*>> terms = {
      {0.123456789, &a}, {-std::sqrt(3.0), &b}, {1.0 / 7.0, &c}};
  const Vec first = feg::vector_combine(terms);
  for (int rep = 0; rep < 10; ++rep) {
    const Vec again = feg::vector_combine(terms);
    for (int i = 0; i < 3; ++i) CHECK(again[i] == first[i]);
  }
}

TEST_CASE("vector_combine rejects bad input") {
  Vec a(2), b(3);
  a << 1, 2;
  b << 1, 2, 3;
  CHECK_THROWS_AS(feg::vector_combine({}), std::invalid_argument);
  CHECK_THROWS_AS(feg::vector_combine({{1.0, &a}, {1.0, &b}}),
                  std::invalid_argument);
}

TEST_CASE("all_finite flags NaN and infinity") {
  Vec z = v2(1.0, -2.0);
  CHECK(feg::all_finite(z));
  z[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(feg::all_finite(z));
  z[1] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(feg::all_finite(z));
}

TEST_CASE("evaluate_operator exact values on catalog problems") {
  const feg::ProblemSpec bil = feg::make_bilinear(1.0);
  Vec r = feg::evaluate_operator(bil, v2(1, 0));
  CHECK(r[0] == 0.0);
  CHECK(r[1] == -1.0);

  r = feg::evaluate_operator(bil, v2(0, 0));
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.0);

  const feg::ProblemSpec wc = feg::make_worst_case_smooth(1.0, 1.0);
  r = feg::evaluate_operator(wc, v2(0, 0));
  CHECK(r[0] == -1.0);
  CHECK(r[1] == -1.0);
}

TEST_CASE("evaluate_operator rejects dimension mismatch and non-finite input") {
  const feg::ProblemSpec bil = feg::make_bilinear(1.0);
  Vec z3(3);
  z3 << 1, 2, 3;
  CHECK_THROWS_AS(feg::evaluate_operator(bil, z3), std::invalid_argument);

  Vec z = v2(1, 0);
  z[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(feg::evaluate_operator(bil, z), std::invalid_argument);
}

TEST_CASE("evaluate_operator names the offending output coordinate") {
  OperatorHandle bad;
  bad.dim = 2;
  bad.eval = [](const Vec& z) {
    Vec out = z;
    out[1] = std::numeric_limits<double>::quiet_NaN();
    return out;
  };
  try {
    feg::evaluate_operator(bad, v2(1, 2));
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("coordinate 1") != std::string::npos);
  }
}

TEST_CASE("evaluate_operator is deterministic") {
  const feg::ProblemSpec p = feg::random_negative_comonotone(3, 4, -0.1);
  Vec z(4);
  z << 0.3, -1.7, std::sqrt(5.0), 0.25;
  const Vec first = feg::evaluate_operator(p, z);
  for (int rep = 0; rep < 5; ++rep) {
    const Vec again = feg::evaluate_operator(p, z);
    for (int i = 0; i < 4; ++i) CHECK(again[i] == first[i]);
  }
}

TEST_CASE("stationary threshold constant") {
  CHECK(feg::stationary_norm == 1e-14);
}
