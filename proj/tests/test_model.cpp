#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "supermem/model.hpp"

using namespace supermem;

TEST_CASE("tail_from_hist counts by hand") {
  MicroState s;
  s.hist = {1, 0, 2};  // one empty queue, two of length 2
  s.mem_len = 2;
  TailVector z = tail_from_hist(s, 3);
  REQUIRE(z.size() == 2);
  CHECK(z[0] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(z[1] == doctest::Approx(2.0 / 3).epsilon(1e-15));
}

TEST_CASE("tail_from_hist trivial cases") {
  CHECK(tail_from_hist(MicroState::empty(5), 5).empty());
  MicroState s;
  s.hist = {0, 2};
  s.mem_len = 1;
  TailVector z = tail_from_hist(s, 2);
  REQUIRE(z.size() == 1);
  CHECK(z[0] == 1.0);
}

TEST_CASE("tail vectors are non-increasing with integer counts") {
  MicroState s;
  s.hist = {3, 2, 0, 4, 1};
  s.mem_len = 3;
  TailVector z = tail_from_hist(s, 10);
  for (size_t k = 1; k < z.size(); ++k) CHECK(z[k] <= z[k - 1]);
  for (double v : z) {
    double c = v * 10;
    CHECK(std::abs(c - std::round(c)) < 1e-9);
  }
}

TEST_CASE("validate flags the broken invariants") {
  MicroState ok;
  ok.hist = {1, 2};
  ok.mem_len = 1;
  CHECK(validate(ok, 3).empty());

  MicroState short_count = ok;
  short_count.hist = {1, 1};
  auto v = validate(short_count, 3);
  REQUIRE(!v.empty());
  CHECK(v[0].find("count != N") != std::string::npos);

  MicroState no_mem = ok;
  no_mem.mem_len = 3;
  v = validate(no_mem, 3);
  bool found = false;
  for (const auto& msg : v)
    if (msg.find("memory queue absent") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("model params validation") {
  ModelParams p{0.5, 1, 10};
  CHECK_NOTHROW(p.validate());
  p.lambda = 1.2;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.lambda = 0.5;
  p.n = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.n = 1;
  p.N = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("sorted lengths round trip through the histogram") {
  SortedLengths s;
  s.y = {3, 0, 0, 1, 2, 2};  // y[0] is the memory queue
  MicroState m = s.to_micro();
  CHECK(validate(m, 6).empty());
  CHECK(m.mem_len == 3);
  TailVector z = tail_from_hist(m, 6);
  // tails of the sorted vector by hand: >=1: 4/6, >=2: 3/6, >=3: 1/6
  REQUIRE(z.size() == 3);
  CHECK(z[0] == doctest::Approx(4.0 / 6));
  CHECK(z[1] == doctest::Approx(3.0 / 6));
  CHECK(z[2] == doctest::Approx(1.0 / 6));
}

TEST_CASE("fluid vector conventions and domain") {
  FluidVector x({0.8, 0.5, 0.1});
  CHECK(x.at(0) == 1.0);
  CHECK(x.at(2) == 0.5);
  CHECK(x.at(4) == 0.0);
  CHECK(x.in_domain());
  CHECK_FALSE(FluidVector({0.5, 0.8}).in_domain());
  CHECK_FALSE(FluidVector({1.2}).in_domain());
}
