#include <doctest.h>

#include <limits>
#include <random>

#include "neolus/csv.hpp"

using namespace neolus;

TEST_CASE("quoted fields, doubled quotes and CRLF") {
  const auto rows = csv::parse("a,\"b,c\",\"say \"\"hi\"\"\"\r\n1,,3\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b,c", "say \"hi\""});
  CHECK(rows[1] == std::vector<std::string>{"1", "", "3"});
}

TEST_CASE("escape round-trips through parse") {
  const std::vector<std::string> fields = {"plain", "with,comma", "with \"quote\"", "multi\nline", ""};
  const auto rows = csv::parse(csv::join(fields) + "\n");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0] == fields);
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(csv::format_double(0.1) == "0.1");
  CHECK(csv::format_double(450) == "450");
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(gen);
    CHECK(std::stod(csv::format_double(v)) == v);
  }
}
