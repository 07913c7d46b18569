#include "doctest.h"

#include <cmath>
#include <limits>

#include "pinlab/csv.hpp"
#include "support.hpp"

using namespace pinlab;

TEST_CASE("quoting only when needed") {
    CHECK(csv::quote("plain") == "plain");
    CHECK(csv::quote("a,b") == "\"a,b\"");
    CHECK(csv::quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv::quote("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("parse round-trips formatted rows including embedded newlines") {
    std::vector<csv::Row> rows{{"id", "text"}, {"1", "a, b"}, {"2", "line one\nline \"two\""}, {"3", ""}};
    std::string text;
    for (auto const& r : rows) text += csv::format_row(r) + "\n";
    CHECK(csv::parse(text) == rows);
}

TEST_CASE("number is round-trippable") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678901234567, 1e300}) CHECK(csv::parse_number(csv::number(x)) == x);
    CHECK(csv::number(std::numeric_limits<double>::quiet_NaN()).empty());
    CHECK(std::isnan(csv::parse_number("")));
    CHECK(csv::parse_number(csv::number(-std::numeric_limits<double>::infinity())) ==
          -std::numeric_limits<double>::infinity());
}

TEST_CASE("files round-trip") {
    support::TempDir dir("csv");
    std::vector<csv::Row> rows{{"a", "b"}, {"1", "x,y"}};
    csv::write_file(dir / "t.csv", rows);
    CHECK(csv::read_file(dir / "t.csv") == rows);
}
