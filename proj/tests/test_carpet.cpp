#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "carpetlab/carpet.hpp"

using namespace carpetlab;
using namespace carpetlab::carpet;

TEST_CASE("validate_sequence products") {
    auto s = ScaleSequence::validate({3, 5});
    CHECK(s.side(1) == Rat(1, 3));
    CHECK(s.side(2) == Rat(1, 15));
    CHECK(s.cell_count(1) == 8);
    CHECK(s.cell_count(2) == 192);
    CHECK(s.l1_partial(2) == Rat(1, 3) + Rat(1, 5));
    CHECK(s.l2_partial(2) == Rat(1, 9) + Rat(1, 25));

    auto t = ScaleSequence::validate({3, 3, 3});
    CHECK(t.cell_count(3) == 512);
    CHECK(t.side(3) == Rat(1, 27));
}

TEST_CASE("validate_sequence rejects bad entries") {
    CHECK_THROWS_WITH_AS(ScaleSequence::validate({4}), "denominator must be odd (index 0)",
                         std::invalid_argument);
    CHECK_THROWS_AS(ScaleSequence::validate({3, 1}), std::invalid_argument);
    CHECK_THROWS_AS(ScaleSequence::validate({}), std::invalid_argument);
}

TEST_CASE("is_retained center rules") {
    auto s3 = ScaleSequence::validate({3});
    CHECK_FALSE(is_retained(s3, CellAddress{{{1, 1}}}));
    CHECK(is_retained(s3, CellAddress{{{0, 2}}}));

    auto s35 = ScaleSequence::validate({3, 5});
    CHECK_FALSE(is_retained(s35, CellAddress{{{0, 0}, {2, 2}}}));
    CHECK(is_retained(s35, CellAddress{{{0, 0}, {2, 1}}}));

    CHECK_THROWS_AS(is_retained(s3, CellAddress{{{3, 0}}}), std::out_of_range);
}

TEST_CASE("is_retained is prefix-monotone") {
    auto s = ScaleSequence::validate({3, 5, 3});
    for_each_cell(s, 3, [&](const CellAddress& a) {
        CellAddress prefix;
        for (auto d : a.digits) {
            prefix.digits.push_back(d);
            CHECK(is_retained(s, prefix));
        }
    });
}

TEST_CASE("contains membership") {
    auto s3 = ScaleSequence::validate({3});
    CHECK_FALSE(contains(s3, RPoint{Rat(1, 2), Rat(1, 2)}, 1));
    CHECK(contains(s3, RPoint{Rat(1, 3), Rat(1, 2)}, 1));  // boundary of removed square
    auto s35 = ScaleSequence::validate({3, 5});
    CHECK_FALSE(contains(s35, RPoint{Rat(1, 2), Rat(1, 2)}, 2));
    CHECK(contains(s35, RPoint{Rat(0), Rat(0)}, 2));
}

TEST_CASE("contains is nested across levels") {
    auto s = ScaleSequence::validate({3, 5});
    // Points sampled on a coarse rational grid.
    for (int ix = 0; ix <= 20; ++ix) {
        for (int iy = 0; iy <= 20; ++iy) {
            RPoint p{Rat(ix, 20), Rat(iy, 20)};
            if (contains(s, p, 2)) CHECK(contains(s, p, 1));
        }
    }
}

TEST_CASE("area and cantor length products") {
    auto s = ScaleSequence::validate({3, 5});
    CHECK(precarpet_area(s, 2) == Rat(64, 75));
    CHECK(cantor_length(s, 2) == Rat(8, 15));
    CHECK(precarpet_area(s, 0) == Rat(1));
    CHECK(cantor_length(s, 0) == Rat(1));
    auto s3 = ScaleSequence::validate({3});
    CHECK(precarpet_area(s3, 1) == Rat(8, 9));
    CHECK(cantor_length(s3, 1) == Rat(2, 3));
}

TEST_CASE("enumerate_cells counts and order") {
    auto s3 = ScaleSequence::validate({3});
    auto cells = enumerate_cells(s3, 1);
    REQUIRE(cells.size() == 8);
    for (const auto& c : cells) CHECK_FALSE((c.digits[0] == std::pair<int, int>{1, 1}));
    // Lexicographic digit order.
    for (size_t i = 1; i < cells.size(); ++i) CHECK(cells[i - 1].digits < cells[i].digits);

    auto s35 = ScaleSequence::validate({3, 5});
    CHECK(enumerate_cells(s35, 2).size() == 192);
    CHECK(enumerate_cells(s35, 0).size() == 1);
}

TEST_CASE("cell footprint tiles the precarpet exactly") {
    auto s = ScaleSequence::validate({3, 5, 3});
    for (int m = 0; m <= 3; ++m) {
        Rat total(0);
        Rat cell_area = s.side(m) * s.side(m);
        for_each_cell(s, m, [&](const CellAddress&) { total += cell_area; });
        CHECK(total == precarpet_area(s, m));
    }
}

TEST_CASE("address serialization round trip") {
    CellAddress a{{{0, 2}, {4, 1}}};
    CHECK(address_to_string(a) == "0,2/4,1");
    CHECK(address_from_string("0,2/4,1") == a);
    auto s = ScaleSequence::validate({3, 5});
    auto g = global_of(s, a);
    CHECK(address_of(s, g) == a);
    CHECK(g.gx == 0 * 5 + 4);
    CHECK(g.gy == 2 * 5 + 1);
}

TEST_CASE("rational serialization") {
    CHECK(rat_to_string(Rat(8, 15)) == "8/15");
    CHECK(parse_rat("8/15") == Rat(8, 15));
    CHECK(parse_rat("0.25") == Rat(1, 4));
    CHECK(parse_rat("3") == Rat(3));
    CHECK(rat_to_decimal(Rat(1, 3), 6) == "0.333333");
}
