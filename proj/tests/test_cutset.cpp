#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "carpetlab/cutset.hpp"
#include "carpetlab/modgraph.hpp"

#include <cmath>

using namespace carpetlab;
using namespace carpetlab::carpet;
using namespace carpetlab::cutset;

namespace {
std::uint64_t splitmix(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

TEST_CASE("l_of values") {
    CHECK(l_of(Rat(1, 3)) == 1);
    CHECK(l_of(Rat(1, 5)) == 1);
    CHECK(l_of(Rat(1, 7)) == 2);
    CHECK(l_of(Rat(1, 9)) == 3);
    CHECK_THROWS_AS(l_of(Rat(1, 4)), std::invalid_argument);
    CHECK_THROWS_AS(l_of(Rat(2, 5)), std::invalid_argument);
}

TEST_CASE("fold is an exact involution on triangle samples") {
    auto seq = ScaleSequence::validate({3, 3, 3});
    FoldData fd(seq, 2);
    std::uint64_t st = 7;
    int inside = 0;
    for (int i = 1; i <= 2; ++i) {
        const auto& lv = fd.levels()[i - 1];
        REQUIRE(!lv.triangles.empty());
        for (const auto& t : lv.triangles) {
            // Sample convex combinations of the triangle corners.
            for (int k = 0; k < 40; ++k) {
                Rat a(1 + (std::int64_t)(splitmix(st) % 97), 100);
                Rat b(1 + (std::int64_t)(splitmix(st) % 97), 100);
                if (a + b > 1) {
                    a = Rat(1) - a;
                    b = Rat(1) - b;
                }
                Rat c = Rat(1) - a - b;
                RPoint p{a * t.tri.pts[0].x + b * t.tri.pts[1].x + c * t.tri.pts[2].x,
                         a * t.tri.pts[0].y + b * t.tri.pts[1].y + c * t.tri.pts[2].y};
                RPoint q = fd.fold(p, i);
                CHECK(fd.fold(q, i) == p);
                ++inside;
            }
        }
    }
    CHECK(inside >= 1000);
    // Identity off the triangles; fixed points on the diagonal.
    RPoint far{Rat(1, 100), Rat(1, 100)};
    CHECK(fd.fold(far, 1) == far);
    const auto& t0 = fd.levels()[0].triangles[0];
    RPoint corner = t0.tri.pts[0];
    RPoint image = t0.reflect(corner);
    RPoint diag_mid{(corner.x + image.x) / 2, (corner.y + image.y) / 2};
    CHECK(fd.fold(diag_mid, 1) == diag_mid);
}

TEST_CASE("measure bound products") {
    auto seq = ScaleSequence::validate({3, 3});
    FoldData fd1(seq, 1);
    CHECK(fd1.measure_bound() == Rat(179, 180));
    FoldData fd0(seq, 0);
    CHECK(fd0.measure_bound() == Rat(1));
    CHECK(fd0.unfold_set().excluded.empty());
    auto [lo, hi] = fd0.measure_exact(1);
    CHECK(lo == Rat(1));
    CHECK(hi == Rat(1));
}

TEST_CASE("measure bound strictly decreasing") {
    auto seq = ScaleSequence::validate({3, 5, 3, 5});
    Rat prev(2);
    for (int n = 0; n <= 3; ++n) {
        FoldData fd(seq, n);
        Rat b = fd.measure_bound();
        CHECK(b < prev);
        prev = b;
    }
}

TEST_CASE("rect collections are pairwise disjoint including the 1/3 exception") {
    for (auto raw : {std::vector<int>{3, 3, 3, 3}, std::vector<int>{3, 5, 3, 5},
                     std::vector<int>{5, 5, 5, 5}}) {
        auto seq = ScaleSequence::validate(raw);
        FoldData fd(seq, 3);
        std::vector<RRect> all;
        for (const auto& lv : fd.levels()) {
            for (const auto& r : lv.rects) all.push_back(r);
        }
        for (size_t i = 0; i < all.size(); ++i) {
            for (size_t j = i + 1; j < all.size(); ++j) {
                CHECK_FALSE(all[i].overlaps_interior(all[j]));
            }
        }
        // At least one flank survives next to every removed square.
        for (int i = 1; i <= 3; ++i) {
            CHECK(fd.levels()[i - 1].rects.size() >= (size_t)seq.cell_count(i - 1));
        }
    }
}

TEST_CASE("measure_exact brackets and respects the bound") {
    auto seq = ScaleSequence::validate({3, 3, 3});
    FoldData fd(seq, 1);
    std::int64_t partial = 0;
    auto [lo, hi] = fd.measure_exact(2, &partial);
    CHECK(lo < Rat(1));  // some mass removed
    CHECK(lo <= hi);
    Rat slack = Rat(partial) / seq.cell_count(2);
    CHECK(hi <= fd.measure_bound() + slack);
}

TEST_CASE("crossing length clipping against the unfolded region") {
    auto seq = ScaleSequence::validate({3, 3, 3});
    FoldData fd(seq, 1);
    std::vector<RPoint> line{{Rat(0), Rat(0)}, {Rat(1), Rat(0)}};
    CHECK(fd.crossing_length_in(line, 2) == doctest::Approx(1.0));
    // After unfolding, only the flank rectangles are deleted (the triangles
    // fold back); a vertical crossing through the left flank loses exactly
    // the rectangle chord 1/9.
    auto cut = fd.unfold_set();
    Rat rect_area(0);
    for (const auto& p : cut.excluded) rect_area += p.area();
    CHECK(rect_area == Rat(2, 81));  // two 1/9 x 1/9 flank squares
    std::vector<RPoint> vline{{Rat(5, 18), Rat(0)}, {Rat(5, 18), Rat(1)}};
    CHECK(fd.crossing_length_in(vline, 2) == doctest::Approx(8.0 / 9.0));
    // n = 0: plain Euclidean length.
    FoldData fd0(seq, 0);
    CHECK(fd0.crossing_length_in(line, 1) == doctest::Approx(1.0));
    CHECK_THROWS_AS(
        fd0.crossing_length_in({{Rat(1, 2), Rat(1, 2)}, {Rat(1), Rat(1, 2)}}, 1),
        std::invalid_argument);
}

TEST_CASE("discrete shortest crossing keeps length above 0.9") {
    auto seq = ScaleSequence::validate({3, 3, 3, 3});
    for (int n = 1; n <= 2; ++n) {
        int M = n + 2;
        FoldData fd(seq, n);
        auto g = modgraph::build_grid(seq, M);
        std::vector<double> ones(g.size(), 1.0);
        auto [len, path] = modgraph::shortest_path(g, modgraph::crossing_family(g), ones);
        REQUIRE(!path.empty());
        // Cell-center polyline extended to the two edges.
        std::vector<RPoint> poly;
        const Rat& s = seq.side(M);
        auto center = [&](int node) {
            return RPoint{Rat(2 * g.coords[node].first + 1) * s / 2,
                          Rat(2 * g.coords[node].second + 1) * s / 2};
        };
        RPoint first = center(path.front());
        poly.push_back(RPoint{Rat(0), first.y});
        for (int node : path) poly.push_back(center(node));
        poly.push_back(RPoint{Rat(1), poly.back().y});
        double len_in = fd.crossing_length_in(poly, M);
        INFO("n=", n, " M=", M, " cells=", path.size(), " len=", len_in);
        CHECK(len_in >= 0.9);
        (void)len;
    }
}
