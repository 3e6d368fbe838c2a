#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "carpetlab/measure.hpp"

#include <cmath>

using namespace carpetlab;
using namespace carpetlab::carpet;
using namespace carpetlab::measure;

namespace {

// Deterministic 64-bit mix, identical across platforms.
std::uint64_t splitmix(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
double unit_double(std::uint64_t& state) { return (splitmix(state) >> 11) * 0x1.0p-53; }

// Independent oracle: scan all retained level-M cells directly.
std::pair<Rat, Rat> ball_mass_oracle(const ScaleSequence& seq, const RPoint& x, const Rat& r,
                                     int M) {
    Rat lower(0), upper(0), r2 = r * r;
    Rat v = Rat(1) / seq.cell_count(M);
    for_each_cell(seq, M, [&](const CellAddress& a) {
        RRect rect = cell_rect(seq, a);
        if (rect_point_dist2(rect, x) >= r2) return;
        upper += v;
        if (rect_point_maxdist2(rect, x) < r2) lower += v;
    });
    return {lower, upper};
}

// Oracle for m(x,r): exhaustive scan of levels.
int m_of_x_r_oracle(const ScaleSequence& seq, const RPoint& x, const Rat& r) {
    Rat r2 = r * r;
    for (int m = 0; m <= seq.levels(); ++m) {
        for (const auto& c : cells_containing(seq, x, m)) {
            if (rect_point_maxdist2(cell_rect(seq, c), x) < r2) return m;
        }
    }
    return -1;
}

}  // namespace

TEST_CASE("cell_mass values") {
    CanonicalMeasure mu3(ScaleSequence::validate({3}));
    CHECK(mu3.cell_mass(1) == Rat(1, 8));
    CanonicalMeasure mu35(ScaleSequence::validate({3, 5}));
    CHECK(mu35.cell_mass(2) == Rat(1, 192));
}

TEST_CASE("total level mass is one") {
    auto seq = ScaleSequence::validate({3, 5, 3});
    CanonicalMeasure mu(seq);
    for (int m = 0; m <= 3; ++m) {
        Rat total(0);
        for_each_cell(seq, m, [&](const CellAddress&) { total += mu.cell_mass(m); });
        CHECK(total == Rat(1));
    }
}

TEST_CASE("constant sequence follows s^Q scaling") {
    // v_m = s_m^{Q_k} for a = 1/(2k+1); 12 significant digits in floating point.
    for (int k : {1, 2}) {
        int n = 2 * k + 1;
        auto seq = ScaleSequence::validate(std::vector<int>(3, n));
        CanonicalMeasure mu(seq);
        double Q = CanonicalMeasure::Qk(k);
        for (int m = 1; m <= 3; ++m) {
            double v = to_double(mu.cell_mass(m));
            double sQ = std::pow(to_double(seq.side(m)), Q);
            CHECK(std::abs(v - sQ) / sQ < 1e-12);
        }
    }
    CHECK(CanonicalMeasure::Qk(1) == doctest::Approx(std::log(8.0) / std::log(3.0)));
}

TEST_CASE("m_of_r basic") {
    CanonicalMeasure mu(ScaleSequence::validate({3, 5}));
    CHECK(mu.m_of_r(Rat(1, 5)) == 2);  // 1/3 > 0.2 >= 1/15
    CHECK(mu.m_of_r(Rat(1)) == 0);
    CHECK(mu.m_of_r(Rat(1, 3)) == 1);
    CHECK_THROWS_AS(mu.m_of_r(Rat(0)), std::invalid_argument);
    CHECK_THROWS_AS(mu.m_of_r(Rat(1, 1000)), std::out_of_range);
}

TEST_CASE("m_of_r monotone and m(r) <= m(2r)+1") {
    CanonicalMeasure mu(ScaleSequence::validate({3, 5, 7}));
    std::uint64_t st = 7;
    for (int i = 0; i < 200; ++i) {
        Rat r(1 + (std::int64_t)(splitmix(st) % 104), 105);
        Rat r2 = std::min(Rat(1), Rat(2 * r));
        CHECK(mu.m_of_r(r) >= mu.m_of_r(r2));
        CHECK(mu.m_of_r(r) <= mu.m_of_r(r2) + 1);
    }
}

TEST_CASE("m_of_x_r against level-scan oracle") {
    auto seq = ScaleSequence::validate({3, 3, 3, 3});
    CanonicalMeasure mu(seq);
    // The corner cell [0,1/3]^2 has far corner at distance sqrt(2)/3 > 0.4,
    // so the answer at r = 0.4 is level 2, and level 1 first at r > sqrt(2)/3.
    CHECK(m_of_x_r_oracle(seq, RPoint{Rat(0), Rat(0)}, Rat(2, 5)) == 2);
    CHECK(mu.m_of_x_r(RPoint{Rat(0), Rat(0)}, Rat(2, 5)) == 2);
    CHECK(mu.m_of_x_r(RPoint{Rat(0), Rat(0)}, Rat(12, 25)) == 1);

    std::uint64_t st = 42;
    for (int i = 0; i < 40; ++i) {
        // Random retained level-2 cell corner and radius.
        auto cells = enumerate_cells(seq, 2);
        const auto& a = cells[splitmix(st) % cells.size()];
        RPoint x{cell_rect(seq, a).x0, cell_rect(seq, a).y0};
        Rat r(1 + (std::int64_t)(splitmix(st) % 80), 81);
        int want = m_of_x_r_oracle(seq, x, r);
        if (want < 0) continue;
        CHECK(mu.m_of_x_r(x, r) == want);
    }
}

TEST_CASE("Lemma easy-lemma bracket m(sqrt2 r) <= m(x,r) <= m(r/sqrt2)+1") {
    auto seq = ScaleSequence::validate({3, 5, 3, 5});
    CanonicalMeasure mu(seq);
    std::uint64_t st = 11;
    auto cells = enumerate_cells(seq, 3);
    for (int i = 0; i < 60; ++i) {
        const auto& a = cells[splitmix(st) % cells.size()];
        RPoint x{cell_rect(seq, a).x0, cell_rect(seq, a).y0};
        double r = 0.02 + 0.9 * unit_double(st);
        int mxr;
        try {
            mxr = mu.m_of_x_r(x, rat_from_double(r));
        } catch (const std::out_of_range&) {
            continue;
        }
        CHECK(mu.m_of_r(rat_from_double(std::min(1.0, r * std::sqrt(2.0)))) <= mxr);
        CHECK(mxr <= mu.m_of_r(rat_from_double(r / std::sqrt(2.0))) + 1);
    }
}

TEST_CASE("h_estimate values") {
    CanonicalMeasure mu(ScaleSequence::validate({3, 5}));
    CHECK(mu.h_estimate(Rat(1)) == doctest::Approx(1.0));
    CHECK(mu.h_estimate(Rat(1, 3)) == doctest::Approx(1.0 / 8.0));
    CHECK(mu.h_estimate(Rat(1, 15)) == doctest::Approx(1.0 / 192.0));
}

TEST_CASE("ball_mass whole carpet and corner cell") {
    auto seq = ScaleSequence::validate({3, 3});
    CanonicalMeasure mu(seq);
    auto whole = mu.ball_mass(RPoint{Rat(0), Rat(0)}, Rat(2), 2);
    CHECK(whole.first == Rat(1));
    CHECK(whole.second == Rat(1));

    // Frozen from the enumeration oracle.
    auto got = mu.ball_mass(RPoint{Rat(0), Rat(0)}, Rat(1, 3), 2);
    auto want = ball_mass_oracle(seq, RPoint{Rat(0), Rat(0)}, Rat(1, 3), 2);
    CHECK(got.first == want.first);
    CHECK(got.second == want.second);
    CHECK(got.first < got.second);
    CHECK(got.second < Rat(1, 4));
}

TEST_CASE("ball_mass equals enumeration oracle on random queries") {
    auto seq = ScaleSequence::validate({3, 5});
    CanonicalMeasure mu(seq);
    std::uint64_t st = 5;
    auto cells = enumerate_cells(seq, 2);
    for (int i = 0; i < 25; ++i) {
        const auto& a = cells[splitmix(st) % cells.size()];
        RPoint x{cell_rect(seq, a).x0, cell_rect(seq, a).y1};
        Rat r(1 + (std::int64_t)(splitmix(st) % 30), 31);
        auto got = mu.ball_mass(x, r, 2);
        auto want = ball_mass_oracle(seq, x, r, 2);
        CHECK(got.first == want.first);
        CHECK(got.second == want.second);
    }
}

TEST_CASE("ball mass vs h_estimate comparability bracket") {
    // Prop 3.3 desk-scale echo: midpoint ratio within [1e-5, 9].
    auto seq = ScaleSequence::validate({3, 5, 7});
    CanonicalMeasure mu(seq);
    std::uint64_t st = 2026;
    auto cells = enumerate_cells(seq, 3);
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
        const auto& a = cells[splitmix(st) % cells.size()];
        RRect rect = cell_rect(seq, a);
        RPoint x{rect.x0, rect.y0};
        double r = std::pow(10.0, -1.3 + 1.3 * unit_double(st));  // r in [0.05, 1]
        auto [lo, hi] = mu.ball_mass(x, rat_from_double(r), 3);
        double mid = 0.5 * (to_double(lo) + to_double(hi));
        double ratio = mid / mu.h_estimate(r);
        CHECK(ratio >= 1e-5);
        CHECK(ratio <= 9.0);
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("doubling ratio bounded by the Prop 3.1 constant") {
    // Constant assembled from the proof: upper 9 h(2r), lower h(r)(8/9)/32^2,
    // h(2r)/h(r) <= 4 * (9/8).
    double bound = 9.0 * 32.0 * 32.0 * (9.0 / 8.0) * 4.0 * (9.0 / 8.0);
    auto seq = ScaleSequence::validate({3, 3, 3});
    CanonicalMeasure mu(seq);
    std::uint64_t st = 77;
    auto cells = enumerate_cells(seq, 3);
    for (int M : {2, 3}) {
        for (int i = 0; i < 30; ++i) {
            const auto& a = cells[splitmix(st) % cells.size()];
            RPoint x{cell_rect(seq, a).x0, cell_rect(seq, a).y0};
            double r = 0.05 + 0.4 * unit_double(st);
            auto [lo1, hi1] = mu.ball_mass(x, rat_from_double(r), M);
            auto [lo2, hi2] = mu.ball_mass(x, rat_from_double(2 * r), M);
            double small = 0.5 * (to_double(lo1) + to_double(hi1));
            double big = 0.5 * (to_double(lo2) + to_double(hi2));
            REQUIRE(small > 0.0);
            CHECK(big / small <= bound);
        }
    }
}
