#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "carpetlab/modgraph.hpp"

#include <cmath>
#include <functional>

using namespace carpetlab;
using namespace carpetlab::carpet;
using namespace carpetlab::measure;
using namespace carpetlab::modgraph;

namespace {

// Enumerate all simple left-right paths (test oracle, small grids only).
void all_crossing_paths(const GridGraph& g, std::vector<std::vector<int>>& out) {
    std::vector<char> on(g.size(), 0);
    std::vector<int> cur;
    std::function<void(int)> dfs = [&](int v) {
        on[v] = 1;
        cur.push_back(v);
        if (g.coords[v].first == g.nx - 1) out.push_back(cur);
        else {
            for (int k = g.adj_start[v]; k < g.adj_start[v + 1]; ++k) {
                int u = g.adj[k];
                if (!on[u]) dfs(u);
            }
        }
        cur.pop_back();
        on[v] = 0;
    };
    for (int v = 0; v < g.size(); ++v) {
        if (g.coords[v].first == 0) dfs(v);
    }
}

// Primal-dual certificate check for the uniform density on a full grid:
// verifies the frozen value H * W^(1-p) is the exact modulus.
void check_rectangle_certificate(std::int64_t nx, std::int64_t ny, double p) {
    double step = 1.0 / (double)ny;  // H = 1 direction has ny cells
    GridGraph g = build_full_grid(nx, ny, step, step * step);
    std::vector<std::vector<int>> paths;
    all_crossing_paths(g, paths);
    REQUIRE(!paths.empty());
    double W = nx * step, H = ny * step;
    double rho = 1.0 / W;  // uniform optimal density
    // Admissibility of the uniform density: min length over all paths is 1.
    double minlen = 1e300;
    for (const auto& pa : paths) minlen = std::min(minlen, rho * step * (double)pa.size());
    CHECK(minlen == doctest::Approx(1.0).epsilon(1e-12));
    // Value matches the analytic rectangle modulus.
    double value = 0.0;
    for (int i = 0; i < g.size(); ++i) value += g.node_weight[i] * std::pow(rho, p);
    CHECK(value == doctest::Approx(H * std::pow(W, 1.0 - p)).epsilon(1e-12));
    // Dual certificate: uniform multipliers on the ny straight rows satisfy
    // stationarity (every cell on exactly one row) and complementary
    // slackness (rows have length exactly 1), so the uniform density is
    // optimal and the frozen value is exact.
    double lam = g.node_weight[0] * p * std::pow(rho, p - 1.0) / step;
    CHECK(lam > 0);
}

// Effective conductance of the face network on a full grid: each cell is a
// resistor step^2/w split in half toward each face; left faces tied to the
// source rail, right faces to the sink. Dense Gaussian elimination.
double conductance_oracle(std::int64_t n, double step, double w) {
    auto fid = [&](int kind, std::int64_t a, std::int64_t b) {
        // kind 0: vertical face between (a-1,b) and (a,b), a in 0..n
        // kind 1: horizontal face between (a,b-1) and (a,b), b in 0..n (interior only)
        if (kind == 0) return (int)(a * n + b);
        return (int)((n + 1) * n + (b - 1) * n + a);
    };
    int nfaces = (int)((n + 1) * n + (n - 1) * n);
    int ncells = (int)(n * n);
    int N = nfaces + ncells + 2;  // + source rail, sink rail
    int SRC = nfaces + ncells, SNK = SRC + 1;
    std::vector<std::vector<double>> A(N, std::vector<double>(N + 1, 0.0));
    double gc = 2.0 * w / (step * step);  // conductance of each half-resistor
    auto stamp = [&](int i, int j) {
        A[i][i] += gc;
        A[j][j] += gc;
        A[i][j] -= gc;
        A[j][i] -= gc;
    };
    auto stamp_wire = [&](int i, int j) {
        double big = 1e9;
        A[i][i] += big;
        A[j][j] += big;
        A[i][j] -= big;
        A[j][i] -= big;
    };
    for (std::int64_t x = 0; x < n; ++x) {
        for (std::int64_t y = 0; y < n; ++y) {
            int cell = nfaces + (int)(x * n + y);
            stamp(cell, fid(0, x, y));      // left face
            stamp(cell, fid(0, x + 1, y));  // right face
            if (y > 0) stamp(cell, fid(1, x, y));
            if (y + 1 < n) stamp(cell, fid(1, x, y + 1));
        }
    }
    for (std::int64_t y = 0; y < n; ++y) {
        stamp_wire(SRC, fid(0, 0, y));
        stamp_wire(SNK, fid(0, n, y));
    }
    // Dirichlet: phi(SRC)=1, phi(SNK)=0; solve for the rest, then the current.
    for (int i = 0; i < N; ++i) {
        A[SRC][i] = 0;
        A[SNK][i] = 0;
    }
    A[SRC][SRC] = 1;
    A[SRC][N] = 1;
    A[SNK][SNK] = 1;
    // Gaussian elimination with partial pivoting.
    for (int col = 0; col < N; ++col) {
        int piv = col;
        for (int r = col + 1; r < N; ++r) {
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        }
        std::swap(A[col], A[piv]);
        REQUIRE(std::abs(A[col][col]) > 1e-14);
        for (int r = 0; r < N; ++r) {
            if (r == col) continue;
            double f = A[r][col] / A[col][col];
            if (f == 0) continue;
            for (int c = col; c <= N; ++c) A[r][c] -= f * A[col][c];
        }
    }
    std::vector<double> phi(N);
    for (int i = 0; i < N; ++i) phi[i] = A[i][N] / A[i][i];
    double current = 0.0;
    for (std::int64_t x = 0; x < n; ++x) {
        for (std::int64_t y = 0; y < n; ++y) {
            int cell = nfaces + (int)(x * n + y);
            current += gc * (phi[fid(0, 0, y)] - phi[cell]) * (x == 0 ? 1.0 : 0.0);
        }
    }
    return current;
}

}  // namespace

TEST_CASE("grid construction counts") {
    auto s3 = ScaleSequence::validate({3});
    GridGraph g = build_grid(s3, 1);
    CHECK(g.size() == 8);
    CHECK(g.edge_count() == 8);  // ring around the removed center

    GridGraph full = build_full_grid(4, 4, 0.25, 1.0 / 16.0);
    CHECK(full.size() == 16);
    CHECK(full.edge_count() == 24);

    auto s35 = ScaleSequence::validate({3, 5});
    CHECK(build_grid(s35, 2).size() == 192);
}

TEST_CASE("rectangle modulus certificates at n=3") {
    for (double p : {1.0, 2.0, 3.0}) {
        check_rectangle_certificate(3, 3, p);
        check_rectangle_certificate(6, 3, p);  // (W,H) = (2,1)
        check_rectangle_certificate(3, 6, p);  // (W,H) = (1,2) with step 1/6
    }
}

TEST_CASE("solver matches rectangle modulus") {
    struct Case {
        std::int64_t nx, ny;
        double W, H;
    };
    for (const Case& c : {Case{3, 3, 1, 1}, Case{6, 3, 2, 1}, Case{3, 6, 1, 2}}) {
        double step = c.H / (double)c.ny;
        GridGraph g = build_full_grid(c.nx, c.ny, step, step * step);
        auto fam = crossing_family(g);
        for (double p : {1.0, 2.0, 3.0}) {
            auto r = solve_modulus(g, fam, p, g.node_weight, 1e-7);
            double want = c.H * std::pow(c.W, 1.0 - p);
            CHECK(r.converged);
            CHECK(std::abs(r.value - want) < 1e-6);
        }
    }
}

TEST_CASE("p=2 value matches conductance oracle") {
    for (std::int64_t n : {2, 3, 4}) {
        double step = 1.0 / (double)n;
        GridGraph g = build_full_grid(n, n, step, step * step);
        auto r = solve_modulus(g, crossing_family(g), 2.0, g.node_weight, 1e-7);
        double cond = conductance_oracle(n, step, step * step);
        CHECK(std::abs(r.value - cond) < 1e-5);
    }
}

TEST_CASE("disconnected family has zero modulus") {
    auto s3 = ScaleSequence::validate({3});
    GridGraph g = build_grid(s3, 1);
    // Source = bottom-left cell, target artificially separated by zero set:
    // build two-cell graph with no connection instead.
    GridGraph two = build_full_grid(1, 2, 0.5, 0.25);
    // Break adjacency by hand: rebuild with the two cells far apart.
    GridGraph far;
    far.nx = 3;
    far.ny = 1;
    far.step = 0.5;
    far.step_exact = Rat(1, 2);
    far.coords = {{0, 0}, {2, 0}};
    far.index = {{0, 0}, {2, 1}};
    far.node_weight = {0.25, 0.25};
    far.adj_start = {0, 0, 0};
    auto r = solve_modulus(far, FamilySpec{{0}, {1}}, 2.0, far.node_weight, 1e-6);
    CHECK(r.value == 0.0);
    auto r1 = solve_modulus(far, FamilySpec{{0}, {1}}, 1.0, far.node_weight, 1e-6);
    CHECK(r1.value == 0.0);
    (void)g;
    (void)two;
}

TEST_CASE("active paths are admissible at termination") {
    auto s = ScaleSequence::validate({3, 5});
    GridGraph g = build_grid(s, 2);
    auto r = solve_modulus(g, crossing_family(g), 2.0, g.node_weight, 1e-6);
    CHECK(r.converged);
    for (const auto& path : r.active_paths) {
        double len = 0.0;
        for (int c : path) len += r.density[c] * g.step;
        CHECK(len >= 1.0 - 1e-6);
    }
    // Value identity: sum of w * rho^p.
    double v = 0.0;
    for (int i = 0; i < g.size(); ++i) v += g.node_weight[i] * r.density[i] * r.density[i];
    CHECK(v == doctest::Approx(r.value));
}

TEST_CASE("weight scaling multiplies the value exactly") {
    auto s = ScaleSequence::validate({3});
    GridGraph g = build_grid(s, 1);
    auto fam = crossing_family(g);
    auto r1 = solve_modulus(g, fam, 2.0, g.node_weight, 1e-7);
    std::vector<double> w2 = g.node_weight;
    for (double& w : w2) w *= 3.5;
    auto r2 = solve_modulus(g, fam, 2.0, w2, 1e-7);
    CHECK(r2.value == doctest::Approx(3.5 * r1.value).epsilon(1e-5));
}

TEST_CASE("crossing modulus decreases with refinement under area weights") {
    auto s = ScaleSequence::validate({3, 3});
    GridGraph g1 = build_grid(s, 1), g2 = build_grid(s, 2);
    // Area weights: side^2 per cell.
    std::vector<double> w1(g1.size(), to_double(sqr(s.side(1))));
    std::vector<double> w2(g2.size(), to_double(sqr(s.side(2))));
    auto r1 = solve_modulus(g1, crossing_family(g1), 2.0, w1, 1e-7);
    auto r2 = solve_modulus(g2, crossing_family(g2), 2.0, w2, 1e-7);
    CHECK(r2.value <= r1.value + 1e-6);
}

TEST_CASE("subrectangle crossings have at least the full crossing modulus") {
    auto s = ScaleSequence::validate({3, 3});
    GridGraph g = build_grid(s, 2);
    auto full = solve_modulus(g, crossing_family(g), 2.0, g.node_weight, 1e-7);
    auto sub = solve_modulus(g, subrect_crossing_family(g, 3, 5), 2.0, g.node_weight, 1e-7);
    CHECK(sub.value >= full.value - 1e-6);
}

TEST_CASE("l1 crossing upper bound products") {
    auto s3 = ScaleSequence::validate({3});
    CHECK(crossing_upper_bound_l1(s3, 1) == Rat(3, 4));
    auto s35 = ScaleSequence::validate({3, 5});
    CHECK(crossing_upper_bound_l1(s35, 2) == Rat(5, 8));
}

TEST_CASE("discrete mod1 equals the strip product on constant carpets") {
    // The middle-column cut and the unbroken-row packing meet at prod 1/(1+a).
    auto s = ScaleSequence::validate({3, 3, 3});
    for (int M = 1; M <= 3; ++M) {
        GridGraph g = build_grid(s, M);
        auto r = solve_modulus(g, crossing_family(g), 1.0, g.node_weight, 1e-6);
        CHECK(r.converged);
        double want = to_double(crossing_upper_bound_l1(s, M));
        CHECK(std::abs(r.value - want) < 1e-7);
    }
}

TEST_CASE("riesz weights support and symmetry") {
    auto seq = ScaleSequence::validate({3, 3});
    CanonicalMeasure mu(seq);
    GridGraph g = build_grid(seq, 2);
    RPoint x{Rat(0), Rat(0)}, y{Rat(1), Rat(1)};
    auto rw = riesz_weights(g, mu, x, y, 2.0);
    auto rw_swap = riesz_weights(g, mu, y, x, 2.0);
    double R = 2.0 * rw.d;
    for (int i = 0; i < g.size(); ++i) {
        CHECK(rw.w[i] == doctest::Approx(rw_swap.w[i]).epsilon(1e-12));
        double cx = (g.coords[i].first + 0.5) * g.step;
        double cy = (g.coords[i].second + 0.5) * g.step;
        double dx = std::hypot(cx - 0.0, cy - 0.0), dy = std::hypot(cx - 1.0, cy - 1.0);
        if (dx > R && dy > R) CHECK(rw.w[i] == 0.0);
    }
    // Degenerate resolution refused.
    CHECK_THROWS_AS(
        riesz_weights(g, mu, x, RPoint{seq.side(2), Rat(0)}, 2.0), std::invalid_argument);
}

TEST_CASE("riesz total mass is refinement-consistent within 20 percent") {
    auto seq = ScaleSequence::validate({3, 3, 3});
    CanonicalMeasure mu(seq);
    RPoint x{Rat(0), Rat(0)}, y{Rat(1), Rat(1)};
    GridGraph g2 = build_grid(seq, 2), g3 = build_grid(seq, 3);
    auto r2 = riesz_weights(g2, mu, x, y, 2.0);
    auto r3 = riesz_weights(g3, mu, x, y, 2.0);
    double m2 = 0.0, m3 = 0.0;
    for (double w : r2.w) m2 += w;
    for (double w : r3.w) m3 += w;
    CHECK(std::abs(m2 - m3) <= 0.2 * std::max(m2, m3));
}

TEST_CASE("keith ratio basics") {
    auto seq = ScaleSequence::validate({3, 3});
    CanonicalMeasure mu(seq);
    GridGraph g = build_grid(seq, 2);
    RPoint x{Rat(0), Rat(0)}, y{Rat(1), Rat(1)};
    CHECK_THROWS_AS(keith_ratio(g, mu, x, x, 2.0, 2.0, 1e-6), std::invalid_argument);
    auto k2 = keith_ratio(g, mu, x, y, 2.0, 2.0, 1e-6);
    CHECK(k2.ratio > 0.0);
    // p=1: the ratio is the mod1 value itself.
    auto k1 = keith_ratio(g, mu, x, y, 1.0, 2.0, 1e-6);
    CHECK(k1.ratio == doctest::Approx(k1.mod.value));
}

TEST_CASE("keith ratio stable across refinement on the full grid") {
    auto seq = ScaleSequence::validate({3, 3, 3});
    CanonicalMeasure mu(seq);
    RPoint x{Rat(0), Rat(0)}, y{Rat(1), Rat(1)};
    GridGraph g2 = build_grid(seq, 2), g3 = build_grid(seq, 3);
    auto k2 = keith_ratio(g2, mu, x, y, 2.0, 2.0, 1e-6);
    auto k3 = keith_ratio(g3, mu, x, y, 2.0, 2.0, 1e-6);
    CHECK(k2.ratio > 0.0);
    CHECK(k3.ratio > 0.0);
    CHECK(std::abs(k3.ratio - k2.ratio) <= 0.15 * std::max(k2.ratio, k3.ratio));
}
