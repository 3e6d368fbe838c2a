#include "carpetlab/measure.hpp"

#include <cmath>

namespace carpetlab::measure {

Rat CanonicalMeasure::cell_mass(int m) const {
    seq_.require_level(m);
    return Rat(1) / seq_.cell_count(m);
}

double CanonicalMeasure::Qk(int k) {
    double n = 2.0 * k + 1.0;
    return std::log(n * n - 1.0) / std::log(n);
}

int CanonicalMeasure::m_of_r(const Rat& r) const {
    if (r <= 0) throw std::invalid_argument("m_of_r: r must be positive");
    for (int m = 0; m <= seq_.levels(); ++m) {
        if (seq_.side(m) <= r) return m;
    }
    throw std::out_of_range("m_of_r: r below the deepest available scale");
}

int CanonicalMeasure::m_of_x_r(const RPoint& x, const Rat& r) const {
    if (r <= 0 || r > 1) throw std::invalid_argument("m_of_x_r: r out of range");
    Rat r2 = r * r;
    for (int m = 0; m <= seq_.levels(); ++m) {
        for (const auto& c : carpet::cells_containing(seq_, x, m)) {
            if (rect_point_maxdist2(carpet::cell_rect(seq_, c), x) < r2) return m;
        }
    }
    throw std::out_of_range("m_of_x_r: no qualifying level in the truncated sequence");
}

double CanonicalMeasure::h_estimate(const Rat& r) const {
    int m = m_of_r(r);
    double prod = 1.0;
    for (int j = 1; j <= m; ++j) {
        double a = 1.0 / seq_.n(j);
        prod /= (1.0 - a * a);
    }
    double rd = to_double(r);
    return rd * rd * prod;
}

namespace {
struct BallAccum {
    const ScaleSequence& seq;
    const RPoint& x;
    const Rat& r2;
    int M;
    Rat lower{0}, upper{0};

    // Mass of a retained level-m cell.
    Rat mass(int m) const { return Rat(1) / seq.cell_count(m); }

    void visit(const carpet::GlobalCell& c) {
        RRect rect = carpet::cell_rect(seq, c);
        if (rect_point_dist2(rect, x) >= r2) return;  // misses the open ball
        if (rect_point_maxdist2(rect, x) < r2) {      // wholly inside
            Rat v = mass(c.level);
            lower += v;
            upper += v;
            return;
        }
        if (c.level == M) {
            upper += mass(M);
            return;
        }
        int k = c.level + 1, n = seq.n(k), cen = seq.center(k);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == cen && j == cen) continue;
                visit(carpet::GlobalCell{k, c.gx * n + i, c.gy * n + j});
            }
        }
    }
};
}  // namespace

std::pair<Rat, Rat> CanonicalMeasure::ball_mass(const RPoint& x, const Rat& r, int M) const {
    seq_.require_level(M);
    if (r <= 0) throw std::invalid_argument("ball_mass: r must be positive");
    if (seq_.cell_count(M) > 20'000'000) throw std::length_error("ball_mass: level too deep");
    Rat r2 = r * r;
    BallAccum acc{seq_, x, r2, M};
    acc.visit(carpet::GlobalCell{0, 0, 0});
    return {acc.lower, acc.upper};
}

double BallMidCache::operator()(double r) {
    int bucket = (int)std::ceil(std::log(r) / 1e-3);
    auto it = cache_.find(bucket);
    if (it != cache_.end()) return it->second;
    double rb = std::exp(bucket * 1e-3);
    auto [lo, hi] = mu_->ball_mass(z_, rat_from_double(rb), M_);
    double mid = 0.5 * (to_double(lo) + to_double(hi));
    cache_[bucket] = mid;
    return mid;
}

}  // namespace carpetlab::measure
