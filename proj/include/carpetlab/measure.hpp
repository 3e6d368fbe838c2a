#pragma once

#include "carpetlab/carpet.hpp"

#include <unordered_map>

namespace carpetlab::measure {

using carpet::ScaleSequence;

// Canonical probability measure: weak limit of renormalized Lebesgue on the
// precarpets. Every retained level-m cell has mass v_m.
class CanonicalMeasure {
  public:
    explicit CanonicalMeasure(ScaleSequence seq) : seq_(std::move(seq)) {}

    const ScaleSequence& seq() const { return seq_; }

    // v_m = prod (n_j^2 - 1)^{-1}, exact.
    Rat cell_mass(int m) const;

    // Hausdorff dimension of the constant carpet S_{1/(2k+1)}.
    static double Qk(int k);

    // Smallest m with s_m <= r, and the smallest m with some T in T_m having
    // x in T subset B(x,r) (open ball). Throws if no level of the truncated
    // sequence qualifies.
    int m_of_r(const Rat& r) const;
    int m_of_x_r(const RPoint& x, const Rat& r) const;

    // r^2 prod_{j<=m(r)} (1-a_j^2)^{-1}.
    double h_estimate(const Rat& r) const;
    double h_estimate(double r) const { return h_estimate(rat_from_double(r)); }

    // Exact two-sided bounds on mu(B(x,r)) from level-M cells: cells wholly
    // inside the open ball count in both ends, cells meeting it only in the
    // upper end. r > diam clamps to [1,1].
    std::pair<Rat, Rat> ball_mass(const RPoint& x, const Rat& r, int M) const;

  private:
    ScaleSequence seq_;
};

// Midpoints of ball_mass intervals cached on a multiplicative radius grid
// (resolution 1e-3 in log radius); the kernel estimates tolerate this.
class BallMidCache {
  public:
    BallMidCache(const CanonicalMeasure& mu, RPoint z, int M)
        : mu_(&mu), z_(std::move(z)), M_(M) {}
    double operator()(double r);

  private:
    const CanonicalMeasure* mu_;
    RPoint z_;
    int M_;
    std::unordered_map<int, double> cache_;
};

}  // namespace carpetlab::measure
