#pragma once

#include "carpetlab/carpet.hpp"

#include <vector>

namespace carpetlab::cutset {

using carpet::ScaleSequence;

// Largest l with l * a <= 1/3 for a = 1/n; satisfies l * a > 2/15.
int l_of(const Rat& a);

// One folded triangle: the closed triangle sharing a side with a removed
// square, its mirror across the shared diagonal, and the reflection map
// p -> M p + t (an involution swapping the two).
struct FoldTriangle {
    RPoly tri, mirror;
    Rat m00, m01, m10, m11, tx, ty;

    RPoint reflect(const RPoint& p) const {
        return {m00 * p.x + m01 * p.y + tx, m10 * p.x + m11 * p.y + ty};
    }
};

struct FoldLevel {
    int level = 0;  // i: flanks the removed level-i squares
    int l = 0;      // l_i
    std::vector<RRect> rects;             // D_i
    std::vector<FoldTriangle> triangles;  // R_i (two per kept flank)
};

struct CutSetApprox {
    int n = 0;
    std::vector<RPoly> excluded;  // open regions deleted from the carpet
};

// Obstacle collections D_1..D_n, R_1..R_n and the fold maps F_i. Requires
// the sequence to reach level n+1 (widths use a_{i+1}).
class FoldData {
  public:
    FoldData(ScaleSequence seq, int n);

    const ScaleSequence& seq() const { return seq_; }
    int depth() const { return n_; }
    const std::vector<FoldLevel>& levels() const { return levels_; }

    // F_i: identity off the level-i triangles, diagonal reflection on them.
    RPoint fold(const RPoint& p, int i) const;

    // X_n^(0): pull the deleted regions back through F_n, ..., F_1.
    CutSetApprox unfold_set() const;

    // prod_{i<=n} (1 - (2/45) / (a_i^{-2} - 1)), exact.
    Rat measure_bound() const;

    // Exact interval for mu(X_n^(0)) from level-M cells; also reports the
    // number of partially covered cells (the discretization slack).
    std::pair<Rat, Rat> measure_exact(int M, std::int64_t* partial_cells = nullptr) const;

    // H^1 of the polyline inside X_n^(0); the polyline must stay in the
    // level-M precarpet (vertices and segment midpoints are checked).
    double crossing_length_in(const std::vector<RPoint>& polyline, int M) const;

  private:
    ScaleSequence seq_;
    int n_;
    std::vector<FoldLevel> levels_;
};

}  // namespace carpetlab::cutset
