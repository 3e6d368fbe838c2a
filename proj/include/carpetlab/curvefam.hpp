#pragma once

#include "carpetlab/carpet.hpp"
#include "carpetlab/measure.hpp"

#include <memory>
#include <string>
#include <vector>

namespace carpetlab::curvefam {

using carpet::GlobalCell;
using carpet::ScaleSequence;

// Axis-parallel segment whose endpoints lie on the level lattice.
struct LatticeEdge {
    int level;
    RSegment seg;
    bool operator==(const LatticeEdge& o) const { return level == o.level && seg == o.seg; }
};

// Points of an edge whose perpendicular line misses the removed squares of
// deeper levels; stored as the closure (a merged list of closed intervals in
// the edge coordinate). Total length: |L| * prod_{j>level, j<=M} (1 - a_j).
struct PiSet {
    LatticeEdge edge;
    std::vector<std::pair<Rat, Rat>> intervals;
    Rat length{0};

    // Cumulative parameter t in [0, length] -> coordinate along the edge,
    // measured from the lo end (or the hi end).
    Rat coord_at(const Rat& t, bool from_hi = false) const;
    RPoint point_at(const Rat& t, bool from_hi = false) const;
};

PiSet pi_set(const ScaleSequence& seq, const LatticeEdge& L, int M);

enum class Side { Left, Right, Bottom, Top };
Side opposite(Side s);

// Lattice-aligned k x l rectangle of level-m cells inside one parent square,
// not containing the parent's removed center, with a full side as leading
// edge.
struct DirectedBlock {
    int level = 0;
    std::int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // cell bounds, upper exclusive
    Side leading = Side::Top;

    std::int64_t width() const { return x1 - x0; }
    std::int64_t height() const { return y1 - y0; }
    RRect rect(const ScaleSequence& seq) const;
    LatticeEdge side_edge(const ScaleSequence& seq, Side s) const;
    LatticeEdge leading_edge(const ScaleSequence& seq) const { return side_edge(seq, leading); }
    double diam(const ScaleSequence& seq) const;
};

// Throws std::invalid_argument naming the violated clause.
void validate_block(const ScaleSequence& seq, const DirectedBlock& b);

struct Polyline {
    std::vector<RPoint> pts;
    double length() const;
};

// A measured family {gamma_z} with transversal measure sigma = normalized
// length on the parameter pattern. Densities are exact piecewise values
// reported as doubles.
class CurveFamily {
  public:
    virtual ~CurveFamily() = default;
    virtual Rat param_length() const = 0;
    virtual Polyline curve_at(const Rat& t) const = 0;
    virtual double density_at(const RPoint& p) const = 0;
    virtual double density_sup() const = 0;
    virtual double nu_rect(const RRect& A) const = 0;  // nu_Gamma(A)
};

enum class ConnKind { Expand, ExpandParent, Turn, Straight };
std::string to_string(ConnKind k);

struct ConnectionOptions {
    bool enforce_scale_bound = true;  // all a_i <= 1/20
};

// Builds the explicit connection family on pi_M(L1) in C2 for one of the four
// building-block kinds; L1/L2 are the blocks' leading edges. Verifies the
// kind's geometric hypotheses exactly and throws naming the violated bullet.
std::shared_ptr<CurveFamily> build_connection(const ScaleSequence& seq, int M, ConnKind kind,
                                              const DirectedBlock& c1, const DirectedBlock& c2,
                                              const ConnectionOptions& opts = {});

// The measured infinity-connection constant: density_sup * H1(pi_M(L1)).
double connection_constant(const CurveFamily& fam, const ScaleSequence& seq, int M);

// Fan of straight segments from an apex to every point of the pattern on the
// target edge.
std::shared_ptr<CurveFamily> build_fan(const ScaleSequence& seq, int M, const RPoint& apex,
                                       const LatticeEdge& target);

// Direct two-segment family for the Euclidean near-field case |x-y| < 10 s_M.
std::shared_ptr<CurveFamily> near_field_family(const RPoint& x, const RPoint& y);

struct ChainLink {
    DirectedBlock block;
    ConnKind kind = ConnKind::Straight;
    bool endpoint = false;  // fan links at the two ends
    bool reversed = false;  // y-side: family built from the far edge
    std::shared_ptr<CurveFamily> family;
};

struct BlockChain {
    std::vector<ChainLink> links;  // traversal order x -> y
    int mid = 0;                   // index of the meeting block C_0
    RPoint x, y;
    int level_M = 0;  // endpoint scale
    int level_m = 0;  // bridge scale
};

struct ChainOptions {
    bool enforce_scale_bound = true;  // all a_i <= 1/20 (relax for n >= 5 tests)
};

// Lemma-5.9-style chain of directed blocks and connections joining x to y.
BlockChain block_chain(const ScaleSequence& seq, const RPoint& x, const RPoint& y, int M,
                       const ChainOptions& opts = {});

struct ClauseReport {
    struct Entry {
        int clause;
        bool pass;
        double margin;
        std::string note;
    };
    std::vector<Entry> entries;
    bool all_pass() const;
};

// Programmatic validation of the seven chain clauses (constants 100, s_M/2,
// C0 = 2 for the measured connection constants).
ClauseReport validate_chain(const ScaleSequence& seq, const BlockChain& chain);

// Glued family over the whole chain; throws on gluing mismatch.
std::shared_ptr<CurveFamily> concatenate(const ScaleSequence& seq, const BlockChain& chain);

// sup over curve samples of d(nu)/d(mu_xy) against the Riesz kernel; the
// measure density uses v_M/s_M^2 on the precarpet.
double density_vs_riesz(const CurveFamily& fam, const measure::CanonicalMeasure& mu,
                        const RPoint& x, const RPoint& y, double C2, int M, int t_samples = 24,
                        int arc_samples = 24);

}  // namespace carpetlab::curvefam
