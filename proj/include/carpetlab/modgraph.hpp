#pragma once

#include "carpetlab/carpet.hpp"
#include "carpetlab/measure.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace carpetlab::modgraph {

using carpet::ScaleSequence;

// Side-adjacency graph of level-M precarpet cells (or of a plain nx x ny
// rectangle grid). Node order follows the address enumeration order.
struct GridGraph {
    std::vector<std::pair<std::int64_t, std::int64_t>> coords;
    std::vector<int> adj_start;  // CSR, size N+1
    std::vector<int> adj;
    std::vector<double> node_weight;  // v_M for carpet grids, cell area otherwise
    double step = 1.0;                // length traversed per visited cell
    Rat step_exact{1};
    std::int64_t nx = 0, ny = 0;
    int level = 0;
    std::unordered_map<std::uint64_t, int> index;

    int size() const { return (int)coords.size(); }
    size_t edge_count() const { return adj.size() / 2; }
    int node_at(std::int64_t gx, std::int64_t gy) const;
};

GridGraph build_grid(const ScaleSequence& seq, int M, std::int64_t budget = 1'200'000);
GridGraph build_full_grid(std::int64_t nx, std::int64_t ny, double step, double node_weight);

struct FamilySpec {
    std::vector<int> sources, targets;
};

// Left column to right column.
FamilySpec crossing_family(const GridGraph& g);
// Crossings of the sub-rectangle gx in [x0,x1] (node sets at the two walls).
FamilySpec subrect_crossing_family(const GridGraph& g, std::int64_t x0, std::int64_t x1);

struct ModulusResult {
    double value = 0.0;
    double gap = 0.0;
    int iterations = 0;
    bool converged = true;
    std::vector<double> density;
    std::vector<std::vector<int>> active_paths;
};

struct SolveOptions {
    int max_constraints = 100'000;
    long long drain_budget = 50'000'000;
    double inner_tol = 1e-9;
    bool verbose = false;
};

// Cutting-plane p-modulus of the source->target path family. Node densities;
// path length = (number of visited cells) * step weighted by rho. For p = 1
// the inner LP is solved exactly as a node-capacitated min cut.
ModulusResult solve_modulus(const GridGraph& g, const FamilySpec& fam, double p,
                            const std::vector<double>& weights, double tol,
                            const SolveOptions& opts = {});

// Shortest source->target path under lengths rho*step, lexicographic
// tie-breaking; empty if disconnected.
std::pair<double, std::vector<int>> shortest_path(const GridGraph& g, const FamilySpec& fam,
                                                  const std::vector<double>& rho);

// prod_{j<=M} 1/(1+a_j): the strip-density mass, an upper bound for the
// 1-modulus of left-right crossings.
Rat crossing_upper_bound_l1(const ScaleSequence& seq, int M);

struct RieszWeights {
    std::vector<double> w;
    RPoint x, y;
    double d = 0.0;
};

// Symmetric Riesz kernel masses v_M * [d(x,c)/mu(B(x,d(x,c))) + sym] on cells
// with center inside B(x,C2 d) U B(y,C2 d); mu-hat is the midpoint of the
// ball_mass interval.
RieszWeights riesz_weights(const GridGraph& g, const measure::CanonicalMeasure& mu,
                           const RPoint& x, const RPoint& y, double C2);

struct KeithResult {
    double ratio = 0.0;
    ModulusResult mod;
};

// mod_p(Gamma_xy; mu_xy^{C2}) * d(x,y)^{p-1}, paths from the cell of x to the
// cell of y.
KeithResult keith_ratio(const GridGraph& g, const measure::CanonicalMeasure& mu, const RPoint& x,
                        const RPoint& y, double p, double C2, double tol);

}  // namespace carpetlab::modgraph
