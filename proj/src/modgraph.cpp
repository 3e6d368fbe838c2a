#include <cstdio>
#include "carpetlab/modgraph.hpp"

#include "carpetlab/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

namespace carpetlab::modgraph {

namespace {
std::uint64_t key_of(std::int64_t gx, std::int64_t gy, std::int64_t ny) {
    return (std::uint64_t)gx * (std::uint64_t)ny + (std::uint64_t)gy;
}
}  // namespace

int GridGraph::node_at(std::int64_t gx, std::int64_t gy) const {
    if (gx < 0 || gy < 0 || gx >= nx || gy >= ny) return -1;
    auto it = index.find(key_of(gx, gy, ny));
    return it == index.end() ? -1 : it->second;
}

namespace {
void finish_adjacency(GridGraph& g) {
    int n = g.size();
    std::vector<std::vector<int>> nbrs(n);
    const std::int64_t dx[2] = {1, 0}, dy[2] = {0, 1};
    for (int i = 0; i < n; ++i) {
        auto [gx, gy] = g.coords[i];
        for (int d = 0; d < 2; ++d) {
            int j = g.node_at(gx + dx[d], gy + dy[d]);
            if (j >= 0) {
                nbrs[i].push_back(j);
                nbrs[j].push_back(i);
            }
        }
    }
    g.adj_start.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) g.adj_start[i + 1] = g.adj_start[i] + (int)nbrs[i].size();
    g.adj.resize(g.adj_start[n]);
    for (int i = 0; i < n; ++i) {
        std::sort(nbrs[i].begin(), nbrs[i].end());
        std::copy(nbrs[i].begin(), nbrs[i].end(), g.adj.begin() + g.adj_start[i]);
    }
}
}  // namespace

GridGraph build_grid(const ScaleSequence& seq, int M, std::int64_t budget) {
    seq.require_level(M);
    if (seq.cell_count(M) > budget) throw std::length_error("build_grid: node budget exceeded");
    GridGraph g;
    g.level = M;
    g.nx = g.ny = seq.grid(M);
    g.step_exact = seq.side(M);
    g.step = to_double(g.step_exact);
    double v = 1.0 / (double)seq.cell_count(M);
    carpet::for_each_cell(seq, M, [&](const carpet::CellAddress& a) {
        auto c = carpet::global_of(seq, a);
        int id = (int)g.coords.size();
        g.coords.emplace_back(c.gx, c.gy);
        g.index.emplace(key_of(c.gx, c.gy, g.ny), id);
        g.node_weight.push_back(v);
    });
    finish_adjacency(g);
    return g;
}

GridGraph build_full_grid(std::int64_t nx, std::int64_t ny, double step, double node_weight) {
    GridGraph g;
    g.nx = nx;
    g.ny = ny;
    g.step = step;
    g.step_exact = rat_from_double(step);
    for (std::int64_t gx = 0; gx < nx; ++gx) {
        for (std::int64_t gy = 0; gy < ny; ++gy) {
            int id = (int)g.coords.size();
            g.coords.emplace_back(gx, gy);
            g.index.emplace(key_of(gx, gy, ny), id);
            g.node_weight.push_back(node_weight);
        }
    }
    finish_adjacency(g);
    return g;
}

FamilySpec crossing_family(const GridGraph& g) {
    return subrect_crossing_family(g, 0, g.nx - 1);
}

FamilySpec subrect_crossing_family(const GridGraph& g, std::int64_t x0, std::int64_t x1) {
    FamilySpec f;
    for (int i = 0; i < g.size(); ++i) {
        if (g.coords[i].first == x0) f.sources.push_back(i);
        if (g.coords[i].first == x1) f.targets.push_back(i);
    }
    if (f.sources.empty() || f.targets.empty())
        throw std::invalid_argument("crossing family: empty wall");
    return f;
}

namespace {
void dijkstra(const GridGraph& g, const FamilySpec& fam, const std::vector<double>& rho,
              std::vector<double>& dist, std::vector<int>& parent) {
    int n = g.size();
    dist.assign(n, std::numeric_limits<double>::infinity());
    parent.assign(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    for (int s : fam.sources) {
        double d0 = rho[s] * g.step;
        if (d0 < dist[s]) {
            dist[s] = d0;
            pq.push({d0, s});
        }
    }
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[v]) continue;
        for (int k = g.adj_start[v]; k < g.adj_start[v + 1]; ++k) {
            int u = g.adj[k];
            double nd = d + rho[u] * g.step;
            if (nd < dist[u]) {
                dist[u] = nd;
                parent[u] = v;
                pq.push({nd, u});
            }
        }
    }
}

std::vector<int> extract_path(const std::vector<int>& parent, int target) {
    std::vector<int> path;
    for (int v = target; v >= 0; v = parent[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}
}  // namespace

std::pair<double, std::vector<int>> shortest_path(const GridGraph& g, const FamilySpec& fam,
                                                  const std::vector<double>& rho) {
    std::vector<double> dist;
    std::vector<int> parent;
    dijkstra(g, fam, rho, dist, parent);
    int best = -1;
    for (int t : fam.targets) {
        if (dist[t] == std::numeric_limits<double>::infinity()) continue;
        if (best < 0 || dist[t] < dist[best] || (dist[t] == dist[best] && t < best)) best = t;
    }
    if (best < 0) return {std::numeric_limits<double>::infinity(), {}};
    return {dist[best], extract_path(parent, best)};
}

namespace {

constexpr double kFreeWeight = 1e-300;  // below this a node is cost-free

struct InnerState {
    const GridGraph& g;
    double p;
    const std::vector<double>& w;
    std::vector<double> rho;      // current density
    std::vector<double> lam_sum;  // Lambda_c = sum of multipliers over active paths through c
    std::vector<std::vector<int>> paths;
    std::vector<double> lambda;
    std::vector<std::vector<int>> node_paths;  // node -> active path ids
    std::vector<char> dirty;
    std::vector<int> queue;

    InnerState(const GridGraph& gg, double pp, const std::vector<double>& ww)
        : g(gg), p(pp), w(ww), rho(gg.size(), 0.0), lam_sum(gg.size(), 0.0),
          node_paths(gg.size()) {
        for (int i = 0; i < gg.size(); ++i) {
            if (w[i] <= kFreeWeight) rho[i] = 2.0 / gg.step;  // free cell, fixed density
        }
    }

    bool free_node(int c) const { return w[c] <= kFreeWeight; }

    double rho_of(int c) const {
        if (free_node(c)) return rho[c];
        double lam = lam_sum[c];
        if (lam <= 0) return 0.0;
        return std::pow(g.step * lam / (p * w[c]), 1.0 / (p - 1.0));
    }

    void add_path(std::vector<int> path) {
        int k = (int)paths.size();
        for (int c : path) {
            if (!free_node(c)) node_paths[c].push_back(k);
        }
        paths.push_back(std::move(path));
        lambda.push_back(0.0);
        dirty.push_back(1);
        queue.push_back(k);
    }

    double len_with(const std::vector<int>& path, double lam_new, int this_path) const {
        // Length of `path` when this_path's multiplier is lam_new.
        double len = 0.0;
        double inv = 1.0 / (p - 1.0);
        for (int c : path) {
            if (free_node(c)) {
                len += rho[c] * g.step;
                continue;
            }
            double lam = lam_sum[c] + lam_new - lambda[this_path];
            if (lam <= 0) continue;
            double base = g.step * lam / (p * w[c]);
            len += g.step * (p == 2.0 ? base : std::pow(base, inv));
        }
        return len;
    }

    double path_len(const std::vector<int>& path) const {
        double len = 0.0;
        for (int c : path) len += rho[c] * g.step;
        return len;
    }

    void mark(int k) {
        if (!dirty[k]) {
            dirty[k] = 1;
            queue.push_back(k);
        }
    }

    void set_lambda(int k, double lam_new) {
        double d = lam_new - lambda[k];
        if (d == 0) return;
        lambda[k] = lam_new;
        for (int c : paths[k]) {
            if (free_node(c)) continue;
            lam_sum[c] += d;
            if (lam_sum[c] < 0) lam_sum[c] = 0;
            rho[c] = rho_of(c);
            for (int j : node_paths[c]) {
                if (j != k) mark(j);
            }
        }
    }

    // Coordinate step: pick lambda_k >= 0 so the path constraint is tight
    // (or slack at lambda_k = 0).
    void adjust(int k) {
        const auto& path = paths[k];
        double at_zero = len_with(path, 0.0, k);
        if (at_zero >= 1.0) {
            set_lambda(k, 0.0);
            return;
        }
        if (p == 2.0) {
            // len(lam) is affine: len = at_zero + lam * slope.
            double slope = 0.0;
            for (int c : path) {
                if (!free_node(c)) slope += g.step * g.step / (2.0 * w[c]);
            }
            if (slope > 0) set_lambda(k, std::max(0.0, (1.0 - at_zero) / slope));
            return;
        }
        // Bracket: grow hi until the length reaches 1, then bisect.
        double hi = std::max(1e-12, 2.0 * lambda[k]);
        for (int it = 0; it < 400 && len_with(path, hi, k) < 1.0; ++it) hi *= 2.0;
        double lo = 0.0;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (len_with(path, mid, k) < 1.0) lo = mid;
            else hi = mid;
            if (hi - lo <= 1e-14 * std::max(1.0, hi)) break;
        }
        set_lambda(k, hi);
    }

    // Event-driven passes until the queued constraints are satisfied.
    void drain(double inner_tol, long long work_budget) {
        long long work = 0;
        size_t head = 0;
        while (head < queue.size() && work < work_budget) {
            int k = queue[head++];
            dirty[k] = 0;
            double len = path_len(paths[k]);
            double dev = lambda[k] > 0 ? std::abs(len - 1.0) : std::max(0.0, 1.0 - len);
            work += (long long)paths[k].size();
            if (dev > inner_tol) adjust(k);
            if (head > 4096 && head * 2 > queue.size()) {
                queue.erase(queue.begin(), queue.begin() + head);
                head = 0;
            }
        }
        queue.erase(queue.begin(), queue.begin() + head);
    }

    // Full verification pass: remaining violation, re-queueing offenders.
    double max_violation(double requeue_above) {
        double dev = 0.0;
        for (size_t k = 0; k < paths.size(); ++k) {
            double len = path_len(paths[k]);
            double d = lambda[k] > 0 ? std::abs(len - 1.0) : std::max(0.0, 1.0 - len);
            if (d > dev) dev = d;
            if (d > requeue_above) mark((int)k);
        }
        return dev;
    }

    double objective() const {
        double v = 0.0;
        for (int c = 0; c < g.size(); ++c) {
            if (!free_node(c) && rho[c] > 0) v += w[c] * std::pow(rho[c], p);
        }
        return v;
    }
};

std::uint64_t hash_path(const std::vector<int>& p) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int v : p) {
        h ^= (std::uint64_t)(v + 1);
        h *= 1099511628211ULL;
    }
    return h;
}

ModulusResult solve_p1_mincut(const GridGraph& g, const FamilySpec& fam,
                              const std::vector<double>& weights, double tol) {
    ModulusResult res;
    int n = g.size();
    std::vector<double> cap(n);
    double maxcap = 0.0;
    for (int i = 0; i < n; ++i) {
        cap[i] = std::max(0.0, weights[i]) / g.step;
        maxcap = std::max(maxcap, cap[i]);
    }
    // Reachability check first.
    std::vector<double> zero(n, 0.0);
    auto [len0, path0] = shortest_path(g, fam, zero);
    if (path0.empty()) {
        res.value = 0.0;
        res.density.assign(n, 0.0);
        return res;
    }
    if (maxcap == 0.0) {
        res.value = 0.0;
        res.density.assign(n, 0.0);
        return res;
    }
    const double quantum = maxcap / (double)(1LL << 40);
    auto icap = [&](double c) { return (long long)std::floor(c / quantum); };
    const long long INF = (long long)4e17;
    // Split nodes: in = 2i, out = 2i+1.
    Dinic dinic(2 * n + 2);
    int S = 2 * n, T = 2 * n + 1;
    for (int i = 0; i < n; ++i) dinic.add_edge(2 * i, 2 * i + 1, icap(cap[i]));
    for (int i = 0; i < n; ++i) {
        for (int k = g.adj_start[i]; k < g.adj_start[i + 1]; ++k) {
            int j = g.adj[k];
            dinic.add_edge(2 * i + 1, 2 * j, INF);
        }
    }
    for (int s : fam.sources) dinic.add_edge(S, 2 * s, INF);
    for (int t : fam.targets) dinic.add_edge(2 * t + 1, T, INF);
    long long flow = dinic.max_flow(S, T);
    auto seen = dinic.reachable(S);
    res.density.assign(n, 0.0);
    double cut_value = 0.0;
    for (int i = 0; i < n; ++i) {
        if (seen[2 * i] && !seen[2 * i + 1]) {
            res.density[i] = 1.0 / g.step;
            cut_value += weights[i] / g.step;
        }
    }
    res.value = cut_value;
    res.iterations = dinic.phases();
    res.gap = std::abs(cut_value - (double)flow * quantum);
    auto [len, path] = shortest_path(g, fam, res.density);
    res.converged = len >= 1.0 - tol;
    if (!path.empty()) res.active_paths.push_back(path);
    return res;
}

}  // namespace

ModulusResult solve_modulus(const GridGraph& g, const FamilySpec& fam, double p,
                            const std::vector<double>& weights, double tol,
                            const SolveOptions& opts) {
    if (p < 1.0 || p > 8.0) throw std::invalid_argument("solve_modulus: p outside [1,8]");
    if (tol <= 1e-10 || tol >= 1e-2) throw std::invalid_argument("solve_modulus: tol range");
    if ((int)weights.size() != g.size()) throw std::invalid_argument("solve_modulus: weights size");
    for (double w : weights) {
        if (w < 0) throw std::invalid_argument("solve_modulus: negative weight");
    }
    if (fam.sources.empty() || fam.targets.empty())
        throw std::invalid_argument("solve_modulus: empty family");
    {
        std::set<int> s(fam.sources.begin(), fam.sources.end());
        for (int t : fam.targets) {
            if (s.count(t)) throw std::invalid_argument("solve_modulus: sources meet targets");
        }
    }
    if (p == 1.0) return solve_p1_mincut(g, fam, weights, tol);

    InnerState st(g, p, weights);
    ModulusResult res;
    std::set<std::uint64_t> seen_paths;
    const double final_inner = opts.inner_tol;  // 1e-9 relative at termination
    int patience = 0;
    std::vector<double> dist;
    std::vector<int> parent;
    while ((int)st.paths.size() < opts.max_constraints) {
        ++res.iterations;
        dijkstra(g, fam, st.rho, dist, parent);
        double best = std::numeric_limits<double>::infinity();
        for (int t : fam.targets) best = std::min(best, dist[t]);
        if (best == std::numeric_limits<double>::infinity()) {
            res.value = 0.0;
            res.density.assign(g.size(), 0.0);
            return res;
        }
        if (opts.verbose && res.iterations % 25 == 0) {
            std::fprintf(stderr, "[mod] iter=%d paths=%zu best=%.6f obj=%.6f queue=%zu\n",
                         res.iterations, st.paths.size(), best, st.objective(), st.queue.size());
        }
        if (best >= 1.0 - tol) {
            // Final polish to the inner tolerance, then re-check the oracle.
            for (int round = 0; round < 60; ++round) {
                st.drain(final_inner, 400'000'000LL);
                if (st.max_violation(final_inner * 0.5) <= final_inner) break;
            }
            auto [len2, path2] = shortest_path(g, fam, st.rho);
            (void)path2;
            if (len2 >= 1.0 - tol) {
                res.converged = true;
                res.gap = st.objective() * (std::pow(1.0 / std::max(len2, 1e-12), p) - 1.0);
                break;
            }
            continue;
        }
        // Multi-cut: violated shortest paths to several targets at once.
        std::vector<std::pair<double, int>> violated;
        for (int t : fam.targets) {
            if (dist[t] < 1.0 - tol) violated.push_back({dist[t], t});
        }
        std::sort(violated.begin(), violated.end());
        int added = 0;
        size_t stride = std::max<size_t>(1, violated.size() / 24);
        for (size_t i = 0; i < violated.size() && added < 24; i += stride) {
            auto path = extract_path(parent, violated[i].second);
            std::uint64_t h = hash_path(path);
            if (seen_paths.insert(h).second) {
                st.add_path(std::move(path));
                ++added;
            }
        }
        if (added == 0) {
            if (++patience > 6) {
                res.converged = false;
                res.gap = st.objective() * (std::pow(1.0 / std::max(best, 1e-12), p) - 1.0);
                break;
            }
            st.max_violation(0.0);  // requeue everything and grind
            st.drain(final_inner, 400'000'000LL);
            continue;
        }
        patience = 0;
        // Looser inner tolerance far from optimality, tightening as the
        // oracle value climbs toward 1.
        double inner = std::min(1e-4, std::max(final_inner, (1.0 - best) * 0.02));
        st.drain(inner, 50'000'000LL);
    }
    if ((int)st.paths.size() >= opts.max_constraints) res.converged = false;
    res.value = st.objective();
    res.density = st.rho;
    for (size_t k = 0; k < st.paths.size(); ++k) {
        if (st.lambda[k] > 1e-15) res.active_paths.push_back(st.paths[k]);
    }
    return res;
}

Rat crossing_upper_bound_l1(const ScaleSequence& seq, int M) {
    seq.require_level(M);
    Rat r(1);
    for (int j = 1; j <= M; ++j) r *= Rat(seq.n(j), seq.n(j) + 1);
    return r;
}

RieszWeights riesz_weights(const GridGraph& g, const measure::CanonicalMeasure& mu,
                           const RPoint& x, const RPoint& y, double C2) {
    if (g.level <= 0) throw std::invalid_argument("riesz_weights: carpet grid required");
    const auto& seq = mu.seq();
    int M = g.level;
    Rat d2 = dist2(x, y);
    if (d2 < 4 * sqr(seq.side(M)))
        throw std::invalid_argument("riesz_weights: |x-y| < 2 s_M, resolution too coarse");
    RieszWeights out;
    out.x = x;
    out.y = y;
    out.d = std::sqrt(to_double(d2));
    double R = C2 * out.d;
    double floor_d = to_double(seq.side(M)) / 2.0;
    double v = 1.0 / (double)seq.cell_count(M);
    double xd = to_double(x.x), yd = to_double(x.y);
    double xd2 = to_double(y.x), yd2 = to_double(y.y);
    double sd = g.step;

    measure::BallMidCache mu_x(mu, x, M), mu_y(mu, y, M);

    out.w.assign(g.size(), 0.0);
    for (int i = 0; i < g.size(); ++i) {
        double cx = (g.coords[i].first + 0.5) * sd;
        double cy = (g.coords[i].second + 0.5) * sd;
        double dx = std::hypot(cx - xd, cy - yd);
        double dy = std::hypot(cx - xd2, cy - yd2);
        if (dx > R && dy > R) continue;
        double dxf = std::max(dx, floor_d), dyf = std::max(dy, floor_d);
        out.w[i] = v * (dxf / mu_x(dxf) + dyf / mu_y(dyf));
    }
    return out;
}

KeithResult keith_ratio(const GridGraph& g, const measure::CanonicalMeasure& mu, const RPoint& x,
                        const RPoint& y, double p, double C2, double tol) {
    if (x == y) throw std::invalid_argument("keith_ratio: x == y");
    const auto& seq = mu.seq();
    auto cx = carpet::locate_cell(seq, x, g.level);
    auto cy = carpet::locate_cell(seq, y, g.level);
    int sx = g.node_at(cx.gx, cx.gy), sy = g.node_at(cy.gx, cy.gy);
    if (sx < 0 || sy < 0) throw std::invalid_argument("keith_ratio: endpoint cell missing");
    if (sx == sy) throw std::invalid_argument("keith_ratio: endpoints share a cell");
    auto rz = riesz_weights(g, mu, x, y, C2);
    FamilySpec fam{{sx}, {sy}};
    KeithResult kr;
    kr.mod = solve_modulus(g, fam, p, rz.w, tol);
    kr.ratio = kr.mod.value * std::pow(rz.d, p - 1.0);
    return kr;
}

}  // namespace carpetlab::modgraph
