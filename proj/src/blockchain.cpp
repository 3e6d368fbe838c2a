#include "carpetlab/curvefam.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

namespace carpetlab::curvefam {

namespace {

// Directions: 0 = +y, 1 = +x, 2 = -y, 3 = -x.
const std::int64_t DX[4] = {0, 1, 0, -1};
const std::int64_t DY[4] = {1, 0, -1, 0};

Side side_of_dir(int d) {
    switch (d) {
        case 0: return Side::Top;
        case 1: return Side::Right;
        case 2: return Side::Bottom;
        default: return Side::Left;
    }
}
int dir_of_side(Side s) {
    switch (s) {
        case Side::Top: return 0;
        case Side::Right: return 1;
        case Side::Bottom: return 2;
        default: return 3;
    }
}

using Cell = std::pair<std::int64_t, std::int64_t>;

struct Occupancy {
    std::vector<RRect> rects;
    bool blocked(const RRect& r) const {
        for (const auto& o : rects) {
            if (o.overlaps_interior(r)) return true;
        }
        return false;
    }
};

RRect cell_rect_at(const ScaleSequence& seq, int level, const Cell& c) {
    const Rat& s = seq.side(level);
    return RRect{Rat(c.first) * s, Rat(c.second) * s, Rat(c.first + 1) * s,
                 Rat(c.second + 1) * s};
}

bool retained_at(const ScaleSequence& seq, int level, const Cell& c) {
    return carpet::is_retained(seq, carpet::GlobalCell{level, c.first, c.second});
}

struct RoutePlan {
    std::vector<Cell> cells;
    std::vector<int> dirs;  // dirs[i] = direction entering cells[i]
    int exit_dir = 0;
};

// Deterministic Dijkstra over (cell, entering-direction); cost is
// lexicographic (near-endpoint penalty, turns, length).
std::optional<RoutePlan> route(const ScaleSequence& seq, int level, const Cell& start,
                               int start_dir, const Cell& goal, int exit_dir,
                               const std::function<bool(const Cell&)>& in_window,
                               const Occupancy& occ, const std::vector<Cell>& avoid_near) {
    auto penalized = [&](const Cell& c) {
        for (const auto& a : avoid_near) {
            if (std::llabs(c.first - a.first) <= 1 && std::llabs(c.second - a.second) <= 1)
                return true;
        }
        return false;
    };
    auto usable = [&](const Cell& c) {
        if (!in_window(c)) return false;
        if (!retained_at(seq, level, c)) return false;
        return !occ.blocked(cell_rect_at(seq, level, c));
    };
    if (!usable(start)) return std::nullopt;
    using State = std::pair<Cell, int>;
    std::map<State, long long> dist;
    std::map<State, State> parent;
    using Item = std::pair<long long, State>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    long long c0 = (penalized(start) ? 1'000'000'000'000LL : 0) + 1;
    State s0{start, start_dir};
    dist[s0] = c0;
    pq.push({c0, s0});
    std::optional<State> found;
    while (!pq.empty()) {
        auto [d, st] = pq.top();
        pq.pop();
        if (d > dist[st]) continue;
        auto [cell, din] = st;
        if (cell == goal && din != (exit_dir + 2) % 4) {
            long long extra = din == exit_dir ? 0 : 1'000'000LL;
            // Account for the implicit exit turn when comparing goals.
            found = st;
            (void)extra;
            break;
        }
        for (int nd = 0; nd < 4; ++nd) {
            if (nd == (din + 2) % 4) continue;  // no U-turns inside a cell
            Cell nxt{cell.first + DX[nd], cell.second + DY[nd]};
            if (!usable(nxt)) continue;
            long long step = 1 + (nd == din ? 0 : 1'000'000LL) +
                             (penalized(nxt) ? 1'000'000'000'000LL : 0);
            State ns{nxt, nd};
            long long ndist = d + step;
            auto it = dist.find(ns);
            if (it == dist.end() || ndist < it->second) {
                dist[ns] = ndist;
                parent[ns] = st;
                pq.push({ndist, ns});
            }
        }
    }
    if (!found) return std::nullopt;
    RoutePlan plan;
    plan.exit_dir = exit_dir;
    State cur = *found;
    std::vector<State> states;
    while (true) {
        states.push_back(cur);
        auto it = parent.find(cur);
        if (it == parent.end()) break;
        cur = it->second;
    }
    std::reverse(states.begin(), states.end());
    for (const auto& [c, d] : states) {
        plan.cells.push_back(c);
        plan.dirs.push_back(d);
    }
    return plan;
}

struct BuiltBlock {
    DirectedBlock block;
    ConnKind kind;
};

DirectedBlock block_from_cells(int level, const Cell& a, const Cell& b, Side leading) {
    DirectedBlock blk;
    blk.level = level;
    blk.x0 = std::min(a.first, b.first);
    blk.y0 = std::min(a.second, b.second);
    blk.x1 = std::max(a.first, b.first) + 1;
    blk.y1 = std::max(a.second, b.second) + 1;
    blk.leading = leading;
    return blk;
}

// Compress a routed cell path into straight corridors (length <= 10, not
// crossing parent squares) and 1x1 turn blocks.
std::vector<BuiltBlock> blocks_from_route(const ScaleSequence& seq, int level,
                                          const RoutePlan& plan) {
    std::vector<BuiltBlock> out;
    int n = seq.n(level);
    const auto& cells = plan.cells;
    std::vector<int> outdir(cells.size());
    for (size_t i = 0; i + 1 < cells.size(); ++i) outdir[i] = plan.dirs[i + 1];
    outdir[cells.size() - 1] = plan.exit_dir;

    size_t i = 0;
    while (i < cells.size()) {
        if (outdir[i] != plan.dirs[i]) {
            // Turn cell.
            out.push_back({block_from_cells(level, cells[i], cells[i], side_of_dir(outdir[i])),
                           ConnKind::Turn});
            ++i;
            continue;
        }
        // Straight run in direction dirs[i].
        int d = plan.dirs[i];
        size_t j = i;
        auto parent_of = [&](const Cell& c) {
            return Cell{c.first / n, c.second / n};
        };
        while (j + 1 < cells.size() && plan.dirs[j + 1] == d && outdir[j + 1] == d &&
               j + 1 - i < 10 && parent_of(cells[j + 1]) == parent_of(cells[i])) {
            ++j;
        }
        // outdir[j] may be a turn handled by the next block only if j stops
        // before a direction change; run covers cells[i..j].
        if (outdir[j] != d && j > i) --j;  // leave the turning cell to its own block
        out.push_back({block_from_cells(level, cells[i], cells[j], side_of_dir(d)),
                       ConnKind::Straight});
        i = j + 1;
    }
    return out;
}

// Local frame for the climb through a square U in travel direction d.
struct ClimbFrame {
    Cell base;  // global cell of local (0,0)
    int d;
    Cell cell(std::int64_t i, std::int64_t j) const {
        switch (d) {
            case 0: return {base.first + i, base.second + j};
            case 1: return {base.first + j, base.second + i};
            case 2: return {base.first - i, base.second - j};
            default: return {base.first - j, base.second - i};
        }
    }
};

ClimbFrame climb_frame(const ScaleSequence&, int n, const Cell& u_parent, int d) {
    std::int64_t bx = u_parent.first * n, by = u_parent.second * n;
    switch (d) {
        case 0: return {{bx, by}, 0};
        case 1: return {{bx, by}, 1};
        case 2: return {{bx + n - 1, by + n - 1}, 2};
        default: return {{bx + n - 1, by + n - 1}, 3};
    }
}

DirectedBlock block_from_local(const ClimbFrame& f, int level, std::int64_t i0, std::int64_t j0,
                               std::int64_t i1, std::int64_t j1, Side local_leading) {
    Cell a = f.cell(i0, j0), b = f.cell(i1 - 1, j1 - 1);
    Side leading = side_of_dir((dir_of_side(local_leading) + f.d) % 4);
    return block_from_cells(level, a, b, leading);
}

struct ChainState {
    int level;       // scale of the next route
    Cell entry;      // first cell of the route at this scale
    Side entry_side; // side of `entry` shared with the previous block
};

struct BuildContext {
    const ScaleSequence& seq;
    int M;
    Occupancy occ;
    std::vector<Cell> avoid_m;  // penalized cells near x and y (scaled per level)
    RPoint x, y;
};

std::vector<Cell> near_cells(const ScaleSequence& seq, int level, const RPoint& p) {
    auto cells = carpet::cells_containing(seq, p, level);
    std::vector<Cell> out;
    for (const auto& c : cells) out.emplace_back(c.gx, c.gy);
    return out;
}

void occupy(BuildContext& ctx, const DirectedBlock& b) { ctx.occ.rects.push_back(b.rect(ctx.seq)); }

// Endpoint 2x1 block containing the cell of p, leading edge on the far side.
std::pair<DirectedBlock, int> endpoint_block(const BuildContext& ctx, const RPoint& p) {
    const ScaleSequence& seq = ctx.seq;
    int M = ctx.M;
    auto T = carpet::locate_cell(seq, p, M);
    int n = seq.n(M), c = seq.center(M);
    std::int64_t lx = T.gx % n, ly = T.gy % n;
    for (int d = 0; d < 4; ++d) {
        std::int64_t pi = lx + DX[d], pj = ly + DY[d];
        if (pi < 0 || pi >= n || pj < 0 || pj >= n) continue;        // leaves the parent
        if (pi == c && pj == c) continue;                            // removed center
        std::int64_t qi = pi + DX[d], qj = pj + DY[d];
        if (qi < 0 || qi >= n || qj < 0 || qj >= n) continue;        // far edge on parent wall
        if (qi == c && qj == c) continue;                            // far edge on removed square
        Cell partner{T.gx + DX[d], T.gy + DY[d]};
        DirectedBlock blk = block_from_cells(M, {T.gx, T.gy}, partner, side_of_dir(d));
        try {
            validate_block(seq, blk);
        } catch (const std::invalid_argument&) {
            continue;
        }
        return {blk, d};
    }
    throw std::runtime_error("block_chain step 1: no valid endpoint block");
}

// One ascent round: route inside the parent of state.entry, cross into a
// sibling square U, climb U, exit through its far wall.
std::vector<BuiltBlock> ascend_round(BuildContext& ctx, ChainState& state) {
    const ScaleSequence& seq = ctx.seq;
    int nlvl = state.level;
    int n = seq.n(nlvl);
    Cell P{state.entry.first / n, state.entry.second / n};
    int din = (dir_of_side(state.entry_side) + 2) % 4;
    int k = (int)((n + 9) / 10);

    std::vector<int> cand;
    for (int delta : {0, 3, 1}) cand.push_back((din + delta) % 4);  // straight, right, left
    auto avoid = near_cells(seq, nlvl, ctx.x);
    for (const auto& c : near_cells(seq, nlvl, ctx.y)) avoid.push_back(c);

    for (int d : cand) {
        Cell U{P.first + DX[d], P.second + DY[d]};
        if (!retained_at(seq, nlvl - 1, U)) continue;
        Cell Vn{U.first + DX[d], U.second + DY[d]};
        if (Vn.first < 0 || Vn.second < 0 || Vn.first >= seq.grid(nlvl - 1) ||
            Vn.second >= seq.grid(nlvl - 1))
            continue;
        if (!retained_at(seq, nlvl - 1, Vn)) continue;
        ClimbFrame fr = climb_frame(seq, n, U, d);
        for (std::int64_t e : {std::int64_t(0), std::int64_t(n - 1)}) {
            // Climb layout in U.
            std::vector<BuiltBlock> climb;
            std::int64_t top = n - k;  // slab rows [top, n)
            std::int64_t corridor_end = k >= 2 ? top - 1 : top;  // strip row only when k >= 2
            for (std::int64_t j0 = 0; j0 < corridor_end; j0 += 10) {
                std::int64_t j1 = std::min(corridor_end, j0 + 10);
                climb.push_back(
                    {block_from_local(fr, nlvl, e, j0, e + 1, j1, Side::Top), ConnKind::Straight});
            }
            if (k >= 2) {
                std::int64_t i0 = e == 0 ? 0 : n - k;
                climb.push_back({block_from_local(fr, nlvl, i0, top - 1, i0 + k, top, Side::Top),
                                 ConnKind::Expand});
            }
            climb.push_back(
                {block_from_local(fr, nlvl, 0, top, n, n, Side::Top), ConnKind::ExpandParent});
            bool ok = true;
            for (const auto& bb : climb) {
                if (ctx.occ.blocked(bb.block.rect(seq))) ok = false;
            }
            if (!ok) continue;
            // Route inside P from the entry cell to the wall cell under U-local (e, 0).
            Cell exit_cell = fr.cell(e, -1);
            auto in_P = [&](const Cell& c) {
                return c.first / n == P.first && c.second / n == P.second;
            };
            auto plan = route(seq, nlvl, state.entry, din, exit_cell, d, in_P, ctx.occ, avoid);
            if (!plan) continue;
            std::vector<BuiltBlock> out = blocks_from_route(seq, nlvl, *plan);
            for (auto& bb : climb) out.push_back(bb);
            for (const auto& bb : out) occupy(ctx, bb.block);
            state = ChainState{nlvl - 1, Vn, opposite(side_of_dir(d))};
            return out;
        }
    }
    throw std::runtime_error("block_chain step 2: no admissible sibling square at level " +
                             std::to_string(nlvl));
}

}  // namespace

BlockChain block_chain(const ScaleSequence& seq, const RPoint& x, const RPoint& y, int M,
                       const ChainOptions& opts) {
    seq.require_level(M);
    if (x == y) throw std::invalid_argument("block_chain: x == y");
    for (int j = 1; j <= M; ++j) {
        int lim = opts.enforce_scale_bound ? 20 : 5;
        if (seq.n(j) < lim)
            throw std::invalid_argument("block_chain: a_" + std::to_string(j) +
                                        " too large for the chain algorithm");
    }
    Rat d2 = dist2(x, y);
    if (d2 < 100 * sqr(seq.side(M)))
        throw std::invalid_argument("block_chain: |x-y| < 10 s_M (use the near-field family)");
    int m = 1;
    while (100 * sqr(seq.side(m)) > d2) ++m;  // m <= M by the check above

    BuildContext ctx{seq, M, {}, {}, x, y};
    ConnectionOptions copts{opts.enforce_scale_bound};

    // Endpoint blocks and ascents on both sides.
    auto [bx, dx0] = endpoint_block(ctx, x);
    occupy(ctx, bx);
    auto [by, dy0] = endpoint_block(ctx, y);
    occupy(ctx, by);

    auto beyond = [&](const DirectedBlock& b, int d) {
        LatticeEdge L = b.leading_edge(seq);
        RPoint mid = L.seg.point_at((L.seg.lo + L.seg.hi) / 2);
        const Rat& s = seq.side(M);
        Rat cxr = mid.x / s + Rat(DX[d], 2), cyr = mid.y / s + Rat(DY[d], 2);
        return Cell{rat_floor(cxr).convert_to<std::int64_t>(),
                    rat_floor(cyr).convert_to<std::int64_t>()};
    };

    std::vector<BuiltBlock> side_x, side_y;
    ChainState st_x{M, beyond(bx, dx0), opposite(side_of_dir(dx0))};
    ChainState st_y{M, beyond(by, dy0), opposite(side_of_dir(dy0))};
    for (int n = M; n >= m + 1; --n) {
        auto blocks = ascend_round(ctx, st_x);
        side_x.insert(side_x.end(), blocks.begin(), blocks.end());
    }
    for (int n = M; n >= m + 1; --n) {
        auto blocks = ascend_round(ctx, st_y);
        side_y.insert(side_y.end(), blocks.begin(), blocks.end());
    }

    // Bridge at level m inside a bounded window around the two entry cells.
    auto avoid = near_cells(seq, m, x);
    for (const auto& c : near_cells(seq, m, y)) avoid.push_back(c);
    std::int64_t pad = 2 * seq.n(m) + 5;
    std::int64_t wx0 = std::min(st_x.entry.first, st_y.entry.first) - pad;
    std::int64_t wx1 = std::max(st_x.entry.first, st_y.entry.first) + pad;
    std::int64_t wy0 = std::min(st_x.entry.second, st_y.entry.second) - pad;
    std::int64_t wy1 = std::max(st_x.entry.second, st_y.entry.second) + pad;
    auto window = [&](const Cell& c) {
        return c.first >= std::max<std::int64_t>(0, wx0) &&
               c.first <= std::min(seq.grid(m) - 1, wx1) &&
               c.second >= std::max<std::int64_t>(0, wy0) &&
               c.second <= std::min(seq.grid(m) - 1, wy1);
    };
    int din_x = (dir_of_side(st_x.entry_side) + 2) % 4;
    int dexit_y = dir_of_side(st_y.entry_side);
    auto plan = route(seq, m, st_x.entry, din_x, st_y.entry, dexit_y, window, ctx.occ, avoid);
    if (!plan) throw std::runtime_error("block_chain step 4: bridge route not found");
    auto bridge = blocks_from_route(seq, m, *plan);
    for (const auto& bb : bridge) occupy(ctx, bb.block);

    // Assemble in traversal order; the meeting block C_0 is the middle of the
    // bridge. Blocks after it carry their entry edge as leading edge.
    BlockChain chain;
    chain.x = x;
    chain.y = y;
    chain.level_M = M;
    chain.level_m = m;
    chain.links.push_back({bx, ConnKind::Straight, true, false, nullptr});
    for (const auto& bb : side_x) chain.links.push_back({bb.block, bb.kind, false, false, nullptr});
    int bridge_start = (int)chain.links.size();
    for (const auto& bb : bridge) chain.links.push_back({bb.block, bb.kind, false, false, nullptr});
    chain.mid = bridge_start + (int)(bridge.size() / 2);
    for (int i = (int)side_y.size() - 1; i >= 0; --i)
        chain.links.push_back({side_y[i].block, side_y[i].kind, false, true, nullptr});
    chain.links.push_back({by, ConnKind::Straight, true, true, nullptr});

    // Reversed-bridge leading edges: the leading edge of a y-side block is
    // its shared edge with the previous (x-ward) block.
    for (int i = chain.mid + 1; i < bridge_start + (int)bridge.size(); ++i) {
        RRect a = chain.links[i - 1].block.rect(seq);
        RRect b = chain.links[i].block.rect(seq);
        auto inter = rect_intersection(a, b);
        if (!inter) throw std::runtime_error("block_chain: bridge blocks not adjacent");
        for (Side s : {Side::Left, Side::Right, Side::Bottom, Side::Top}) {
            LatticeEdge e = chain.links[i].block.side_edge(seq, s);
            bool match = e.seg.vertical ? (inter->x0 == inter->x1 && inter->x0 == e.seg.fixed &&
                                           inter->y0 == e.seg.lo && inter->y1 == e.seg.hi)
                                        : (inter->y0 == inter->y1 && inter->y0 == e.seg.fixed &&
                                           inter->x0 == e.seg.lo && inter->x1 == e.seg.hi);
            if (match) {
                chain.links[i].block.leading = s;
                break;
            }
        }
    }

    // Families.
    int last = (int)chain.links.size() - 1;
    chain.links[0].family = build_fan(seq, M, x, chain.links[0].block.leading_edge(seq));
    chain.links[last].family = build_fan(seq, M, y, chain.links[last].block.leading_edge(seq));
    for (int i = 1; i < last; ++i) {
        if (i <= chain.mid) {
            chain.links[i].family = build_connection(seq, M, chain.links[i].kind,
                                                     chain.links[i - 1].block,
                                                     chain.links[i].block, copts);
        } else {
            chain.links[i].family = build_connection(seq, M, chain.links[i].kind,
                                                     chain.links[i + 1].block,
                                                     chain.links[i].block, copts);
            chain.links[i].reversed = true;
        }
    }
    return chain;
}

bool ClauseReport::all_pass() const {
    for (const auto& e : entries) {
        if (!e.pass) return false;
    }
    return true;
}

namespace {
double rect_point_dist(const RRect& r, const RPoint& p) {
    return std::sqrt(to_double(rect_point_dist2(r, p)));
}

double seg_point_dist2_d(const RSegment& s, const RPoint& p) {
    Rat lo = s.lo, hi = s.hi;
    Rat c = s.vertical ? p.y : p.x;
    Rat cl = std::min(std::max(c, lo), hi);
    RPoint q = s.point_at(cl);
    return to_double(dist2(p, q));
}
}  // namespace

ClauseReport validate_chain(const ScaleSequence& seq, const BlockChain& chain) {
    ClauseReport rep;
    auto add = [&](int clause, bool pass, double margin, std::string note) {
        rep.entries.push_back({clause, pass, margin, std::move(note)});
    };
    const auto& L = chain.links;
    int last = (int)L.size() - 1;
    const Rat& sM = seq.side(chain.level_M);

    // (1) endpoint blocks are 2x1 at scale s_M containing x and y.
    auto is_2x1 = [](const DirectedBlock& b) {
        return (b.width() == 1 && b.height() == 2) || (b.width() == 2 && b.height() == 1);
    };
    add(1,
        is_2x1(L[0].block) && is_2x1(L[last].block) && L[0].block.level == chain.level_M &&
            L[last].block.level == chain.level_M && L[0].block.rect(seq).contains(chain.x) &&
            L[last].block.rect(seq).contains(chain.y),
        0.0, "endpoint 2x1 blocks contain x and y");

    // (2) dist(x, L_{K-}) >= s_M / 2.
    double dx = std::sqrt(seg_point_dist2_d(L[0].block.leading_edge(seq).seg, chain.x));
    double dy = std::sqrt(seg_point_dist2_d(L[last].block.leading_edge(seq).seg, chain.y));
    double half = to_double(sM) / 2.0;
    add(2, dx >= half && dy >= half, std::min(dx, dy) / half - 1.0, "endpoint edge clearance");

    // (3) endpoint families are straight-line fans.
    bool cones = L[0].endpoint && L[last].endpoint && L[0].family && L[last].family;
    if (cones) {
        Polyline pl = L[0].family->curve_at(L[0].family->param_length() / 2);
        cones = pl.pts.size() == 2 && pl.pts[0] == chain.x;
    }
    add(3, cones, 0.0, "endpoint cones");

    // (4) follows relations + measured connection constants <= C0 = 2.
    bool follows_ok = true;
    double worst_c = 0.0;
    std::string note4;
    for (int i = 0; i + 1 <= last; ++i) {
        int owner = (i + 1 <= chain.mid) ? i : i + 1;  // whose leading edge is shared
        LatticeEdge e = L[owner].block.leading_edge(seq);
        auto inter = rect_intersection(L[i].block.rect(seq), L[i + 1].block.rect(seq));
        bool match = false;
        if (inter) {
            match = e.seg.vertical ? (inter->x0 == inter->x1 && inter->x0 == e.seg.fixed &&
                                      inter->y0 == e.seg.lo && inter->y1 == e.seg.hi)
                                   : (inter->y0 == inter->y1 && inter->y0 == e.seg.fixed &&
                                      inter->x0 == e.seg.lo && inter->x1 == e.seg.hi);
        }
        if (!match) {
            follows_ok = false;
            note4 = "blocks " + std::to_string(i) + "," + std::to_string(i + 1);
            break;
        }
    }
    for (int i = 1; i < last && follows_ok; ++i) {
        double c = connection_constant(*L[i].family, seq, chain.level_M);
        worst_c = std::max(worst_c, c);
        if (c > 2.0) {
            follows_ok = false;
            note4 = "connection constant " + std::to_string(c) + " at block " + std::to_string(i);
        }
    }
    add(4, follows_ok, 2.0 - worst_c, note4.empty() ? "follows + constants" : note4);

    // (5) min(dist(x,C), dist(y,C)) comparable to diam(C) and diam(L), middle blocks.
    bool c5 = true;
    double worst5 = 0.0;
    for (int i = 1; i < last; ++i) {
        double diam = L[i].block.diam(seq);
        double dL = to_double(L[i].block.leading_edge(seq).seg.length());
        double mind = std::min(rect_point_dist(L[i].block.rect(seq), chain.x),
                               rect_point_dist(L[i].block.rect(seq), chain.y));
        bool ok = mind <= 100.0 * diam && diam <= 100.0 * std::max(mind, 1e-300) &&
                  diam <= 100.0 * dL;
        worst5 = std::max(worst5, diam > 0 ? mind / diam : 0.0);
        if (!ok) c5 = false;
    }
    add(5, c5, worst5, "dist-diameter comparability (constant 100)");

    // (6) sum of diameters <= 100 |x-y|.
    double sum = 0.0;
    for (const auto& l : L) sum += l.block.diam(seq);
    double dxy = std::sqrt(to_double(dist2(chain.x, chain.y)));
    add(6, sum <= 100.0 * dxy, sum / dxy, "sum of diameters vs 100 |x-y|");

    // (7) essential disjointness.
    bool c7 = true;
    for (size_t i = 0; i < L.size() && c7; ++i) {
        for (size_t j = i + 1; j < L.size(); ++j) {
            if (L[i].block.rect(seq).overlaps_interior(L[j].block.rect(seq))) {
                c7 = false;
                break;
            }
        }
    }
    add(7, c7, 0.0, "essentially disjoint blocks");
    return rep;
}

namespace {
class ChainFamily final : public CurveFamily {
  public:
    std::vector<ChainLink> links;
    std::vector<bool> flip;  // parameter-orientation fix per link

    Polyline section(size_t i, const Rat& r) const {
        const auto& l = links[i];
        Rat len = l.family->param_length();
        Rat t = r * len;
        if (flip[i]) t = len - t;
        Polyline pl = l.family->curve_at(t);
        if (l.reversed) std::reverse(pl.pts.begin(), pl.pts.end());
        return pl;
    }

    Rat param_length() const override { return links.front().family->param_length(); }

    Polyline curve_at(const Rat& t) const override {
        Rat r = t / param_length();
        Polyline out;
        for (size_t i = 0; i < links.size(); ++i) {
            Polyline pl = section(i, r);
            for (const auto& p : pl.pts) {
                if (out.pts.empty() || !(out.pts.back() == p)) out.pts.push_back(p);
            }
        }
        return out;
    }

    double density_at(const RPoint& p) const override {
        double w = 0.0;
        for (const auto& l : links) w += l.family->density_at(p);
        return w;
    }

    double density_sup() const override {
        double s = 0.0;
        for (const auto& l : links) {
            if (!l.endpoint) s = std::max(s, l.family->density_sup());
        }
        return s;
    }

    double nu_rect(const RRect& A) const override {
        double v = 0.0;
        for (const auto& l : links) v += l.family->nu_rect(A);
        return v;
    }
};
}  // namespace

std::shared_ptr<CurveFamily> concatenate(const ScaleSequence& seq, const BlockChain& chain) {
    if (chain.links.empty()) throw std::invalid_argument("concatenate: empty chain");
    for (const auto& l : chain.links) {
        if (!l.family) throw std::invalid_argument("concatenate: missing family");
    }
    auto fam = std::make_shared<ChainFamily>();
    fam->links = chain.links;
    fam->flip.assign(chain.links.size(), false);
    // Orientation fix: the ordered bijections are defined up to the direction
    // each edge pattern is swept; align consecutive sections so the curves
    // actually meet, then verify the gluing. Parameters use the prime
    // denominator 1009, which cannot hit a pattern breakpoint (breakpoint
    // denominators carry only carpet factors), so the bijection is
    // single-valued at every tested parameter.
    const Rat probes[4] = {Rat(17, 1009), Rat(345, 1009), Rat(611, 1009), Rat(997, 1009)};
    for (size_t i = 0; i + 1 < chain.links.size(); ++i) {
        Polyline pa = fam->section(i, probes[1]);
        bool matched = false;
        for (bool f : {false, true}) {
            fam->flip[i + 1] = f;
            Polyline pb = fam->section(i + 1, probes[1]);
            if (pa.pts.back() == pb.pts.front()) {
                matched = true;
                break;
            }
        }
        if (!matched)
            throw std::invalid_argument("concatenate: gluing mismatch between blocks " +
                                        std::to_string(i) + " and " + std::to_string(i + 1));
    }
    for (const Rat& r : probes) {
        for (size_t i = 0; i + 1 < chain.links.size(); ++i) {
            Polyline pa = fam->section(i, r);
            Polyline pb = fam->section(i + 1, r);
            if (!(pa.pts.back() == pb.pts.front()))
                throw std::invalid_argument("concatenate: gluing mismatch between blocks " +
                                            std::to_string(i) + " and " + std::to_string(i + 1));
        }
    }
    (void)seq;
    return fam;
}

double density_vs_riesz(const CurveFamily& fam, const measure::CanonicalMeasure& mu,
                        const RPoint& x, const RPoint& y, double C2, int M, int t_samples,
                        int arc_samples) {
    measure::BallMidCache mu_x(mu, x, M), mu_y(mu, y, M);
    const auto& seq = mu.seq();
    double vM = 1.0 / (double)seq.cell_count(M);
    double sM = to_double(seq.side(M));
    double lebesgue_density = vM / (sM * sM);
    double dxy = std::sqrt(to_double(dist2(x, y)));
    double R = C2 * dxy;
    double xd = to_double(x.x), yd = to_double(x.y);
    double x2 = to_double(y.x), y2 = to_double(y.y);
    double sup = 0.0;
    Rat plen = fam.param_length();
    for (int i = 0; i < t_samples; ++i) {
        Rat t = plen * Rat(2 * i + 1, 2 * t_samples);
        Polyline pl = fam.curve_at(t);
        double total = pl.length();
        if (total <= 0) continue;
        for (int j = 0; j < arc_samples; ++j) {
            double target = total * (2 * j + 1) / (2.0 * arc_samples);
            // Walk the polyline to the target arclength.
            double acc = 0.0;
            RPoint p = pl.pts.front();
            for (size_t k = 1; k < pl.pts.size(); ++k) {
                double seg = std::sqrt(to_double(dist2(pl.pts[k - 1], pl.pts[k])));
                if (acc + seg >= target && seg > 0) {
                    Rat u = rat_from_double((target - acc) / seg);
                    p = RPoint{pl.pts[k - 1].x + u * (pl.pts[k].x - pl.pts[k - 1].x),
                               pl.pts[k - 1].y + u * (pl.pts[k].y - pl.pts[k - 1].y)};
                    break;
                }
                acc += seg;
            }
            double w = fam.density_at(p);
            if (w <= 0) continue;
            double pdx = std::hypot(to_double(p.x) - xd, to_double(p.y) - yd);
            double pdy = std::hypot(to_double(p.x) - x2, to_double(p.y) - y2);
            if (pdx == 0 || pdy == 0) continue;
            double kernel = 0.0;
            if (pdx <= R || pdy <= R) {
                kernel = lebesgue_density *
                         (pdx / std::max(1e-300, mu_x(pdx)) + pdy / std::max(1e-300, mu_y(pdy)));
            }
            if (kernel <= 0) continue;
            sup = std::max(sup, w / kernel);
        }
    }
    return sup;
}

}  // namespace carpetlab::curvefam
