#include "carpetlab/curvefam.hpp"

#include <algorithm>
#include <cmath>

namespace carpetlab::curvefam {

Side opposite(Side s) {
    switch (s) {
        case Side::Left: return Side::Right;
        case Side::Right: return Side::Left;
        case Side::Bottom: return Side::Top;
        default: return Side::Bottom;
    }
}

std::string to_string(ConnKind k) {
    switch (k) {
        case ConnKind::Expand: return "expand";
        case ConnKind::ExpandParent: return "expand_parent";
        case ConnKind::Turn: return "turn";
        default: return "straight";
    }
}

double Polyline::length() const {
    double len = 0.0;
    for (size_t i = 1; i < pts.size(); ++i) len += std::sqrt(to_double(dist2(pts[i - 1], pts[i])));
    return len;
}

// ---------------------------------------------------------------- pi sets

Rat PiSet::coord_at(const Rat& t, bool from_hi) const {
    Rat tt = from_hi ? length - t : t;
    if (tt < 0 || tt > length) throw std::out_of_range("PiSet: parameter outside [0, length]");
    Rat cum(0);
    for (const auto& [a, b] : intervals) {
        Rat w = b - a;
        if (tt <= cum + w) return a + (tt - cum);
        cum += w;
    }
    return intervals.back().second;
}

RPoint PiSet::point_at(const Rat& t, bool from_hi) const {
    return edge.seg.point_at(coord_at(t, from_hi));
}

namespace {
// Cumulative pattern length strictly left of `coord` (coord inside pattern).
Rat cum_of(const PiSet& ps, const Rat& coord) {
    Rat cum(0);
    for (const auto& [a, b] : ps.intervals) {
        if (coord <= b) return cum + std::max(Rat(0), Rat(coord - a));
        cum += b - a;
    }
    return ps.length;
}

bool in_pattern(const PiSet& ps, const Rat& coord) {
    for (const auto& [a, b] : ps.intervals) {
        if (coord >= a && coord <= b) return true;
        if (coord < a) return false;
    }
    return false;
}

// Pattern of one level-j cell (levels j+1..M), intervals in [0, s_j].
std::vector<std::pair<Rat, Rat>> cell_pattern(const ScaleSequence& seq, int j, int M) {
    if (j >= M) return {{Rat(0), seq.side(j)}};
    auto inner = cell_pattern(seq, j + 1, M);
    std::vector<std::pair<Rat, Rat>> out;
    int n = seq.n(j + 1), c = seq.center(j + 1);
    const Rat& s = seq.side(j + 1);
    for (int t = 0; t < n; ++t) {
        if (t == c) continue;
        Rat off = Rat(t) * s;
        for (const auto& [a, b] : inner) {
            Rat lo = off + a, hi = off + b;
            if (!out.empty() && out.back().second == lo) out.back().second = hi;
            else out.emplace_back(lo, hi);
        }
    }
    return out;
}
}  // namespace

PiSet pi_set(const ScaleSequence& seq, const LatticeEdge& L, int M) {
    seq.require_level(M);
    if (L.level < 0 || L.level > M) throw std::invalid_argument("pi_set: bad edge level");
    const Rat& s = seq.side(L.level);
    Rat klo = L.seg.lo / s, khi = L.seg.hi / s, kf = L.seg.fixed / s;
    if (denominator(klo) != 1 || denominator(khi) != 1 || denominator(kf) != 1)
        throw std::invalid_argument("pi_set: edge is not lattice-aligned");
    if (L.seg.lo >= L.seg.hi) throw std::invalid_argument("pi_set: empty edge");
    PiSet ps;
    ps.edge = L;
    auto unit = cell_pattern(seq, L.level, M);
    for (Int k = numerator(klo); k < numerator(khi); ++k) {
        Rat off = L.seg.lo + Rat(k - numerator(klo)) * s;
        for (const auto& [a, b] : unit) {
            Rat lo = off + a, hi = off + b;
            if (!ps.intervals.empty() && ps.intervals.back().second == lo)
                ps.intervals.back().second = hi;
            else ps.intervals.emplace_back(lo, hi);
        }
    }
    for (const auto& [a, b] : ps.intervals) ps.length += b - a;
    return ps;
}

// ----------------------------------------------------------------- blocks

RRect DirectedBlock::rect(const ScaleSequence& seq) const {
    const Rat& s = seq.side(level);
    return RRect{Rat(x0) * s, Rat(y0) * s, Rat(x1) * s, Rat(y1) * s};
}

LatticeEdge DirectedBlock::side_edge(const ScaleSequence& seq, Side s) const {
    RRect r = rect(seq);
    switch (s) {
        case Side::Left: return {level, {true, r.x0, r.y0, r.y1}};
        case Side::Right: return {level, {true, r.x1, r.y0, r.y1}};
        case Side::Bottom: return {level, {false, r.y0, r.x0, r.x1}};
        default: return {level, {false, r.y1, r.x0, r.x1}};
    }
}

double DirectedBlock::diam(const ScaleSequence& seq) const {
    RRect r = rect(seq);
    return std::sqrt(to_double(sqr(r.width()) + sqr(r.height())));
}

namespace {
// Segment overlap (positive length) between an edge and a rectangle boundary.
bool edge_meets_boundary(const RSegment& e, const RRect& r) {
    if (e.vertical) {
        if (e.fixed != r.x0 && e.fixed != r.x1) return false;
        return std::min(e.hi, r.y1) > std::max(e.lo, r.y0);
    }
    if (e.fixed != r.y0 && e.fixed != r.y1) return false;
    return std::min(e.hi, r.x1) > std::max(e.lo, r.x0);
}
}  // namespace

void validate_block(const ScaleSequence& seq, const DirectedBlock& b) {
    seq.require_level(b.level);
    if (b.level < 1) throw std::invalid_argument("block: level must be >= 1");
    if (b.x0 >= b.x1 || b.y0 >= b.y1) throw std::invalid_argument("block: empty");
    std::int64_t g = seq.grid(b.level);
    if (b.x0 < 0 || b.y0 < 0 || b.x1 > g || b.y1 > g)
        throw std::invalid_argument("block: outside the unit square");
    int n = seq.n(b.level);
    std::int64_t px = b.x0 / n, py = b.y0 / n;
    if ((b.x1 - 1) / n != px || (b.y1 - 1) / n != py)
        throw std::invalid_argument("block: crosses its parent square boundary");
    if (!carpet::is_retained(seq, carpet::GlobalCell{b.level - 1, px, py}))
        throw std::invalid_argument("block: parent square is not retained");
    int c = seq.center(b.level);
    std::int64_t cx = px * n + c, cy = py * n + c;
    if (cx >= b.x0 && cx < b.x1 && cy >= b.y0 && cy < b.y1)
        throw std::invalid_argument("block: contains the removed central subsquare");
    // Leading edge must not run along the removed square's boundary.
    DirectedBlock center{b.level, cx, cy, cx + 1, cy + 1, Side::Top};
    if (edge_meets_boundary(b.leading_edge(seq).seg, center.rect(seq)))
        throw std::invalid_argument("block: leading edge contains removed-square boundary");
}

// ------------------------------------------------- local frame (rotations)

namespace {
struct Frame {
    int rot = 0;  // CCW quarter turns, local -> global
    Rat tx{0}, ty{0};

    RPoint to_global(const RPoint& p) const {
        switch (rot) {
            case 0: return {p.x + tx, p.y + ty};
            case 1: return {-p.y + tx, p.x + ty};
            case 2: return {-p.x + tx, -p.y + ty};
            default: return {p.y + tx, -p.x + ty};
        }
    }
    RPoint to_local(const RPoint& p) const {
        Rat dx = p.x - tx, dy = p.y - ty;
        switch (rot) {
            case 0: return {dx, dy};
            case 1: return {dy, -dx};
            case 2: return {-dx, -dy};
            default: return {-dy, dx};
        }
    }
    RRect to_local(const RRect& r) const {
        RPoint a = to_local(RPoint{r.x0, r.y0});
        RPoint b = to_local(RPoint{r.x1, r.y1});
        return RRect{std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x),
                     std::max(a.y, b.y)};
    }
};

Side rotate_side(Side s, int rot) {
    // Image of a local side under `rot` CCW quarter turns.
    static const Side order[4] = {Side::Bottom, Side::Right, Side::Top, Side::Left};
    int i = 0;
    while (order[i] != s) ++i;
    return order[(i + rot) % 4];
}

Frame frame_for(const ScaleSequence& seq, const DirectedBlock& c2) {
    Frame f;
    f.rot = 0;
    while (rotate_side(Side::Bottom, f.rot) != c2.leading) ++f.rot;
    RRect r = c2.rect(seq);
    switch (f.rot) {
        case 0: f.tx = r.x0; f.ty = r.y0; break;
        case 1: f.tx = r.x1; f.ty = r.y0; break;
        case 2: f.tx = r.x1; f.ty = r.y1; break;
        default: f.tx = r.x0; f.ty = r.y1; break;
    }
    return f;
}
}  // namespace

// ------------------------------------------------------ connection family

namespace {

class ConnectionFamily final : public CurveFamily {
  public:
    ConnKind kind;
    Frame frame;
    Rat W, H;          // local C2 = [0,W] x [0,H]
    Rat x10;           // local offset of L1 along the top edge (expand kinds)
    bool l1_right = false;  // turn: L1 on the right edge
    PiSet E, F;        // local patterns of L1 and L2
    Rat ratio;         // |F| / |E| >= 1

    Rat param_length() const override { return E.length; }

    Polyline curve_at(const Rat& t) const override {
        Polyline out;
        auto push = [&](const RPoint& p) {
            if (out.pts.empty() || !(out.pts.back() == p)) out.pts.push_back(frame.to_global(p));
        };
        if (kind == ConnKind::Turn) {
            Rat v = E.coord_at(t);
            Rat xt = F.coord_at(t * ratio, l1_right);
            Rat x_start = l1_right ? W : Rat(0);
            push({x_start, v});
            push({xt, v});
            push({xt, Rat(0)});
            return out;
        }
        Rat u = E.coord_at(t);
        if (kind == ConnKind::Straight) {
            push({u, H});
            push({u, Rat(0)});
            return out;
        }
        Rat xt = F.coord_at(t * ratio);
        Rat yu = u - x10;
        push({u, H});
        push({u, yu});
        push({xt, yu});
        push({xt, Rat(0)});
        return out;
    }

    double density_at(const RPoint& gp) const override {
        RPoint p = frame.to_local(gp);
        if (p.x < 0 || p.x > W || p.y < 0 || p.y > H) return 0.0;
        double dE = 1.0 / to_double(E.length);
        double dF = 1.0 / to_double(F.length);
        double w = 0.0;
        if (kind == ConnKind::Straight) {
            if (in_pattern(E, p.x)) w += dE;
            return w;
        }
        if (kind == ConnKind::Turn) {
            if (in_pattern(E, p.y)) {
                Rat xt = F.coord_at(cum_of(E, p.y) * ratio, l1_right);
                bool inside = l1_right ? (p.x >= xt) : (p.x <= xt);
                if (inside) w += dE;
            }
            if (in_pattern(F, p.x)) {
                Rat cf = l1_right ? F.length - cum_of(F, p.x) : cum_of(F, p.x);
                Rat v = E.coord_at(cf / ratio);
                if (p.y <= v) w += dF;
            }
            return w;
        }
        // Expand / ExpandParent.
        if (in_pattern(E, p.x) && p.y >= p.x - x10) w += dE;  // entry verticals
        Rat u = p.y + x10;
        if (u >= E.edge.seg.lo && u <= E.edge.seg.hi && in_pattern(E, u)) {
            Rat xt = F.coord_at(cum_of(E, u) * ratio);
            if (p.x >= std::min(u, xt) && p.x <= std::max(u, xt)) w += dE;  // crossovers
        }
        if (in_pattern(F, p.x)) {
            Rat u_inv = E.coord_at(cum_of(F, p.x) / ratio);
            if (p.y <= u_inv - x10) w += dF;  // exit verticals
        }
        return w;
    }

    double density_sup() const override { return 1.0 / to_double(E.length); }

    double nu_rect(const RRect& gA) const override {
        RRect A = frame.to_local(gA);
        // Clip to the block.
        A.x0 = std::max(A.x0, Rat(0));
        A.y0 = std::max(A.y0, Rat(0));
        A.x1 = std::min(A.x1, W);
        A.y1 = std::min(A.y1, H);
        if (A.x0 >= A.x1 || A.y0 >= A.y1) return 0.0;
        Rat total = integrate(A, Rat(0), E.length, 28);
        return to_double(total / E.length);
    }

  private:
    // Total clipped curve length at parameter t.
    Rat clipped_at(const RRect& A, const Rat& t) const {
        auto seg_v = [&](const Rat& x, const Rat& ylo, const Rat& yhi) {
            if (x < A.x0 || x > A.x1) return Rat(0);
            Rat lo = std::max(ylo, A.y0), hi = std::min(yhi, A.y1);
            return hi > lo ? Rat(hi - lo) : Rat(0);
        };
        auto seg_h = [&](const Rat& y, const Rat& xa, const Rat& xb) {
            if (y < A.y0 || y > A.y1) return Rat(0);
            Rat lo = std::max(std::min(xa, xb), A.x0), hi = std::min(std::max(xa, xb), A.x1);
            return hi > lo ? Rat(hi - lo) : Rat(0);
        };
        if (kind == ConnKind::Straight) {
            return seg_v(E.coord_at(t), Rat(0), H);
        }
        if (kind == ConnKind::Turn) {
            Rat v = E.coord_at(t);
            Rat xt = F.coord_at(t * ratio, l1_right);
            Rat x_start = l1_right ? W : Rat(0);
            return seg_h(v, x_start, xt) + seg_v(xt, Rat(0), v);
        }
        Rat u = E.coord_at(t);
        Rat xt = F.coord_at(t * ratio);
        Rat yu = u - x10;
        return seg_v(u, yu, H) + seg_h(yu, u, xt) + seg_v(xt, Rat(0), yu);
    }

    Rat integrate(const RRect& A, const Rat& t0, const Rat& t1, int depth) const {
        // Initial subdivision at pattern boundaries keeps the integrand
        // continuous piecewise-linear inside each piece.
        if (depth == 28) {
            std::vector<Rat> cuts{t0, t1};
            Rat cum(0);
            for (const auto& [a, b] : E.intervals) {
                cuts.push_back(cum);
                cum += b - a;
                cuts.push_back(cum);
            }
            cum = 0;
            for (const auto& [a, b] : F.intervals) {
                cuts.push_back(cum / ratio);
                cum += b - a;
                cuts.push_back(cum / ratio);
            }
            std::sort(cuts.begin(), cuts.end());
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
            Rat total(0);
            for (size_t i = 1; i < cuts.size(); ++i) {
                if (cuts[i - 1] < t0 || cuts[i] > t1 || cuts[i - 1] >= cuts[i]) continue;
                total += integrate(A, cuts[i - 1], cuts[i], depth - 1);
            }
            return total;
        }
        Rat g0 = clipped_at(A, t0), g1 = clipped_at(A, t1);
        Rat tm = (t0 + t1) / 2;
        Rat gm = clipped_at(A, tm);
        if (depth == 0 || 2 * gm == g0 + g1) return (g0 + g1) / 2 * (t1 - t0);
        return integrate(A, t0, tm, depth - 1) + integrate(A, tm, t1, depth - 1);
    }
};

void require(bool cond, const std::string& bullet) {
    if (!cond) throw std::invalid_argument("connection hypothesis violated: " + bullet);
}

}  // namespace

std::shared_ptr<CurveFamily> build_connection(const ScaleSequence& seq, int M, ConnKind kind,
                                              const DirectedBlock& c1, const DirectedBlock& c2,
                                              const ConnectionOptions& opts) {
    seq.require_level(M);
    if (opts.enforce_scale_bound) {
        for (int j = 1; j <= M; ++j) {
            if (seq.n(j) < 20)
                throw std::invalid_argument("connection: a_" + std::to_string(j) +
                                            " exceeds 1/20 (pass enforce_scale_bound=false)");
        }
    }
    validate_block(seq, c1);
    validate_block(seq, c2);
    int m = c2.level;  // C1 may live at a finer level (a slab feeding the next round)
    const Rat& s = seq.side(m);

    // Follows relation: C1 and C2 intersect exactly in L1, and L1 is not
    // inside L2.
    LatticeEdge L1 = c1.leading_edge(seq), L2 = c2.leading_edge(seq);
    RRect r1 = c1.rect(seq), r2 = c2.rect(seq);
    auto inter = rect_intersection(r1, r2);
    require(inter.has_value(), "follows: blocks do not touch");
    RRect ix = *inter;
    bool is_l1 = false;
    if (L1.seg.vertical) {
        is_l1 = ix.x0 == ix.x1 && ix.x0 == L1.seg.fixed && ix.y0 == L1.seg.lo && ix.y1 == L1.seg.hi;
    } else {
        is_l1 = ix.y0 == ix.y1 && ix.y0 == L1.seg.fixed && ix.x0 == L1.seg.lo && ix.x1 == L1.seg.hi;
    }
    require(is_l1, "follows: C1 and C2 do not meet exactly in L1");
    require(!(L1.seg.vertical == L2.seg.vertical && L1.seg.fixed == L2.seg.fixed &&
              L1.seg.lo >= L2.seg.lo && L1.seg.hi <= L2.seg.hi),
            "follows: L1 lies inside L2");

    auto fam = std::make_shared<ConnectionFamily>();
    fam->kind = kind;
    fam->frame = frame_for(seq, c2);
    RRect local = fam->frame.to_local(r2);
    fam->W = local.x1;
    fam->H = local.y1;
    Rat l1len = L1.seg.length(), l2len = L2.seg.length();

    RPoint a = fam->frame.to_local(L1.seg.point_at(L1.seg.lo));
    RPoint b = fam->frame.to_local(L1.seg.point_at(L1.seg.hi));
    bool l1_horizontal_local = a.y == b.y;

    int l1_level = m;  // edge level used for the pattern of L1
    int l2_level = m;

    switch (kind) {
        case ConnKind::Expand:
        case ConnKind::Straight: {
            require(c1.leading == c2.leading, "coherent: leading edges point the same way");
            require(l1_horizontal_local && a.y == fam->H, "follows: L1 must lie on the far edge");
            if (kind == ConnKind::Expand) {
                require(fam->H == l1len, "sides of C2 perpendicular to L2 have length |L1|");
                require(l2len >= l1len && l2len <= 10 * l1len, "H1(L2)/H1(L1) in [1, 10]");
            } else {
                require(l1len == l2len, "L1 and L2 are of equal length");
                require(2 * fam->H >= l1len && fam->H <= 10 * l1len,
                        "perpendicular sides of C2 within [|L1|/2, 10 |L1|]");
                require(l1len == fam->W, "straight: L1 spans the full far edge");
            }
            fam->x10 = std::min(a.x, b.x);
            break;
        }
        case ConnKind::ExpandParent: {
            require(c1.leading == c2.leading, "coherent: leading edges point the same way");
            require(l1_horizontal_local && a.y == fam->H, "follows: L1 must lie on the far edge");
            int n = seq.n(m);
            require(c2.width() == n || c2.height() == n, "L2 is a full edge of the parent square");
            require(fam->W == seq.side(m - 1), "L2 is a full edge of the parent square");
            require(fam->H == l1len, "length of L1 equals the perpendicular edge of C2");
            require(l2len <= 10 * l1len, "H1(L2)/H1(L1) <= 10");
            fam->x10 = std::min(a.x, b.x);
            require(fam->x10 == 0 || std::max(a.x, b.x) == fam->W,
                    "L1 intersects an edge of T' perpendicular to L'");
            l2_level = m - 1;
            break;
        }
        case ConnKind::Turn: {
            require(L1.seg.vertical != L2.seg.vertical, "L1 and L2 are perpendicular");
            require(fam->W == fam->H && fam->W == l1len, "all edges of C2 have length |L1|");
            require(!l1_horizontal_local, "follows: L1 must be a side edge of C2");
            fam->l1_right = (a.x == fam->W);
            require(a.x == 0 || fam->l1_right, "follows: L1 must be a side edge of C2");
            break;
        }
    }

    // Patterns are position-independent: compute them on local edges.
    if (kind == ConnKind::Turn) {
        fam->E = pi_set(seq, LatticeEdge{l1_level, {false, Rat(0), Rat(0), l1len}}, M);
    } else {
        fam->E = pi_set(seq, LatticeEdge{l1_level, {false, Rat(0), fam->x10, fam->x10 + l1len}}, M);
    }
    fam->F = pi_set(seq, LatticeEdge{l2_level, {false, Rat(0), Rat(0), fam->W}}, M);
    require(fam->F.length >= fam->E.length, "pattern of L2 at least as long as pattern of L1");
    fam->ratio = fam->F.length / fam->E.length;
    return fam;
}

double connection_constant(const CurveFamily& fam, const ScaleSequence&, int) {
    return fam.density_sup() * to_double(fam.param_length());
}

// -------------------------------------------------------------------- fan

namespace {

class FanFamily final : public CurveFamily {
  public:
    RPoint apex;
    PiSet E;
    bool rev_param = false;

    Rat param_length() const override { return E.length; }

    Polyline curve_at(const Rat& t) const override {
        return Polyline{{apex, E.point_at(t)}};
    }

    double density_at(const RPoint& p) const override {
        // w = (1/|E|) |z-apex|^2 / (|p-apex| h), z the ray exit on the edge
        // line, h the apex-to-line distance; zero off the fan.
        const RSegment& seg = E.edge.seg;
        Rat h = seg.vertical ? Rat(seg.fixed - apex.x) : Rat(seg.fixed - apex.y);
        Rat d = seg.vertical ? Rat(p.x - apex.x) : Rat(p.y - apex.y);
        if (h == 0 || d == 0) return 0.0;
        Rat tpar = h / d;  // z = apex + tpar (p - apex)
        if (tpar < 1) return 0.0;
        Rat zc = seg.vertical ? apex.y + tpar * (p.y - apex.y) : apex.x + tpar * (p.x - apex.x);
        if (!in_pattern(E, zc)) return 0.0;
        double dza = std::sqrt(to_double(sqr(Rat(tpar * (p.x - apex.x))) +
                                         sqr(Rat(tpar * (p.y - apex.y)))));
        double dpa = std::sqrt(to_double(dist2(p, apex)));
        if (dpa == 0.0) return 0.0;
        return dza * dza / (dpa * std::abs(to_double(h)) * to_double(E.length));
    }

    double density_sup() const override { return std::numeric_limits<double>::infinity(); }

    double nu_rect(const RRect& A) const override {
        // Adaptive Simpson over the pattern parameter.
        auto clip_len = [&](const Rat& t) {
            RPoint z = E.point_at(t);
            auto iv = segment_rect_interval(apex, z, A);
            if (!iv) return 0.0;
            double len = std::sqrt(to_double(dist2(apex, z)));
            return len * to_double(Rat(iv->second - iv->first));
        };
        double total = 0.0;
        Rat cum(0);
        for (const auto& [a, b] : E.intervals) {
            Rat w = b - a;
            total += simpson(clip_len, to_double(cum), to_double(cum + w), 14);
            cum += w;
        }
        return total / to_double(E.length);
    }

  private:
    static std::optional<std::pair<Rat, Rat>> segment_rect_interval(const RPoint& a,
                                                                    const RPoint& b,
                                                                    const RRect& r) {
        Rat t0(0), t1(1);
        auto clip = [&](const Rat& pa, const Rat& pb, const Rat& lo, const Rat& hi) {
            Rat d = pb - pa;
            if (d == 0) return pa >= lo && pa <= hi;
            Rat ta = (lo - pa) / d, tb = (hi - pa) / d;
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            return true;
        };
        if (!clip(a.x, b.x, r.x0, r.x1)) return std::nullopt;
        if (!clip(a.y, b.y, r.y0, r.y1)) return std::nullopt;
        if (t0 >= t1) return std::nullopt;
        return std::make_pair(t0, t1);
    }

    template <class Fn>
    static double simpson(const Fn& f, double a, double b, int depth) {
        double m = 0.5 * (a + b);
        double fa = f(rat_from_double(a)), fb = f(rat_from_double(b)), fm = f(rat_from_double(m));
        return simpson_rec(f, a, b, fa, fm, fb, (fa + 4 * fm + fb) * (b - a) / 6.0, depth);
    }
    template <class Fn>
    static double simpson_rec(const Fn& f, double a, double b, double fa, double fm, double fb,
                              double whole, int depth) {
        double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        double flm = f(rat_from_double(lm)), frm = f(rat_from_double(rm));
        double left = (fa + 4 * flm + fm) * (m - a) / 6.0;
        double right = (fm + 4 * frm + fb) * (b - m) / 6.0;
        if (depth <= 0 || std::abs(left + right - whole) < 1e-10)
            return left + right + (left + right - whole) / 15.0;
        return simpson_rec(f, a, m, fa, flm, fm, left, depth - 1) +
               simpson_rec(f, m, b, fm, frm, fb, right, depth - 1);
    }
};

}  // namespace

std::shared_ptr<CurveFamily> build_fan(const ScaleSequence& seq, int M, const RPoint& apex,
                                       const LatticeEdge& target) {
    auto fan = std::make_shared<FanFamily>();
    fan->apex = apex;
    fan->E = pi_set(seq, target, M);
    if (fan->E.length == 0) throw std::invalid_argument("fan: empty target pattern");
    return fan;
}

// ------------------------------------------------------------- near field

namespace {
class NearFieldFamily final : public CurveFamily {
  public:
    RPoint x, y;
    RPoint e0, e1;  // transversal segment (perpendicular bisector piece)
    Rat elen2;

    Rat param_length() const override { return Rat(1); }

    Polyline curve_at(const Rat& t) const override {
        RPoint p{e0.x + t * (e1.x - e0.x), e0.y + t * (e1.y - e0.y)};
        return Polyline{{x, p, y}};
    }

    double density_at(const RPoint& p) const override {
        // Two fans glued along the bisector: w = |z-apex|^2 / (|E| |p-apex| h)
        // with z the ray exit on the bisector line and h = |x-y|/2.
        const RPoint& apex = dist2(p, x) <= dist2(p, y) ? x : y;
        const RPoint& other = dist2(p, x) <= dist2(p, y) ? y : x;
        Rat ax = other.x - apex.x, ay = other.y - apex.y;  // toward the bisector
        Rat denom = (p.x - apex.x) * ax + (p.y - apex.y) * ay;
        if (denom <= 0) return 0.0;
        Rat num = (ax * ax + ay * ay) / 2;  // (mid - apex) . (other - apex)
        Rat tpar = num / denom;
        if (tpar < 1) return 0.0;
        RPoint z{apex.x + tpar * (p.x - apex.x), apex.y + tpar * (p.y - apex.y)};
        if (dist2(z, RPoint{(x.x + y.x) / 2, (x.y + y.y) / 2}) > elen2 / 4) return 0.0;
        double dza2 = to_double(dist2(z, apex));
        double dpa = std::sqrt(to_double(dist2(p, apex)));
        double h = 0.5 * std::sqrt(to_double(dist2(x, y)));
        double elen = std::sqrt(to_double(elen2));
        if (dpa == 0 || h == 0) return 0.0;
        return dza2 / (dpa * h * elen);
    }

    double density_sup() const override { return std::numeric_limits<double>::infinity(); }

    double nu_rect(const RRect& A) const override {
        int n = 512;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            Rat t(2 * i + 1, 2 * n);
            Polyline pl = curve_at(t);
            double len = 0.0;
            for (size_t k = 1; k < pl.pts.size(); ++k) {
                // midpoint-rule clip: sample 64 points per segment
                for (int j = 0; j < 64; ++j) {
                    Rat u(2 * j + 1, 128);
                    RPoint q{pl.pts[k - 1].x + u * (pl.pts[k].x - pl.pts[k - 1].x),
                             pl.pts[k - 1].y + u * (pl.pts[k].y - pl.pts[k - 1].y)};
                    if (A.contains(q))
                        len += std::sqrt(to_double(dist2(pl.pts[k - 1], pl.pts[k]))) / 64.0;
                }
            }
            acc += len / n;
        }
        return acc;
    }
};
}  // namespace

std::shared_ptr<CurveFamily> near_field_family(const RPoint& x, const RPoint& y) {
    if (x == y) throw std::invalid_argument("near_field_family: x == y");
    auto fam = std::make_shared<NearFieldFamily>();
    fam->x = x;
    fam->y = y;
    RPoint mid{(x.x + y.x) / 2, (x.y + y.y) / 2};
    Rat nx = -(y.y - x.y), ny = y.x - x.x;  // perpendicular, length |x-y|
    fam->e0 = RPoint{mid.x - nx / 4, mid.y - ny / 4};
    fam->e1 = RPoint{mid.x + nx / 4, mid.y + ny / 4};
    fam->elen2 = dist2(fam->e0, fam->e1);
    return fam;
}

}  // namespace carpetlab::curvefam
