#include "carpetlab/cutset.hpp"

#include <algorithm>
#include <cmath>

namespace carpetlab::cutset {

int l_of(const Rat& a) {
    if (numerator(a) != 1) throw std::invalid_argument("l_of: a must be 1/n");
    Int n = denominator(a);
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("l_of: a must be 1/odd, odd >= 3");
    int l = (n / 3).convert_to<int>();
    if (Rat(l) * a > Rat(1, 3) || Rat(l + 1) * a <= Rat(1, 3))
        throw std::logic_error("l_of: maximality failed");
    if (Rat(l) * a <= Rat(2, 15)) throw std::logic_error("l_of: l*a <= 2/15");
    return l;
}

namespace {
// Reflection across the slope +1 line through (px, py).
FoldTriangle refl_pos(const RPoly& tri, const RPoly& mirror, const Rat& px, const Rat& py) {
    return FoldTriangle{tri, mirror, Rat(0), Rat(1), Rat(1), Rat(0), px - py, py - px};
}
// Reflection across the slope -1 line x + y = c.
FoldTriangle refl_neg(const RPoly& tri, const RPoly& mirror, const Rat& c) {
    return FoldTriangle{tri, mirror, Rat(0), Rat(-1), Rat(-1), Rat(0), c, c};
}

bool rect_overlaps_any(const RRect& r, const std::vector<FoldLevel>& levels) {
    for (const auto& lv : levels) {
        for (const auto& o : lv.rects) {
            if (r.overlaps_interior(o)) return true;
        }
    }
    return false;
}
}  // namespace

FoldData::FoldData(ScaleSequence seq, int n) : seq_(std::move(seq)), n_(n) {
    if (n < 0) throw std::invalid_argument("FoldData: negative depth");
    if (n > 0) seq_.require_level(n + 1);  // widths use a_{i+1}
    for (int i = 1; i <= n; ++i) {
        FoldLevel lv;
        lv.level = i;
        lv.l = l_of(seq_.a(i + 1));
        const Rat& si = seq_.side(i);
        Rat w = Rat(lv.l) * seq_.a(i + 1) * si;
        carpet::for_each_cell(seq_, i - 1, [&](const carpet::CellAddress& a) {
            auto g = carpet::global_of(seq_, a);
            int nn = seq_.n(i), c = seq_.center(i);
            RRect rs = carpet::cell_rect(seq_, carpet::GlobalCell{i, g.gx * nn + c, g.gy * nn + c});
            const Rat& X = rs.x0;
            const Rat& Y = rs.y0;
            // Left flank, then right; a flank whose rectangle would overlap
            // an earlier one is left untouched (the a = 1/3 exception).
            RRect dl{X - w, Y + w, X, Y + si - w};
            if (!rect_overlaps_any(dl, levels_) &&
                !std::any_of(lv.rects.begin(), lv.rects.end(),
                             [&](const RRect& o) { return dl.overlaps_interior(o); })) {
                lv.rects.push_back(dl);
                RPoly up = poly_from_triangle({X, Y + si}, {X, Y + si - w}, {X - w, Y + si - w});
                RPoly up_m = poly_from_triangle({X, Y + si}, {X - w, Y + si}, {X - w, Y + si - w});
                lv.triangles.push_back(refl_pos(up, up_m, X - w, Y + si - w));
                RPoly dn = poly_from_triangle({X, Y}, {X, Y + w}, {X - w, Y + w});
                RPoly dn_m = poly_from_triangle({X, Y}, {X - w, Y}, {X - w, Y + w});
                lv.triangles.push_back(refl_neg(dn, dn_m, X + Y));
            }
            RRect dr{X + si, Y + w, X + si + w, Y + si - w};
            if (!rect_overlaps_any(dr, levels_) &&
                !std::any_of(lv.rects.begin(), lv.rects.end(),
                             [&](const RRect& o) { return dr.overlaps_interior(o); })) {
                lv.rects.push_back(dr);
                const Rat Xr = X + si;
                RPoly up = poly_from_triangle({Xr, Y + si}, {Xr, Y + si - w}, {Xr + w, Y + si - w});
                RPoly up_m = poly_from_triangle({Xr, Y + si}, {Xr + w, Y + si}, {Xr + w, Y + si - w});
                lv.triangles.push_back(refl_neg(up, up_m, Xr + Y + si));
                RPoly dn = poly_from_triangle({Xr, Y}, {Xr, Y + w}, {Xr + w, Y + w});
                RPoly dn_m = poly_from_triangle({Xr, Y}, {Xr + w, Y}, {Xr + w, Y + w});
                lv.triangles.push_back(refl_pos(dn, dn_m, Xr, Y));
            }
        });
        levels_.push_back(std::move(lv));
    }
}

namespace {
bool point_in_poly(const RPoly& p, const RPoint& q) {
    size_t n = p.pts.size();
    if (n < 3) return false;
    for (size_t i = 0; i < n; ++i) {
        const RPoint& a = p.pts[i];
        const RPoint& b = p.pts[(i + 1) % n];
        Rat cross = (b.x - a.x) * (q.y - a.y) - (b.y - a.y) * (q.x - a.x);
        if (cross < 0) return false;
    }
    return true;
}
}  // namespace

RPoint FoldData::fold(const RPoint& p, int i) const {
    if (i < 1 || i > n_) throw std::out_of_range("fold: level out of range");
    // Reflect the whole flanking square (both triangle halves), which makes
    // the map an exact involution; the cut-set pullback in unfold_set uses
    // the one-sided preimage that matches the curve rerouting.
    for (const auto& t : levels_[i - 1].triangles) {
        if (point_in_poly(t.tri, p) || point_in_poly(t.mirror, p)) return t.reflect(p);
    }
    return p;
}

namespace {
// P minus the closed triangle: clip against each outside halfplane.
std::vector<RPoly> subtract_triangle(const RPoly& p, const RPoly& tri) {
    std::vector<RPoly> out;
    RPoly rest = p;
    for (size_t i = 0; i < tri.pts.size(); ++i) {
        const RPoint& a = tri.pts[i];
        const RPoint& b = tri.pts[(i + 1) % tri.pts.size()];
        // interior of the CCW triangle: (by-ay) x - (bx-ax) y <= c
        Rat ca = b.y - a.y, cb = -(b.x - a.x);
        Rat cc = ca * a.x + cb * a.y;
        RPoly outside = clip_halfplane(rest, -ca, -cb, -cc);
        if (!outside.empty() && outside.area() > 0) out.push_back(outside);
        rest = clip_halfplane(rest, ca, cb, cc);
        if (rest.empty()) break;
    }
    return out;
}

bool bbox_disjoint(const RPoly& a, const RPoly& b) {
    Rat ax0 = a.pts[0].x, ax1 = a.pts[0].x, ay0 = a.pts[0].y, ay1 = a.pts[0].y;
    for (const auto& p : a.pts) {
        ax0 = std::min(ax0, p.x);
        ax1 = std::max(ax1, p.x);
        ay0 = std::min(ay0, p.y);
        ay1 = std::max(ay1, p.y);
    }
    Rat bx0 = b.pts[0].x, bx1 = b.pts[0].x, by0 = b.pts[0].y, by1 = b.pts[0].y;
    for (const auto& p : b.pts) {
        bx0 = std::min(bx0, p.x);
        bx1 = std::max(bx1, p.x);
        by0 = std::min(by0, p.y);
        by1 = std::max(by1, p.y);
    }
    return ax1 <= bx0 || bx1 <= ax0 || ay1 <= by0 || by1 <= ay0;
}
}  // namespace

CutSetApprox FoldData::unfold_set() const {
    std::vector<RPoly> excluded;
    for (const auto& lv : levels_) {
        for (const auto& r : lv.rects) excluded.push_back(poly_from_rect(r));
        for (const auto& t : lv.triangles) excluded.push_back(t.tri);
    }
    for (int i = n_; i >= 1; --i) {
        const auto& tris = levels_[i - 1].triangles;
        std::vector<RPoly> next;
        for (const auto& poly : excluded) {
            std::vector<RPoly> pieces{poly};
            for (const auto& t : tris) {
                if (bbox_disjoint(poly, t.tri) && bbox_disjoint(poly, t.mirror)) continue;
                std::vector<RPoly> kept;
                for (const auto& piece : pieces) {
                    // Part outside the folded triangle survives unchanged.
                    auto outside = subtract_triangle(piece, t.tri);
                    kept.insert(kept.end(), outside.begin(), outside.end());
                }
                pieces = std::move(kept);
            }
            for (const auto& piece : pieces) next.push_back(piece);
            for (const auto& t : tris) {
                if (bbox_disjoint(poly, t.mirror)) continue;
                RPoly inter = poly_clip_to_poly(poly, t.mirror);
                if (!inter.empty() && inter.area() > 0) {
                    next.push_back(
                        poly_affine(inter, t.m00, t.m01, t.m10, t.m11, t.tx, t.ty));
                }
            }
        }
        excluded = std::move(next);
    }
    CutSetApprox out;
    out.n = n_;
    out.excluded = std::move(excluded);
    return out;
}

Rat FoldData::measure_bound() const {
    Rat r(1);
    for (int i = 1; i <= n_; ++i) {
        std::int64_t n2 = std::int64_t(seq_.n(i)) * seq_.n(i);
        r *= Rat(1) - Rat(2, 45) / (n2 - 1);
    }
    return r;
}

std::pair<Rat, Rat> FoldData::measure_exact(int M, std::int64_t* partial_cells) const {
    seq_.require_level(M);
    if (M < n_ + 1) throw std::invalid_argument("measure_exact: M must be at least n+1");
    auto cut = unfold_set();
    Rat v = Rat(1) / seq_.cell_count(M);
    Rat lower(0), upper(0);
    std::int64_t partial = 0;
    carpet::for_each_cell(seq_, M, [&](const carpet::CellAddress& a) {
        RRect cell = carpet::cell_rect(seq_, a);
        bool touched = false, buried = false;
        for (const auto& poly : cut.excluded) {
            if (poly_box_disjoint(poly, cell)) continue;
            touched = true;
            if (box_inside_poly(cell, poly)) {
                buried = true;
                break;
            }
        }
        if (!touched) {
            lower += v;
            upper += v;
        } else if (!buried) {
            upper += v;
            ++partial;
        }
    });
    if (partial_cells) *partial_cells = partial;
    return {lower, upper};
}

double FoldData::crossing_length_in(const std::vector<RPoint>& polyline, int M) const {
    if (polyline.size() < 2) throw std::invalid_argument("crossing_length_in: degenerate curve");
    for (size_t i = 0; i < polyline.size(); ++i) {
        if (!carpet::contains(seq_, polyline[i], M))
            throw std::invalid_argument("crossing_length_in: curve leaves the precarpet");
        if (i > 0) {
            RPoint mid{(polyline[i - 1].x + polyline[i].x) / 2,
                       (polyline[i - 1].y + polyline[i].y) / 2};
            if (!carpet::contains(seq_, mid, M))
                throw std::invalid_argument("crossing_length_in: curve leaves the precarpet");
        }
    }
    auto cut = unfold_set();
    double total = 0.0;
    for (size_t i = 1; i < polyline.size(); ++i) {
        const RPoint& a = polyline[i - 1];
        const RPoint& b = polyline[i];
        double len = std::sqrt(to_double(dist2(a, b)));
        std::vector<std::pair<Rat, Rat>> cov;
        for (const auto& poly : cut.excluded) {
            auto iv = segment_poly_interval(a, b, poly);
            if (!iv) continue;
            // The deleted regions are open: a subsegment along the boundary
            // contributes nothing. Require the midpoint strictly inside.
            Rat tm = (iv->first + iv->second) / 2;
            RPoint mid{a.x + tm * (b.x - a.x), a.y + tm * (b.y - a.y)};
            bool strict = true;
            for (size_t k = 0; k < poly.pts.size(); ++k) {
                const RPoint& u = poly.pts[k];
                const RPoint& v = poly.pts[(k + 1) % poly.pts.size()];
                Rat cross = (v.x - u.x) * (mid.y - u.y) - (v.y - u.y) * (mid.x - u.x);
                if (cross <= 0) {
                    strict = false;
                    break;
                }
            }
            if (strict) cov.push_back(*iv);
        }
        std::sort(cov.begin(), cov.end());
        Rat covered(0), cur_lo(0), cur_hi(0);
        bool open_run = false;
        for (const auto& [lo, hi] : cov) {
            if (!open_run) {
                cur_lo = lo;
                cur_hi = hi;
                open_run = true;
            } else if (lo <= cur_hi) {
                cur_hi = std::max(cur_hi, hi);
            } else {
                covered += cur_hi - cur_lo;
                cur_lo = lo;
                cur_hi = hi;
            }
        }
        if (open_run) covered += cur_hi - cur_lo;
        total += len * (1.0 - to_double(covered));
    }
    return total;
}

}  // namespace carpetlab::cutset
