#include "carpetlab/geometry.hpp"

namespace carpetlab {

namespace {
// Sign of the cross product (b-a) x (c-a).
int orient(const RPoint& a, const RPoint& b, const RPoint& c) {
    Rat v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if (v > 0) return 1;
    if (v < 0) return -1;
    return 0;
}

bool on_segment(const RPoint& a, const RPoint& b, const RPoint& p) {
    if (orient(a, b, p) != 0) return false;
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}
}  // namespace

bool segments_intersect(const RPoint& a, const RPoint& b, const RPoint& c, const RPoint& d) {
    int o1 = orient(a, b, c), o2 = orient(a, b, d);
    int o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

Rat RPoly::area() const {
    if (pts.size() < 3) return Rat(0);
    Rat twice(0);
    for (size_t i = 0; i < pts.size(); ++i) {
        const RPoint& p = pts[i];
        const RPoint& q = pts[(i + 1) % pts.size()];
        twice += p.x * q.y - q.x * p.y;
    }
    return twice / 2;
}

RPoly poly_from_rect(const RRect& r) {
    return RPoly{{{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}}};
}

RPoly poly_from_triangle(const RPoint& a, const RPoint& b, const RPoint& c) {
    RPoly p{{a, b, c}};
    if (p.area() < 0) std::swap(p.pts[1], p.pts[2]);
    return p;
}

RPoly clip_halfplane(const RPoly& p, const Rat& a, const Rat& b, const Rat& c) {
    RPoly out;
    size_t n = p.pts.size();
    if (n == 0) return out;
    auto val = [&](const RPoint& q) { return a * q.x + b * q.y - c; };
    for (size_t i = 0; i < n; ++i) {
        const RPoint& cur = p.pts[i];
        const RPoint& nxt = p.pts[(i + 1) % n];
        Rat vc = val(cur), vn = val(nxt);
        if (vc <= 0) out.pts.push_back(cur);
        if ((vc < 0 && vn > 0) || (vc > 0 && vn < 0)) {
            Rat t = vc / (vc - vn);
            out.pts.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
        }
    }
    // Drop consecutive duplicates introduced by clipping through vertices.
    RPoly clean;
    for (const auto& q : out.pts) {
        if (clean.pts.empty() || !(clean.pts.back() == q)) clean.pts.push_back(q);
    }
    while (clean.pts.size() > 1 && clean.pts.front() == clean.pts.back()) clean.pts.pop_back();
    return clean;
}

RPoly poly_affine(const RPoly& p, const Rat& m00, const Rat& m01, const Rat& m10,
                  const Rat& m11, const Rat& tx, const Rat& ty) {
    RPoly out;
    out.pts.reserve(p.pts.size());
    for (const auto& q : p.pts) {
        out.pts.push_back({m00 * q.x + m01 * q.y + tx, m10 * q.x + m11 * q.y + ty});
    }
    Rat det = m00 * m11 - m01 * m10;
    if (det < 0) std::reverse(out.pts.begin(), out.pts.end());
    return out;
}

RPoly poly_clip_to_poly(const RPoly& p, const RPoly& clip) {
    RPoly out = p;
    size_t n = clip.pts.size();
    for (size_t i = 0; i < n && !out.empty(); ++i) {
        const RPoint& a = clip.pts[i];
        const RPoint& b = clip.pts[(i + 1) % n];
        // Interior of a CCW polygon is left of a->b: cross(b-a, p-a) >= 0,
        // i.e. (by-ay) x - (bx-ax) y <= (by-ay) ax - (bx-ax) ay.
        Rat ca = b.y - a.y, cb = -(b.x - a.x);
        Rat cc = ca * a.x + cb * a.y;
        out = clip_halfplane(out, ca, cb, cc);
    }
    return out;
}

namespace {
struct Range {
    Rat lo, hi;
};
Range project_poly(const RPoly& p, const Rat& ax, const Rat& ay) {
    Range r{ax * p.pts[0].x + ay * p.pts[0].y, ax * p.pts[0].x + ay * p.pts[0].y};
    for (const auto& q : p.pts) {
        Rat v = ax * q.x + ay * q.y;
        r.lo = std::min(r.lo, v);
        r.hi = std::max(r.hi, v);
    }
    return r;
}
Range project_box(const RRect& b, const Rat& ax, const Rat& ay) {
    RPoly p = poly_from_rect(b);
    return project_poly(p, ax, ay);
}
}  // namespace

bool poly_box_disjoint(const RPoly& p, const RRect& box) {
    if (p.empty()) return true;
    // Box axes.
    for (int axis = 0; axis < 2; ++axis) {
        Rat ax = axis == 0 ? Rat(1) : Rat(0), ay = axis == 0 ? Rat(0) : Rat(1);
        Range rp = project_poly(p, ax, ay), rb = project_box(box, ax, ay);
        if (rp.hi <= rb.lo || rb.hi <= rp.lo) return true;
    }
    // Polygon edge normals.
    size_t n = p.pts.size();
    for (size_t i = 0; i < n; ++i) {
        const RPoint& a = p.pts[i];
        const RPoint& b = p.pts[(i + 1) % n];
        Rat ax = -(b.y - a.y), ay = b.x - a.x;
        if (ax == 0 && ay == 0) continue;
        Range rp = project_poly(p, ax, ay), rb = project_box(box, ax, ay);
        if (rp.hi <= rb.lo || rb.hi <= rp.lo) return true;
    }
    return false;
}

bool box_inside_poly(const RRect& box, const RPoly& p) {
    if (p.empty()) return false;
    size_t n = p.pts.size();
    RPoint corners[4] = {{box.x0, box.y0}, {box.x1, box.y0}, {box.x1, box.y1}, {box.x0, box.y1}};
    for (size_t i = 0; i < n; ++i) {
        const RPoint& a = p.pts[i];
        const RPoint& b = p.pts[(i + 1) % n];
        Rat ca = b.y - a.y, cb = -(b.x - a.x);
        Rat cc = ca * a.x + cb * a.y;
        for (const auto& q : corners) {
            if (ca * q.x + cb * q.y > cc) return false;
        }
    }
    return true;
}

std::optional<std::pair<Rat, Rat>> segment_poly_interval(const RPoint& a, const RPoint& b,
                                                         const RPoly& p) {
    if (p.empty()) return std::nullopt;
    Rat t0(0), t1(1);
    size_t n = p.pts.size();
    for (size_t i = 0; i < n; ++i) {
        const RPoint& u = p.pts[i];
        const RPoint& v = p.pts[(i + 1) % n];
        Rat ca = v.y - u.y, cb = -(v.x - u.x);
        Rat cc = ca * u.x + cb * u.y;
        Rat fa = ca * a.x + cb * a.y - cc;
        Rat fb = ca * b.x + cb * b.y - cc;
        Rat d = fb - fa;  // f(t) = fa + t d, keep f <= 0
        if (d == 0) {
            if (fa > 0) return std::nullopt;
            continue;
        }
        Rat tc = -fa / d;
        if (d > 0) t1 = std::min(t1, tc);
        else t0 = std::max(t0, tc);
        if (t0 >= t1) return std::nullopt;
    }
    return std::make_pair(t0, t1);
}

}  // namespace carpetlab
