#pragma once

#include "carpetlab/rational.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace carpetlab {

struct RPoint {
    Rat x, y;
    bool operator==(const RPoint& o) const { return x == o.x && y == o.y; }
};

inline Rat dist2(const RPoint& a, const RPoint& b) {
    return sqr(a.x - b.x) + sqr(a.y - b.y);
}

// Closed axis-aligned rectangle [x0,x1] x [y0,y1].
struct RRect {
    Rat x0, y0, x1, y1;

    Rat width() const { return x1 - x0; }
    Rat height() const { return y1 - y0; }
    Rat area() const { return width() * height(); }
    bool contains(const RPoint& p) const {
        return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
    }
    bool contains_rect(const RRect& r) const {
        return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1;
    }
    // Positive-area overlap.
    bool overlaps_interior(const RRect& r) const {
        return std::max(x0, r.x0) < std::min(x1, r.x1) &&
               std::max(y0, r.y0) < std::min(y1, r.y1);
    }
    bool operator==(const RRect& o) const {
        return x0 == o.x0 && y0 == o.y0 && x1 == o.x1 && y1 == o.y1;
    }
};

inline std::optional<RRect> rect_intersection(const RRect& a, const RRect& b) {
    RRect r{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
            std::min(a.y1, b.y1)};
    if (r.x0 > r.x1 || r.y0 > r.y1) return std::nullopt;
    return r;
}

// Axis-parallel segment: an edge of a lattice rectangle.
struct RSegment {
    bool vertical;  // false: y = fixed, x in [lo,hi]; true: x = fixed, y in [lo,hi]
    Rat fixed;
    Rat lo, hi;

    Rat length() const { return hi - lo; }
    RPoint point_at(const Rat& t) const {  // t in [lo,hi]
        return vertical ? RPoint{fixed, t} : RPoint{t, fixed};
    }
    bool operator==(const RSegment& o) const {
        return vertical == o.vertical && fixed == o.fixed && lo == o.lo && hi == o.hi;
    }
};

// Exact squared distance from a point to a closed rectangle.
inline Rat rect_point_dist2(const RRect& r, const RPoint& p) {
    Rat dx(0), dy(0);
    if (p.x < r.x0) dx = r.x0 - p.x;
    else if (p.x > r.x1) dx = p.x - r.x1;
    if (p.y < r.y0) dy = r.y0 - p.y;
    else if (p.y > r.y1) dy = p.y - r.y1;
    return dx * dx + dy * dy;
}

// Max squared distance from p to rect corners.
inline Rat rect_point_maxdist2(const RRect& r, const RPoint& p) {
    Rat dx = std::max(p.x - r.x0, r.x1 - p.x);
    Rat dy = std::max(p.y - r.y0, r.y1 - p.y);
    return dx * dx + dy * dy;
}

// Exact closed-segment intersection test (general position not assumed).
bool segments_intersect(const RPoint& a, const RPoint& b, const RPoint& c, const RPoint& d);

// Convex polygon, CCW vertex list, rational coordinates. Degenerate (empty /
// zero area) polygons are allowed and have area 0.
struct RPoly {
    std::vector<RPoint> pts;
    bool empty() const { return pts.size() < 3; }
    Rat area() const;
};

RPoly poly_from_rect(const RRect& r);
RPoly poly_from_triangle(const RPoint& a, const RPoint& b, const RPoint& c);

// Keep the part with a*x + b*y <= c.
RPoly clip_halfplane(const RPoly& p, const Rat& a, const Rat& b, const Rat& c);

// Affine image under orientation-reversing reflection (or any affine map)
// given by x' = m00 x + m01 y + tx, y' = m10 x + m11 y + ty. Vertex order is
// reversed when the map flips orientation so the result stays CCW.
RPoly poly_affine(const RPoly& p, const Rat& m00, const Rat& m01, const Rat& m10,
                  const Rat& m11, const Rat& tx, const Rat& ty);

RPoly poly_clip_to_poly(const RPoly& p, const RPoly& clip);

// Exact separating-axis tests between a convex polygon and a box.
bool poly_box_disjoint(const RPoly& p, const RRect& box);
bool box_inside_poly(const RRect& box, const RPoly& p);

// Parameter interval [t0,t1] of {a + t(b-a), t in [0,1]} inside the polygon,
// if the polygon is crossed; convexity makes it a single interval.
std::optional<std::pair<Rat, Rat>> segment_poly_interval(const RPoint& a, const RPoint& b,
                                                         const RPoly& p);

}  // namespace carpetlab
