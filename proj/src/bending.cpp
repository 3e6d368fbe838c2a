#include "carpetlab/bending.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace carpetlab::bending {

// --------------------------------------------------------------- bump spline

BumpSpline::BumpSpline() {
    const Rat b(25, 2);
    // Breakpoints of phi'' (tenths).
    const int kn[] = {-10, -9, -7, -3, -1, 0, 1, 3, 7, 9, 10};
    for (int k : kn) knots_.push_back(Rat(k, 10));
    // phi'' is piecewise linear; integrate twice with phi(-1) = phi'(-1) = 0.
    auto dd = [&](int piece) -> std::pair<Rat, Rat> {  // phi'' = c0 + c1 x on piece
        switch (piece) {
            case 0: return {Rat(0), Rat(0)};                  // [-1,-0.9]
            case 1: return {5 * b * Rat(9, 10), 5 * b};       // [-0.9,-0.7]: 5b(x+9/10)
            case 2: return {-5 * b * Rat(1, 2), -5 * b};      // [-0.7,-0.3]: -5b(x+1/2)
            case 3: return {5 * b * Rat(1, 10), 5 * b};       // [-0.3,-0.1]: 5b(x+1/10)
            case 4: return {Rat(0), Rat(0)};                  // [-0.1,0]
            case 5: return {Rat(0), Rat(0)};                  // [0,0.1]
            case 6: return {5 * b * Rat(1, 10), -5 * b};      // [0.1,0.3]: -5b(x-1/10)
            case 7: return {-5 * b * Rat(1, 2), 5 * b};       // [0.3,0.7]: 5b(x-1/2)
            case 8: return {5 * b * Rat(9, 10), -5 * b};      // [0.7,0.9]: -5b(x-9/10)
            default: return {Rat(0), Rat(0)};                 // [0.9,1]
        }
    };
    Rat phi(0), dphi(0);
    Rat x_prev = knots_[0];
    for (size_t i = 0; i + 1 < knots_.size(); ++i) {
        auto [c0, c1] = dd((int)i);
        // phi'(x) = dphi + c0 (x - a) + c1 (x^2 - a^2)/2, a = knots_[i]
        // phi(x) = phi + dphi (x-a) + c0 (x-a)^2/2-ish; expand in monomials.
        const Rat a = knots_[i];
        // phi''(x) = c0 + c1 x
        // phi'(x) = A1 + c0 x + c1 x^2/2 with A1 fixed by continuity at a.
        Rat A1 = dphi - c0 * a - c1 * a * a / 2;
        // phi(x) = A0 + A1 x + c0 x^2/2 + c1 x^3/6 with A0 by continuity.
        Rat A0 = phi - A1 * a - c0 * a * a / 2 - c1 * a * a * a / 6;
        coef_.push_back({A0, A1, c0 / 2, c1 / 6});
        const Rat& nx = knots_[i + 1];
        dphi = A1 + c0 * nx + c1 * nx * nx / 2;
        phi = A0 + A1 * nx + c0 * nx * nx / 2 + c1 * nx * nx * nx / 6;
        x_prev = nx;
    }
    (void)x_prev;
    for (const Rat& k : knots_) dknots_.push_back(to_double(k));
    for (const auto& c : coef_) {
        dcoef_.push_back({to_double(c[0]), to_double(c[1]), to_double(c[2]), to_double(c[3])});
    }
}

PhiJet BumpSpline::eval(const Rat& x) const {
    if (x < Rat(-1) || x > Rat(1)) throw std::domain_error("bump spline: x outside [-1,1]");
    size_t i = 0;
    while (i + 2 < knots_.size() && x > knots_[i + 1]) ++i;
    const auto& c = coef_[i];
    Rat phi = c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x;
    Rat dphi = c[1] + 2 * c[2] * x + 3 * c[3] * x * x;
    Rat ddphi = 2 * c[2] + 6 * c[3] * x;
    return {phi, dphi, ddphi};
}

namespace {
int piece_index(const std::vector<double>& knots, double x) {
    int i = 0;
    while (i + 2 < (int)knots.size() && x > knots[i + 1]) ++i;
    return i;
}
}  // namespace

double BumpSpline::phi(double x) const {
    if (x <= -0.9 || x >= 0.9) return 0.0;
    const auto& c = dcoef_[piece_index(dknots_, x)];
    return c[0] + x * (c[1] + x * (c[2] + x * c[3]));
}
double BumpSpline::dphi(double x) const {
    if (x <= -0.9 || x >= 0.9) return 0.0;
    const auto& c = dcoef_[piece_index(dknots_, x)];
    return c[1] + x * (2 * c[2] + x * 3 * c[3]);
}
double BumpSpline::ddphi(double x) const {
    if (x <= -0.9 || x >= 0.9) return 0.0;
    const auto& c = dcoef_[piece_index(dknots_, x)];
    return 2 * c[2] + 6 * c[3] * x;
}

const BumpSpline& bump_spline() {
    static const BumpSpline spline;
    return spline;
}

// ----------------------------------------------------------- compression map

double CompressionMap::q_half() const { return std::pow(10.0, N) * sip1; }
RRect CompressionMap::q_box() const {
    Rat q = rat_from_double(q_half());
    Rat x = rat_from_double(zx), y = rat_from_double(zy);
    return RRect{x - q, y - q, x + q, y + q};
}
RRect CompressionMap::p_box() const {
    Rat p = rat_from_double(p_half());
    Rat x = rat_from_double(zx), y = rat_from_double(zy);
    return RRect{x - p, y - p, x + p, y + p};
}
RRect CompressionMap::r_box() const {
    Rat r = rat_from_double(si / 10.0);
    Rat x = rat_from_double(zx), y = rat_from_double(zy);
    return RRect{x - r, y - r, x + r, y + r};
}

// ----------------------------------------------------------------- family

GoodFamily GoodFamily::straight_strip(double x0, double x1, double u0, double u1) {
    GoodFamily f;
    f.wx0_ = x0;
    f.wx1_ = x1;
    f.u0_ = u0;
    f.u1_ = u1;
    return f;
}

int GoodFamily::branch_of(const CurveRef& c, const CurveRef& g0) const {
    if (c.u > g0.u || (c.u == g0.u && c.side > g0.side)) return 1;
    if (c.u < g0.u || (c.u == g0.u && c.side < g0.side)) return -1;
    return 0;
}

namespace {
struct GJets {
    double phit, dphit, ddphit;  // scaled bump phi-tilde at x
};

// phi-tilde(x) = 6 s1 phi((x - zx) / (10^N s1)).
GJets phi_tilde(const CompressionMap& m, double x) {
    double S = m.q_half();
    double t = (x - m.zx) / S;
    const BumpSpline& B = bump_spline();
    double p = B.phi(t), dp = B.dphi(t), ddp = B.ddphi(t);
    return {6.0 * m.sip1 * p, 6.0 * m.sip1 * dp / S, 6.0 * m.sip1 * ddp / S / S};
}

// Jet of g(x, y(x)) for a curve jet `in` relative to the gamma0 jet `g0`,
// branch +1 above / -1 below.
struct GVal {
    double g, dg, ddg;  // along-the-curve derivatives of g(x, y(x))
    double gy;          // plain partial for JH
};

GVal g_jet(const CompressionMap& m, double x, const Jet& in, const Jet& g0, int branch) {
    (void)x;
    double S = m.q_half();
    const BumpSpline& B = bump_spline();
    double A, dA, ddA, Bv, dB, ddB;
    if (branch > 0) {
        A = in.y - g0.y;
        dA = in.dy - g0.dy;
        ddA = in.ddy - g0.ddy;
        Bv = S - g0.y;
        dB = -g0.dy;
        ddB = -g0.ddy;
    } else {
        A = g0.y - in.y;
        dA = g0.dy - in.dy;
        ddA = g0.ddy - in.ddy;
        Bv = S + g0.y;
        dB = g0.dy;
        ddB = g0.ddy;
    }
    double t = A / Bv;
    if (t >= 1.0 || t <= -1.0) return {0, 0, 0, 0};
    double dt = (dA * Bv - A * dB) / (Bv * Bv);
    double ddt = (ddA * Bv - A * ddB) / (Bv * Bv) - 2.0 * dB * (dA * Bv - A * dB) / (Bv * Bv * Bv);
    double p = B.phi(t), dp = B.dphi(t), ddp = B.ddphi(t);
    double sgn = branch > 0 ? 1.0 : -1.0;
    double gy_t = branch > 0 ? 1.0 / Bv : -1.0 / Bv;  // dt/dy
    return {sgn * p, sgn * dp * dt, sgn * (ddp * dt * dt + dp * ddt), sgn * dp * gy_t};
}
}  // namespace

void GoodFamily::gamma0_stack(double x, std::vector<Jet>& out) const {
    // Jets of every map's gamma0 at x, each through the maps preceding it.
    int K = (int)maps_.size();
    out.assign(K, Jet{});
    std::vector<Jet> cur(K);
    for (int k = 0; k < K; ++k) cur[k] = Jet{maps_[k].gamma0.u, 0.0, 0.0};
    for (int k = 0; k < K; ++k) {
        // cur[j] (j > k) currently holds gamma0_j through maps < k; apply map k.
        out[k] = cur[k];
        const CompressionMap& m = maps_[k];
        GJets pt = phi_tilde(m, x);
        for (int j = k + 1; j < K; ++j) {
            int br = branch_of(maps_[j].gamma0, m.gamma0);
            if (br == 0) continue;
            GVal gv = g_jet(m, x, cur[j], out[k], br);
            Jet nj;
            nj.y = cur[j].y + pt.phit * gv.g;
            nj.dy = cur[j].dy + pt.dphit * gv.g + pt.phit * gv.dg;
            nj.ddy = cur[j].ddy + pt.ddphit * gv.g + 2.0 * pt.dphit * gv.dg + pt.phit * gv.ddg;
            cur[j] = nj;
        }
    }
}

Jet GoodFamily::curve_jet(const CurveRef& c, double x, int upto) const {
    int K = upto < 0 ? (int)maps_.size() : upto;
    std::vector<Jet> g0;
    gamma0_stack(x, g0);
    Jet jet{c.u, 0.0, 0.0};
    for (int k = 0; k < K; ++k) {
        const CompressionMap& m = maps_[k];
        int br = branch_of(c, m.gamma0);
        if (br == 0) return jet;  // the deleted curve itself
        GJets pt = phi_tilde(m, x);
        GVal gv = g_jet(m, x, jet, g0[k], br);
        Jet nj;
        nj.y = jet.y + pt.phit * gv.g;
        nj.dy = jet.dy + pt.dphit * gv.g + pt.phit * gv.dg;
        nj.ddy = jet.ddy + pt.ddphit * gv.g + 2.0 * pt.dphit * gv.dg + pt.phit * gv.ddg;
        jet = nj;
    }
    return jet;
}

Jet GoodFamily::gamma0_jet(int k, double x) const {
    std::vector<Jet> g0;
    gamma0_stack(x, g0);
    return g0[k];
}

double GoodFamily::forward_y(int k, double x, double y, int side) const {
    const CompressionMap& m = maps_[k];
    Jet g0 = gamma0_jet(k, x);
    int br = side != 0 ? side : (y > g0.y ? 1 : (y < g0.y ? -1 : 0));
    if (br == 0) return y;
    GJets pt = phi_tilde(m, x);
    GVal gv = g_jet(m, x, Jet{y, 0, 0}, g0, br);
    return y + pt.phit * gv.g;
}

double GoodFamily::jacobian(int k, double x, double y, int side) const {
    const CompressionMap& m = maps_[k];
    Jet g0 = gamma0_jet(k, x);
    int br = side != 0 ? side : (y >= g0.y ? 1 : -1);
    GJets pt = phi_tilde(m, x);
    GVal gv = g_jet(m, x, Jet{y, 0, 0}, g0, br);
    return 1.0 + pt.phit * gv.gy;
}

namespace {
std::optional<double> invert_map(const CompressionMap& m, const GJets& pt, const Jet& g0,
                                 double Y) {
    if (pt.phit == 0.0) return Y;
    double up_img = g0.y + pt.phit;   // image limit from above
    double dn_img = g0.y - pt.phit;   // image limit from below
    auto fwd = [&](double y, int br) {
        GVal gv = g_jet(m, 0.0, Jet{y, 0, 0}, g0, br);
        return y + pt.phit * gv.g;
    };
    if (Y >= up_img || Y <= dn_img) {
        int br = Y >= up_img ? 1 : -1;
        double lo, hi;
        if (br > 0) {
            lo = g0.y;
            hi = Y;
        } else {
            lo = Y;
            hi = g0.y;
        }
        for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            if (fwd(mid, br) < Y) lo = mid;  // h is increasing in y on both branches
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    }
    return std::nullopt;  // inside the opened gap
}
}  // namespace

std::optional<double> GoodFamily::inverse_y(int k, double x, double Y) const {
    Jet g0 = gamma0_jet(k, x);
    GJets pt = phi_tilde(maps_[k], x);
    return invert_map(maps_[k], pt, g0, Y);
}

std::optional<CurveRef> GoodFamily::param_at(double x, double y) const {
    if (x < wx0_ || x > wx1_) return std::nullopt;
    std::vector<Jet> g0;
    gamma0_stack(x, g0);
    double cur = y;
    for (int k = (int)maps_.size() - 1; k >= 0; --k) {
        auto prev = invert_map(maps_[k], phi_tilde(maps_[k], x), g0[k], cur);
        if (!prev) return std::nullopt;
        cur = *prev;
    }
    if (cur < u0_ || cur > u1_) return std::nullopt;
    return CurveRef{cur, 0};
}

double GoodFamily::weight_on_curve(const CurveRef& c, double x) const {
    std::vector<Jet> g0;
    gamma0_stack(x, g0);
    double w = 1.0 / (u1_ - u0_);
    Jet jet{c.u, 0.0, 0.0};
    for (size_t k = 0; k < maps_.size(); ++k) {
        const CompressionMap& m = maps_[k];
        int br = branch_of(c, m.gamma0);
        if (br == 0) return 0.0;
        GJets pt = phi_tilde(m, x);
        GVal gv = g_jet(m, x, jet, g0[k], br);
        double jh = 1.0 + pt.phit * gv.gy;
        Jet nj;
        nj.y = jet.y + pt.phit * gv.g;
        nj.dy = jet.dy + pt.dphit * gv.g + pt.phit * gv.dg;
        nj.ddy = jet.ddy + pt.ddphit * gv.g + 2.0 * pt.dphit * gv.dg + pt.phit * gv.ddg;
        double stretch = std::sqrt((1.0 + nj.dy * nj.dy) / (1.0 + jet.dy * jet.dy));
        w *= stretch / jh;
        jet = nj;
    }
    return w;
}

double GoodFamily::weight_at(double x, double y) const {
    auto c = param_at(x, y);
    if (!c) return 0.0;
    return weight_on_curve(*c, x);
}

double GoodFamily::slope_at(double x, double y) const {
    auto c = param_at(x, y);
    if (!c) return 0.0;
    return curve_jet(*c, x).dy;
}

std::vector<std::pair<double, double>> GoodFamily::gaps_at(double x) const {
    std::vector<std::pair<double, double>> gaps;
    for (const auto& d : deleted_) {
        double lo = curve_jet(CurveRef{d.u, -1}, x).y;
        double hi = curve_jet(CurveRef{d.u, +1}, x).y;
        if (hi > lo) gaps.emplace_back(lo, hi);
    }
    std::sort(gaps.begin(), gaps.end());
    return gaps;
}

std::pair<double, double> GoodFamily::support_at(double x) const {
    return {curve_jet(CurveRef{u0_, 0}, x).y, curve_jet(CurveRef{u1_, 0}, x).y};
}

GoodFamily GoodFamily::with_map(CompressionMap map) const {
    GoodFamily f = *this;
    if (map.deletes_curve) f.deleted_.push_back(map.gamma0);
    f.maps_.push_back(map);
    return f;
}

// ---------------------------------------------------------------- building

CompressionMap build_compression(const GoodFamily& fam, double zx, double zy, double si,
                                 double sip1, int N, bool certified,
                                 std::vector<std::string>* notes) {
    auto note = [&](const std::string& s) {
        if (notes) notes->push_back(s);
    };
    if (certified && sip1 / si > std::pow(10.0, -2 - N) * (1 + 1e-12))
        throw std::invalid_argument("build_compression: scale ratio too large for certified mode");
    if (zx - fam.x0() < si || fam.x1() - zx < si) {
        if (certified) throw std::invalid_argument("build_compression: curve endpoint in B(z,s_i)");
        note("curve endpoints inside B(z, s_i)");
    }
    if (fam.weight_at(zx, zy) <= 0.0) {
        // z must lie on the support; tolerate boundary contact.
        auto [lo, hi] = fam.support_at(zx);
        if (zy < lo - 1e-12 || zy > hi + 1e-12)
            throw std::invalid_argument("build_compression: z not in the family support");
    }

    CompressionMap m;
    m.zx = zx;
    m.zy = zy;
    m.si = si;
    m.sip1 = sip1;
    m.N = N;

    // Case 1: an existing gap meets L = {zx} x [zy - 3 s1, zy + 3 s1].
    double L0 = zy - 3.0 * sip1, L1 = zy + 3.0 * sip1;
    auto [slo, shi] = fam.support_at(zx);
    auto gaps = fam.gaps_at(zx);
    // Treat the outside of the strip as boundary gaps.
    if (slo > L0) {
        m.gamma0 = CurveRef{fam.u0(), 0};
        m.deletes_curve = false;
        return m;
    }
    if (shi < L1) {
        m.gamma0 = CurveRef{fam.u1(), 0};
        m.deletes_curve = false;
        return m;
    }
    for (const auto& [glo, ghi] : gaps) {
        if (ghi <= L0 || glo >= L1) continue;
        // Pick the bounding edge nearer z (z itself is not in the gap).
        // Recover the deleted parameter whose images bound this gap.
        for (const auto& mp : fam.maps()) {
            if (!mp.deletes_curve) continue;
            double lo = fam.curve_jet(CurveRef{mp.gamma0.u, -1}, zx).y;
            double hi = fam.curve_jet(CurveRef{mp.gamma0.u, +1}, zx).y;
            if (lo == glo && hi == ghi) {
                int side = ghi <= zy ? +1 : -1;
                m.gamma0 = CurveRef{mp.gamma0.u, side};
                m.deletes_curve = false;
                return m;
            }
        }
    }

    // Case 2: the curve through (zx, zy -+ 3 s1), whichever clears the gaps by
    // 5 s1.
    auto param_near = [&](double target) {
        double lo = fam.u0(), hi = fam.u1();
        for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            if (fam.curve_jet(CurveRef{mid, 0}, zx).y < target) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    auto clearance = [&](double u) {
        double best = 1e300;
        for (int s = -16; s <= 16; ++s) {
            double xs = zx + s * (si / 5.0) / 16.0;
            if (xs < fam.x0() || xs > fam.x1()) continue;
            double ys = fam.curve_jet(CurveRef{u, 0}, xs).y;
            auto [lo2, hi2] = fam.support_at(xs);
            best = std::min(best, std::abs(ys - lo2));
            best = std::min(best, std::abs(ys - hi2));
            for (const auto& [glo, ghi] : fam.gaps_at(xs)) {
                best = std::min(best, std::abs(ys - glo));
                best = std::min(best, std::abs(ys - ghi));
            }
        }
        return best;
    };
    double u_up = param_near(zy + 3.0 * sip1);
    double u_dn = param_near(zy - 3.0 * sip1);
    double c_up = clearance(u_up), c_dn = clearance(u_dn);
    double u_pick = c_up >= c_dn ? u_up : u_dn;
    double c_pick = std::max(c_up, c_dn);
    if (c_pick < 5.0 * sip1) {
        if (certified)
            throw std::invalid_argument("build_compression: no gamma0 candidate clears 5 s_{i+1}");
        note("gamma0 clearance below 5 s_{i+1}");
    }
    m.gamma0 = CurveRef{u_pick, 0};
    m.deletes_curve = true;
    return m;
}

GoodFamily push_family(const GoodFamily& fam, const CompressionMap& map, double q,
                       PushReport* report) {
    GoodFamily next = fam.with_map(map);
    if (!report) return next;
    report->q = q;
    report->violations.clear();

    // JH range over the pre-image box.
    double S = map.q_half();
    report->jh_min = 1e300;
    report->jh_max = -1e300;
    int K = (int)fam.maps().size();  // index of the new map in `next`
    for (int i = 0; i < 64; ++i) {
        for (int j = 0; j < 64; ++j) {
            double x = map.zx + S * (2.0 * i / 63.0 - 1.0);
            double y = map.zy + S * (2.0 * j / 63.0 - 1.0);
            Jet g0 = next.gamma0_jet(K, x);
            if (std::abs(y - g0.y) < 1e-9 * S) continue;
            double jh = next.jacobian(K, x, y, y > g0.y ? 1 : -1);
            report->jh_min = std::min(report->jh_min, jh);
            report->jh_max = std::max(report->jh_max, jh);
        }
    }
    double bound = 1.0 + std::pow(10.0, 3 - map.N);
    if (report->jh_max > bound || report->jh_min < 1.0 / bound)
        report->violations.push_back("JH outside the Sublemma 6.12 range");

    // Weight gain over R: two-level midpoint quadrature, finer inside Q.
    auto integrate = [&](const GoodFamily& f) {
        double r = map.si / 10.0;
        double total = 0.0;
        int n_coarse = 40;
        double cw = 2.0 * r / n_coarse;
        for (int i = 0; i < n_coarse; ++i) {
            for (int j = 0; j < n_coarse; ++j) {
                double cx = map.zx - r + (i + 0.5) * cw;
                double cy = map.zy - r + (j + 0.5) * cw;
                bool in_q = std::abs(cx - map.zx) < S + cw && std::abs(cy - map.zy) < S + cw;
                if (!in_q) {
                    double w = f.weight_at(cx, cy);
                    if (w > 0) total += std::pow(w, q) * cw * cw;
                } else {
                    int fine = 8;
                    double fw = cw / fine;
                    for (int a = 0; a < fine; ++a) {
                        for (int b = 0; b < fine; ++b) {
                            double fx = cx - cw / 2 + (a + 0.5) * fw;
                            double fy = cy - cw / 2 + (b + 0.5) * fw;
                            double w = f.weight_at(fx, fy);
                            if (w > 0) total += std::pow(w, q) * fw * fw;
                        }
                    }
                }
            }
        }
        return total;
    };
    double before = integrate(fam);
    double after = integrate(next);
    report->gain = before > 0 ? after / before : 1.0;

    // spt(Gamma_{i+1}) stays clear of B(z, 2 s_{i+1}).
    for (int i = 0; i < 32; ++i) {
        double ang = 2.0 * M_PI * i / 32.0;
        for (double rr : {0.0, map.sip1, 1.9 * map.sip1}) {
            double px = map.zx + rr * std::cos(ang), py = map.zy + rr * std::sin(ang);
            if (next.weight_at(px, py) > 0) {
                report->violations.push_back("support meets B(z, 2 s_{i+1})");
                i = 32;
                break;
            }
        }
    }
    return next;
}

// ---------------------------------------------------------------- good_check

FieldSample FamilyField::at(double x, double y) const {
    auto c = fam_->param_at(x, y);
    if (!c) return {};
    Jet j = fam_->curve_jet(*c, x);
    return {true, j.dy, fam_->weight_on_curve(*c, x)};
}

bool FamilyField::ball_clear_of_endpoints(double cx, double, double r) const {
    return cx - r > fam_->x0() && cx + r < fam_->x1();
}

namespace {
std::uint64_t splitmix(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
double unit(std::uint64_t& s) { return (splitmix(s) >> 11) * 0x1.0p-53; }
}  // namespace

GoodCheckReport good_check(const CurveField& field, const RRect& region, double delta0, double r0,
                           int ball_budget, std::uint64_t seed) {
    GoodCheckReport rep;
    std::uint64_t st = seed ^ 0xabcdef12345ULL;
    double rx0 = to_double(region.x0), rx1 = to_double(region.x1);
    double ry0 = to_double(region.y0), ry1 = to_double(region.y1);
    for (int b = 0; b < ball_budget; ++b) {
        double cx = rx0 + (rx1 - rx0) * unit(st);
        double cy = ry0 + (ry1 - ry0) * unit(st);
        double r = r0 * std::pow(2.0, -3.0 * unit(st));  // in [r0/8, r0]
        // Collect support samples inside the ball.
        struct Pt {
            double x, y, slope, w;
        };
        std::vector<Pt> pts;
        for (int i = 0; i < 40; ++i) {
            double ang = 2.0 * M_PI * unit(st);
            double rad = r * std::sqrt(unit(st));
            double px = cx + rad * std::cos(ang), py = cy + rad * std::sin(ang);
            auto s = field.at(px, py);
            if (s.in_support) pts.push_back({px, py, s.slope, s.weight});
        }
        if (pts.size() < 2) continue;
        // (B): pairwise angle Holder bound.
        for (size_t i = 0; i < pts.size(); ++i) {
            for (size_t j = i + 1; j < pts.size(); ++j) {
                double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
                double dist = std::hypot(dx, dy);
                if (dist <= 0) continue;
                double a1 = std::atan(pts[i].slope), a2 = std::atan(pts[j].slope);
                double ang = std::abs(a1 - a2);
                double allowed = delta0 * std::pow(dist / (2.0 * r0), 2.0 / 3.0);
                double ratio = allowed > 0 ? ang / allowed : (ang > 0 ? 1e300 : 0.0);
                if (ratio > rep.angle_margin) rep.angle_margin = ratio;
                if (ratio > 1.0) {
                    rep.pass = false;
                    if (rep.violations.size() < 16)
                        rep.violations.push_back("clause B at (" + std::to_string(pts[i].x) + "," +
                                                 std::to_string(pts[i].y) + ")");
                }
            }
        }
        // (C): pinched weight with per-ball A, and 2/3-Holder continuity.
        double wmin = 1e300, wmax = 0.0;
        for (const auto& p : pts) {
            wmin = std::min(wmin, p.w);
            wmax = std::max(wmax, p.w);
        }
        double A = std::sqrt(wmin * wmax);
        double range_ratio = (wmax / A) / (1.0 + delta0);
        double range_ratio2 = (A / wmin) / (1.0 + delta0);
        double pinch = std::max(range_ratio, range_ratio2);
        rep.pinch_margin = std::max(rep.pinch_margin, pinch);
        if (pinch > 1.0) {
            rep.pass = false;
            if (rep.violations.size() < 16) rep.violations.push_back("clause C pinching");
        }
        for (size_t i = 0; i < pts.size(); ++i) {
            for (size_t j = i + 1; j < pts.size(); ++j) {
                double dist = std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y);
                if (dist <= 0) continue;
                double allowed =
                    std::pow(2.0 * r0, -2.0 / 3.0) * A * delta0 * std::pow(dist, 2.0 / 3.0);
                double ratio = std::abs(pts[i].w - pts[j].w) / std::max(allowed, 1e-300);
                rep.holder_margin = std::max(rep.holder_margin, ratio);
                if (ratio > 1.0) {
                    rep.pass = false;
                    if (rep.violations.size() < 16) rep.violations.push_back("clause C Holder");
                }
            }
        }
        // (A): raster connectivity of the complement, resolution r/8.
        if (field.ball_clear_of_endpoints(cx, cy, r)) {
            const int G = 17;
            std::vector<char> support(G * G, 0), inball(G * G, 0);
            for (int i = 0; i < G; ++i) {
                for (int j = 0; j < G; ++j) {
                    double px = cx + r * (2.0 * i / (G - 1) - 1.0);
                    double py = cy + r * (2.0 * j / (G - 1) - 1.0);
                    if (std::hypot(px - cx, py - cy) > r) continue;
                    inball[i * G + j] = 1;
                    if (field.at(px, py).in_support) support[i * G + j] = 1;
                }
            }
            // Flood fill the non-support cells.
            std::vector<char> seen(G * G, 0);
            int comps = 0;
            for (int i = 0; i < G; ++i) {
                for (int j = 0; j < G; ++j) {
                    int id = i * G + j;
                    if (!inball[id] || support[id] || seen[id]) continue;
                    ++comps;
                    std::queue<int> qq;
                    qq.push(id);
                    seen[id] = 1;
                    while (!qq.empty()) {
                        int v = qq.front();
                        qq.pop();
                        int vi = v / G, vj = v % G;
                        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
                        for (int d = 0; d < 4; ++d) {
                            int ni = vi + di[d], nj = vj + dj[d];
                            if (ni < 0 || nj < 0 || ni >= G || nj >= G) continue;
                            int nid = ni * G + nj;
                            if (!inball[nid] || support[nid] || seen[nid]) continue;
                            seen[nid] = 1;
                            qq.push(nid);
                        }
                    }
                }
            }
            rep.worst_gap_components = std::max(rep.worst_gap_components, comps);
            if (comps > 1) {
                rep.pass = false;
                if (rep.violations.size() < 16) rep.violations.push_back("clause A gap split");
            }
        }
    }
    return rep;
}

// ------------------------------------------------------------------ pipeline

PipelineResult bend_pipeline(const ScaleSequence& seq, int strip_level, int M, double q,
                             BendMode mode, int N) {
    seq.require_level(M);
    if (strip_level < 0 || strip_level >= M)
        throw std::invalid_argument("bend_pipeline: strip level must be below M");
    if (q <= 1.0) throw std::invalid_argument("bend_pipeline: q must exceed 1");
    double h = to_double(seq.side(strip_level));
    PipelineResult res;
    res.family = GoodFamily::straight_strip(0.0, 1.0, 0.0, h);
    double p = q / (q - 1.0);
    res.initial_norm = std::pow(h, 1.0 / q - 1.0);  // width 1 strip

    if (mode == BendMode::Certified) {
        double aprime = std::pow(10.0, -2 - N);
        for (int j = strip_level + 1; j <= M; ++j) {
            if (to_double(seq.a(j)) > aprime)
                throw std::invalid_argument(
                    "bend_pipeline: certified mode requires a_j <= 10^(-2-N)");
        }
    }

    // Obstacles per level inside the growing support band.
    double band_lo = 0.0, band_hi = h;
    std::vector<RRect> placed;  // removed squares already bent around
    for (int lvl = strip_level + 1; lvl <= M; ++lvl) {
        double s_lvl = to_double(seq.side(lvl));
        double s1 = 0.5 * s_lvl;       // P = [z +- s_lvl] covers the square
        double si = 5.0 * to_double(seq.side(lvl - 1)) / 10.0;  // R within the parent scale
        std::vector<RRect> obstacles;
        carpet::for_each_cell(seq, lvl - 1, [&](const carpet::CellAddress& a) {
            auto g = carpet::global_of(seq, a);
            int n = seq.n(lvl), c = seq.center(lvl);
            carpet::GlobalCell center{lvl, g.gx * n + c, g.gy * n + c};
            RRect r = carpet::cell_rect(seq, center);
            double ylo = to_double(r.y0), yhi = to_double(r.y1);
            if (yhi < band_lo - 2 * s_lvl || ylo > band_hi + 2 * s_lvl) return;
            obstacles.push_back(r);
        });
        // Theorem 6.2 spacing hypotheses, exact.
        Rat min_gap = Rat(2, 5) * seq.side(lvl - 1);
        for (const auto& u : obstacles) {
            for (const auto& v : placed) {
                Rat dx = std::max(std::max(Rat(v.x0 - u.x1), Rat(u.x0 - v.x1)), Rat(0));
                Rat dy = std::max(std::max(Rat(v.y0 - u.y1), Rat(u.y0 - v.y1)), Rat(0));
                if (dx * dx + dy * dy < min_gap * min_gap) res.spacing_ok = false;
            }
        }
        for (size_t i = 0; i < obstacles.size(); ++i) {
            for (size_t j = i + 1; j < obstacles.size(); ++j) {
                Rat dx = std::max(std::max(Rat(obstacles[j].x0 - obstacles[i].x1),
                                           Rat(obstacles[i].x0 - obstacles[j].x1)),
                                  Rat(0));
                Rat dy = std::max(std::max(Rat(obstacles[j].y0 - obstacles[i].y1),
                                           Rat(obstacles[i].y0 - obstacles[j].y1)),
                                  Rat(0));
                if (dx * dx + dy * dy < min_gap * min_gap) res.spacing_ok = false;
            }
        }
        if (!res.spacing_ok && mode == BendMode::Certified)
            throw std::invalid_argument("bend_pipeline: obstacle spacing hypotheses violated");
        for (const auto& r : obstacles) {
            double zx = 0.5 * (to_double(r.x0) + to_double(r.x1));
            double zy = 0.5 * (to_double(r.y0) + to_double(r.y1));
            PipelineRow row;
            row.level = lvl;
            row.zx = zx;
            row.zy = zy;
            auto map = build_compression(res.family, zx, zy, si, s1, N,
                                         mode == BendMode::Certified, &row.notes);
            PushReport pr;
            res.family = push_family(res.family, map, q, &pr);
            row.gain = pr.gain;
            for (const auto& v : pr.violations) row.notes.push_back(v);
            res.rows.push_back(row);
            placed.push_back(r);
            band_lo = std::min(band_lo, zy - 6.0 * s1);
            band_hi = std::max(band_hi, zy + 6.0 * s1);
        }
    }

    // ||w||_q over the support band.
    double total = 0.0;
    int nx = 160, ny = 120;
    double wband_lo = band_lo - 0.05, wband_hi = band_hi + 0.05;
    double dx = 1.0 / nx, dy = (wband_hi - wband_lo) / ny;
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            double x = (i + 0.5) * dx, y = wband_lo + (j + 0.5) * dy;
            double w = res.family.weight_at(x, y);
            if (w > 0) total += std::pow(w, q) * dx * dy;
        }
    }
    res.w_norm_q = std::pow(total, 1.0 / q);
    res.lower_bound = std::pow(res.w_norm_q, -p);
    return res;
}

}  // namespace carpetlab::bending
