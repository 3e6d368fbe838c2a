#pragma once

#include "carpetlab/carpet.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace carpetlab::bending {

using carpet::ScaleSequence;

// C^2 cubic-spline bump: phi'' piecewise linear through (+-1,0), (+-0.9,0),
// (+-0.7,b), (+-0.3,-b), (+-0.1,0), (0,0) with b = 25/2; phi identically 1 on
// [-0.1,0.1], support in [-0.9,0.9].
struct PhiJet {
    Rat phi, dphi, ddphi;
};

class BumpSpline {
  public:
    BumpSpline();
    PhiJet eval(const Rat& x) const;  // exact; throws outside [-1,1]
    double phi(double x) const;
    double dphi(double x) const;
    double ddphi(double x) const;

  private:
    // Piece i covers [knots_[i], knots_[i+1]]; cubic coefficients of phi,
    // low degree first. Double copies serve the numeric paths.
    std::vector<Rat> knots_;
    std::vector<std::array<Rat, 4>> coef_;
    std::vector<double> dknots_;
    std::vector<std::array<double, 4>> dcoef_;
};

const BumpSpline& bump_spline();

// Identity of a family curve: parameter plus an approach side (-1/0/+1);
// sides distinguish the two edges left by a deleted curve.
struct CurveRef {
    double u = 0.0;
    int side = 0;
};

struct Jet {
    double y = 0.0, dy = 0.0, ddy = 0.0;
};

struct CompressionMap {
    double zx = 0.0, zy = 0.0;
    double si = 0.0, sip1 = 0.0;
    int N = 5;
    CurveRef gamma0;
    bool deletes_curve = false;  // case 2 removed a real curve

    double q_half() const;                    // 10^N s_{i+1}
    double p_half() const { return 2.0 * sip1; }
    RRect q_box() const;
    RRect p_box() const;
    RRect r_box() const;  // [z +- s_i/10]^2
};

// Family of disjoint C^2 graphs over a window: the straight strip composed
// with a list of compression maps, with exact-chain-rule jets and the
// push-forward weight w = d(nu)/dH^2.
class GoodFamily {
  public:
    static GoodFamily straight_strip(double x0, double x1, double u0, double u1);

    double x0() const { return wx0_; }
    double x1() const { return wx1_; }
    double u0() const { return u0_; }
    double u1() const { return u1_; }
    const std::vector<CompressionMap>& maps() const { return maps_; }

    // Jet of the curve through the first `upto` maps (all when upto < 0).
    Jet curve_jet(const CurveRef& c, double x, int upto = -1) const;
    double weight_on_curve(const CurveRef& c, double x) const;

    std::optional<CurveRef> param_at(double x, double y) const;
    double weight_at(double x, double y) const;  // 0 off the support
    double slope_at(double x, double y) const;   // 0 off the support
    // Open gaps crossing the vertical line at x (inside the support hull),
    // plus the support bounds.
    std::vector<std::pair<double, double>> gaps_at(double x) const;
    std::pair<double, double> support_at(double x) const;

    // Map-level queries (k = map index).
    Jet gamma0_jet(int k, double x) const;
    double jacobian(int k, double x, double y, int side = 1) const;  // JH at a pre-image point
    double forward_y(int k, double x, double y, int side) const;     // h_k
    std::optional<double> inverse_y(int k, double x, double Y) const;

    GoodFamily with_map(CompressionMap map) const;

  private:
    double wx0_ = 0, wx1_ = 1, u0_ = 0, u1_ = 1;
    std::vector<CompressionMap> maps_;
    std::vector<CurveRef> deleted_;

    void gamma0_stack(double x, std::vector<Jet>& out) const;
    int branch_of(const CurveRef& c, const CurveRef& g0) const;
};

// Selects gamma0 per the two-case rule and assembles the map data. In
// certified mode enforces sip1/si <= 10^(-2-N) and the 5 s_{i+1} clearance;
// empirical mode records failures in `notes` instead.
CompressionMap build_compression(const GoodFamily& fam, double zx, double zy, double si,
                                 double sip1, int N, bool certified,
                                 std::vector<std::string>* notes = nullptr);

struct PushReport {
    double q = 2.0;
    double gain = 1.0;     // (int_R w_new^q) / (int_R w_old^q)
    double jh_min = 1.0, jh_max = 1.0;
    std::vector<std::string> violations;
};

GoodFamily push_family(const GoodFamily& fam, const CompressionMap& map, double q,
                       PushReport* report = nullptr);

// Abstract sampled view of a curve family, so deliberately corrupted fields
// can be checked by the same code.
struct FieldSample {
    bool in_support = false;
    double slope = 0.0;
    double weight = 0.0;
};
class CurveField {
  public:
    virtual ~CurveField() = default;
    virtual FieldSample at(double x, double y) const = 0;
    virtual bool ball_clear_of_endpoints(double cx, double cy, double r) const = 0;
};

class FamilyField final : public CurveField {
  public:
    explicit FamilyField(const GoodFamily& f) : fam_(&f) {}
    FieldSample at(double x, double y) const override;
    bool ball_clear_of_endpoints(double cx, double cy, double r) const override;

  private:
    const GoodFamily* fam_;
};

struct GoodCheckReport {
    bool pass = true;
    double angle_margin = 0.0;   // max of measured/allowed for clause (B)
    double pinch_margin = 0.0;   // max of measured/allowed range for (C)
    double holder_margin = 0.0;  // max of measured/allowed Holder ratio for (C)
    int worst_gap_components = 0;
    std::vector<std::string> violations;
};

GoodCheckReport good_check(const CurveField& field, const RRect& region, double delta0, double r0,
                           int ball_budget, std::uint64_t seed);

enum class BendMode { Certified, Empirical };

struct PipelineRow {
    int level = 0;
    double zx = 0, zy = 0;
    double gain = 1.0;
    std::vector<std::string> notes;
};

struct PipelineResult {
    GoodFamily family = GoodFamily::straight_strip(0, 1, 0, 1);
    double w_norm_q = 0.0;     // ||w_M||_q over the support
    double lower_bound = 0.0;  // ||w||_q^{-p}
    double initial_norm = 0.0;
    std::vector<PipelineRow> rows;
    bool spacing_ok = true;
};

// Straight family in the strip [0,1] x [0, s_{m0}], bent around every removed
// square of levels m0+1..M meeting the strip band, level by level.
PipelineResult bend_pipeline(const ScaleSequence& seq, int strip_level, int M, double q,
                             BendMode mode, int N);

}  // namespace carpetlab::bending
