#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fracfourier/branch.hpp"
#include "fracfourier/thermo.hpp"

namespace fracfourier {

// ---------------------------------------------------------------- Moebius maps of the disk

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

// Orientation preserving isometry of the disk, stored as an SO(2,1) matrix acting on
// (t, w1, w2) with q = -t^2 + |w|^2.
class MoebiusMap {
public:
    MoebiusMap();
    explicit MoebiusMap(const Mat3& m);

    static MoebiusMap rotation(double angle);
    // hyperbolic translation of length `length` along the diameter through e^{i axis}
    static MoebiusMap boost(double axis, double length);

    const Mat3& matrix() const { return m_; }
    MoebiusMap operator*(const MoebiusMap& o) const;
    MoebiusMap inverse() const;

    cplx apply(cplx x) const;
    Vec3 apply(const Vec3& v) const;
    // boundary action on angles, and |gamma'| at e^{i theta}
    double boundary(double theta) const;
    double boundary_derivative(double theta) const;

    double kappa() const;      // d(o, gamma o)
    double norm() const;       // operator norm, e^kappa
    double epsilon() const;    // 1 - |gamma(o)|
    cplx origin_image() const;
    double attracting_angle() const;  // arg gamma(o)
    double q_defect() const;          // max |M^T J M - J|

private:
    Mat3 m_;
};

MoebiusMap hyperbolic_translation(cplx b);

// hyperboloid lift and its inverse
Vec3 to_hyperboloid(cplx x);
cplx from_hyperboloid(const Vec3& v);

double hyperbolic_distance(cplx x, cplx y);
// lim d(x, xi_t) - d(y, xi_t)
double busemann(double xi, cplx x, cplx y);
// d_x(xi, eta) in [0,1]; sine of half the angle at x = o
double visual_distance(cplx x, double xi, double eta);

// constant potential F = -delta: C = delta * busemann(xi, x, y)
double gibbs_cocycle(double delta, double xi, cplx x, cplx y);

struct TruncatedValue {
    double value = 0.0;
    double tail_bound = 0.0;
};
// direct evaluation of the defining limit at ray time t (from o)
TruncatedValue gibbs_cocycle_truncated(double delta, double xi, cplx x, cplx y, double t = 30.0);
// raises Contract when closed form and truncated limit differ by more than tol + tail
double gibbs_cocycle_checked(double delta, double xi, cplx x, cplx y, double tol = 1e-6);

// gap map at o for F = -delta: d_o(xi, eta)^delta, and the truncated limit
double gap_closed_form(double delta, double xi, double eta);
TruncatedValue gap_truncated(double delta, double xi, double eta, double t = 30.0);

struct Arc {
    double center = 0.0;
    double half_width = 0.0;
    bool full = false;
    bool contains(double theta) const;
};

// directions from x whose geodesic meets the closed ball B(y, R)
Arc shadow(cplx x, cplx y, double R);

struct ContractionScale {
    double eps = 0.0;
    double C = 0.0;
    double c = 0.0;       // max (1 - gamma(x).x_m)/eps outside A
    double c_times_C = 0.0;
    std::size_t mesh = 0;
};
// A = {x : 1 - x.x_rep < C eps}, x_rep = gamma^{-1}(o)/|gamma^{-1}(o)|; heights 1 - x.y as distances
ContractionScale contraction_lemma(const MoebiusMap& g, double C, int mesh = 4096);

// ---------------------------------------------------------------- Schottky groups

struct SchottkyGenerator {
    double axis = 0.0;
    double length = 0.0;
};

// Letters 2i and 2i+1 are the generator i and its inverse; letter a maps the
// complement of the arc of its inverse onto its own arc. The boundary map
// restricted to the arc of a is the inverse of letter a.
class SchottkyGroup : public BranchSystem {
public:
    explicit SchottkyGroup(std::vector<SchottkyGenerator> gens);

    std::string name() const override;
    int phase_dim() const override { return 2; }
    cplx point(int a, double u) const override;
    double branch(int a, int b, double u) const override;
    ChartPoint forward(int a, double u) const override;
    double log_expansion(int a, double u) const override;
    double representative(int) const override { return 0.5; }

    int letters() const { return static_cast<int>(maps_.size()); }
    static int inverse_letter(int a) { return a ^ 1; }
    const MoebiusMap& letter_map(int a) const { return maps_[static_cast<std::size_t>(a)]; }
    const Arc& arc(int a) const { return arcs_[static_cast<std::size_t>(a)]; }
    const std::vector<SchottkyGenerator>& generators() const { return gens_; }
    double angle(int a, double u) const;
    double chart(int a, double theta) const;
    // smallest angular gap between distinct arcs
    double arc_gap() const;

    MoebiusMap word_map(const std::vector<int>& w) const;
    // 2k (2k-1)^{n-1}
    std::size_t reduced_count(int n) const;
    std::vector<std::vector<int>> reduced_words(int n) const;

private:
    std::vector<SchottkyGenerator> gens_;
    std::vector<MoebiusMap> maps_;
    std::vector<Arc> arcs_;
};

using SchottkyPtr = std::shared_ptr<const SchottkyGroup>;

struct GroupElement {
    std::vector<int> word;
    MoebiusMap map;
    double kappa = 0.0;
};

// reduced words with kappa in (lo, hi]
std::vector<GroupElement> elements_by_kappa(const SchottkyGroup& g, double lo, double hi);

// ---------------------------------------------------------------- Patterson-Sullivan measure

struct PsMeasure {
    double delta = 0.0;          // root of the discretized operator's pressure
    double grid_pressure = 0.0;  // pressure of -delta tau at that root
    DimensionResult root;        // root from word sums
    EquilibriumData eq;
    AtomicMeasure atoms;          // boundary points as complex numbers
    std::vector<double> angles;   // atom angles in (-pi, pi]
    std::vector<double> tv;       // conformality discrepancy per letter
    double tv_max = 0.0;
    int tv_depth = 0;
};

PsMeasure ps_measure(SchottkyPtr g, int depth, int grid_points = 4096);
// TV discrepancy per letter at cylinder depth depth-1, using atoms of depth `depth`
std::vector<double> conformality_audit(const SchottkyGroup& g, const EquilibriumData& eq, const AtomicMeasure& atoms,
                                       double delta, int depth);

struct ShadowRatios {
    int length = 0;
    double min_ratio = 0.0, max_ratio = 0.0;
    double C = 0.0;  // max(max, 1/min)
    std::size_t words = 0;
};
// mu(O_o B(gamma o, R)) / e^{-delta kappa} over reduced words of one length
ShadowRatios shadow_ratios(const SchottkyGroup& g, const PsMeasure& ps, int length, double R);
// mass of an arc under the atoms (angles sorted internally)
double arc_mass(const std::vector<double>& sorted_angles, const std::vector<double>& prefix, const Arc& arc);

// ---------------------------------------------------------------- stationary synthesis

struct StationaryParams {
    double C_gamma = 1.5;
    int n_max = 3;
    double safety = 1.5;
    double beta = 0.0;  // 0: from the Hoelder calibration
    double A = 0.0;     // 0: calibrated on level 1
    int holder_samples = 64;
    bool weigh_next = false;  // also weigh level n_max + 1 (nu only, R not updated)
};

struct SynthesisLevel {
    int n = 0;
    std::size_t elements = 0;
    double sup_R = 0.0, inf_R = 0.0;
    double bound = 0.0;  // (1 - beta/A^2)^n
    double nu_mass = 0.0;
    int cover_min = 0, cover_max = 0;
    double moment_partial = 0.0;
    // partial sum plus a geometric tail from the last two increments; inf if they do not shrink
    double moment_extrapolated = 0.0;
    double f_defect = 0.0;  // max |int f_gamma dmu - 1| over sampled gamma of this level
};

struct NuEntry {
    std::vector<int> word;
    double weight = 0.0;
    double kappa = 0.0;
    int level = 0;
};

struct StationarySynthesis {
    double C_gamma = 0.0, beta = 0.0, A = 0.0, eps0 = 0.0, alpha_hat = 0.0;
    double delta = 0.0;
    int n_max = 0;
    std::vector<SynthesisLevel> levels;
    std::vector<NuEntry> nu;
    double nu_total = 0.0;
    double residual = 0.0;       // sup R_{n_max} on the atoms
    double residual_mean = 0.0;  // integral of R_{n_max}
    std::vector<double> R_atoms;  // R_{n_max} at the atoms
    bool bound_ok = true;
    double eta_max_over_r = 0.0, eta_max_over_r2 = 0.0;
    double f_integral_defect = 0.0;  // level-1 value of f_defect
    double mass_identity_defect = 0.0;  // |sum nu + int R_{n_max} dmu - 1|
    double moment_eps = 0.0;
    double moment_threshold = 0.0;
    // level n_max + 1 when weigh_next: elements, nu_mass and moments only
    std::optional<SynthesisLevel> next;
    std::vector<NuEntry> nu_next;
};

StationarySynthesis stationary_synthesis(const SchottkyGroup& g, const PsMeasure& ps, const StationaryParams& p);

struct StationaryCheck {
    std::vector<double> per_mode;
    double discrepancy = 0.0;
};
// max over 0 <= m <= M of |<nu * mu - mu, e^{i m theta}>|, pushforwards by conformal reweighting
StationaryCheck check_stationary(const std::vector<std::pair<MoebiusMap, double>>& nu, const PsMeasure& ps, int M);

// ---------------------------------------------------------------- BMS sampling

struct BmsSample {
    AtomicMeasure atoms;  // (theta+, theta-, t)
    double rejected_mass = 0.0;
    double floor = 0.0;
    double window = 0.0;
    std::size_t draws = 0;
};

BmsSample bms_sample(const PsMeasure& ps, std::size_t count, std::uint64_t seed, double floor = 1e-3,
                     double window = 1.0);

}  // namespace fracfourier
