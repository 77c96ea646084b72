#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "fracfourier/branch.hpp"

namespace fracfourier {

// ---------------------------------------------------------------- linear IFS

// Full shift on disjoint intervals [l_a, l_a + r_a] inside [0,1]; f is affine on
// each piece. The triadic Cantor set is {[0,1/3],[2/3,1/3]}.
class LinearIFS : public BranchSystem {
public:
    struct Piece {
        double left;
        double ratio;
    };
    LinearIFS(std::string name, std::vector<Piece> pieces);
    static std::shared_ptr<LinearIFS> cantor();
    static std::shared_ptr<LinearIFS> halves();

    std::string name() const override { return name_; }
    int phase_dim() const override { return 1; }
    cplx point(int a, double u) const override;
    double branch(int a, int b, double u) const override;
    ChartPoint forward(int a, double u) const override;
    double log_expansion(int a, double u) const override;

    const std::vector<Piece>& pieces() const { return pieces_; }

private:
    std::string name_;
    std::vector<Piece> pieces_;
};

// ----------------------------------------------------- circle expanding maps

// Degree-2 orientation-preserving circle map with lift F, F(0) = 0, F(1) = 2.
class CircleExpandingMap {
public:
    virtual ~CircleExpandingMap() = default;
    virtual double lift(double x) const = 0;
    virtual double derivative(double x) const = 0;
    // preimage of theta in [0,1) along bit a: the solution of F(x) = theta + a
    virtual double inverse(int a, double theta) const = 0;
    virtual double log_derivative(double x) const { return std::log(derivative(x)); }
    // bound on |d/dx log f'|
    virtual double log_derivative_lipschitz() const = 0;
    // sup of 1/f'
    virtual double inverse_contraction() const = 0;
    double map(double x) const;
};

// 1-periodic C^2 function with derivatives, chosen by name from {cos, sin2, bump}.
struct PeriodicFunction {
    std::string name;
    std::function<double(double)> f, d1, d2;
    double sup_d1 = 0.0, sup_d2 = 0.0;

    static PeriodicFunction by_name(const std::string& name);
    static std::vector<std::string> registry();
};

// f_delta(x) = phi_delta(2x) with phi_delta(x) = z int_0^x e^{delta Phi}.
// Pieces S_0 = [0,1/2), S_1 = [1/2,1) with chart x = (a+u)/2.
class DoublingPerturbation : public BranchSystem, public CircleExpandingMap {
public:
    DoublingPerturbation(PeriodicFunction Phi, double delta, int cells = 1 << 14);

    std::string name() const override;
    int phase_dim() const override { return 1; }
    cplx point(int a, double u) const override { return {0.5 * (a + u), 0.0}; }
    double branch(int a, int b, double u) const override;
    ChartPoint forward(int a, double u) const override;
    double log_expansion(int a, double u) const override;

    double lift(double x) const override;
    double derivative(double x) const override;
    double inverse(int a, double theta) const override { return g(a, theta); }
    double log_derivative(double x) const override;
    double log_derivative_lipschitz() const override;
    double inverse_contraction() const override { return 1.0 / inf_fprime_; }

    // phi_delta on the real line and its inverse
    double phi(double x) const;
    double phi_inv(double y) const;
    double phi_prime(double x) const;
    // inverse branches of f on the circle and their derivatives
    double g(int a, double x) const;
    double g_prime(int a, double x) const;

    const PeriodicFunction& Phi() const { return Phi_; }
    double delta() const { return delta_; }
    double z() const { return z_; }
    double inf_derivative() const { return inf_fprime_; }
    bool nonconstant_flag() const { return nonconstant_; }

private:
    double cell_integral(double a, double b) const;

    PeriodicFunction Phi_;
    double delta_;
    double z_ = 1.0;
    int cells_;
    std::vector<double> cum_;  // int_0^{k/cells} e^{delta Phi}, compensated
    double inf_fprime_ = 2.0;
    bool nonconstant_ = false;
};

std::shared_ptr<DoublingPerturbation> build_doubling(const std::string& Phi_name, double delta);

// psi(x) = lim g_{a_1} o ... o g_{a_K}(0) with a_k the binary digits of x.
double conjugacy_point(const DoublingPerturbation& sys, double x, int K);

// ------------------------------------------------------------ Julia sets

// z -> z^2 + c on its Julia set, coded by external angle with the doubling map.
class JuliaQuadratic : public BranchSystem {
public:
    explicit JuliaQuadratic(cplx c, int depth = 56);

    std::string name() const override;
    int phase_dim() const override { return 2; }
    cplx point(int a, double u) const override { return at_angle(0.5 * (a + u)); }
    double branch(int a, int b, double u) const override;
    ChartPoint forward(int a, double u) const override;
    double log_expansion(int a, double u) const override;
    double expansion_arg(int a, double u) const override;

    // coded Julia point at external angle theta in [0,1)
    cplx at_angle(double theta) const;
    cplx c() const { return c_; }
    cplx beta() const { return beta_; }
    int attracting_period() const { return period_; }
    cplx attracting_point() const { return attractor_; }

private:
    cplx c_;
    int depth_;
    cplx beta_;
    int period_ = 0;
    cplx attractor_;
};

std::shared_ptr<JuliaQuadratic> julia_build(cplx c);

// ------------------------------------------------------------ solenoid

enum class PrecisionPolicy { WorkingPrecision, DecimalExpansion };

// lnln2 to 80 decimals
extern const char* const kLnLn2Digits;

// Base map f(t) = 2t + g(t) + eps sin(2 pi t) / (2 pi) and the solid-torus map F.
class SolenoidSystem : public CircleExpandingMap {
public:
    SolenoidSystem(int N_max, PrecisionPolicy policy, double eps = 0.0, bool with_g = true);

    double lift(double x) const override;
    double derivative(double x) const override;
    double inverse(int a, double theta) const override;
    double log_derivative_lipschitz() const override;
    double inverse_contraction() const override { return inv_contraction_; }

    double g(double x) const;
    double g_prime(double x) const;
    double g_second(double x) const;
    // sup |g| + sup |g'| on a dense grid
    double g_c1_norm(int samples = 1 << 16) const;

    int N_max() const { return N_max_; }
    double alpha(int N) const { return alpha_.at(static_cast<std::size_t>(N)); }
    double beta(int N) const { return beta_.at(static_cast<std::size_t>(N)); }
    // beta_N - lnln2
    double beta_offset(int N) const { return beta_off_.at(static_cast<std::size_t>(N)); }
    double eps() const { return eps_; }

    using Vec3 = std::array<double, 3>;
    using Mat3 = std::array<std::array<double, 3>, 3>;
    Vec3 F(const Vec3& p) const;
    Mat3 jacobian(const Vec3& p) const;

    // x-coordinate of the attractor point above theta with backward thetas th[k] = theta_{-k-1}
    static double embedded_x(const std::vector<double>& backward_thetas);
    static double embedded_y(const std::vector<double>& backward_thetas);

private:
    int N_max_;
    double eps_;
    bool with_g_;
    std::vector<double> alpha_, beta_, beta_off_;
    double inv_contraction_ = 0.5;
    double g_c1_ = 0.0;
};

std::shared_ptr<SolenoidSystem> solenoid_build(int N_max, PrecisionPolicy policy, double eps = 0.0);

struct PeriodicData {
    double theta = 0.0;
    double return_error = 0.0;  // |f^N(theta) - theta| on the circle
    double lyapunov_closed = 0.0;
    double lyapunov_orbit = 0.0;
    double det_product = 0.0;  // det(dF^N) by matrix products
    double det_formula = 0.0;  // 16^{-N} prod f'
};

PeriodicData solenoid_periodic(const SolenoidSystem& sys, int N);

// A point coded backwards: angle theta and bits a_1..a_K choosing preimages.
struct CodedPoint {
    double theta = 0.0;
    std::vector<int> bits;
};

// Backward preimages theta_{-1}, ..., theta_{-K}.
std::vector<double> backward_orbit(const CircleExpandingMap& f, double theta, const std::vector<int>& bits, std::size_t K);

// [p,q]: the angle of p with the backward itinerary of q. Both in the same half of the circle.
CodedPoint solenoid_bracket(const CodedPoint& p, const CodedPoint& q);
bool same_piece(double a, double b);

struct DeltaValue {
    double value = 0.0;
    double tail_bound = 0.0;
};

// Delta(p,q) from the base cocycle tau = log f', truncated after K backward steps.
DeltaValue solenoid_delta(const CircleExpandingMap& f, const CodedPoint& p, const CodedPoint& q, std::size_t K);
// Same with a caller-supplied cocycle tau of Lipschitz constant tau_lip.
DeltaValue solenoid_delta(const CircleExpandingMap& f, const CodedPoint& p, const CodedPoint& q, std::size_t K,
                          const std::function<double(double)>& tau, double tau_lip);

}  // namespace fracfourier
