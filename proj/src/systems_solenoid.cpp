#include <algorithm>
#include <cmath>
#include <string>

#include "fracfourier/error.hpp"
#include "fracfourier/systems.hpp"

namespace fracfourier {

const char* const kLnLn2Digits =
    "36651292058166432701243915823266946945426344783710526305367771367056161531935274";
// lnln2 = -0.3665129205816643...
constexpr double kLnLn2 = -0.36651292058166432701243915823266946945426344783710526305367771367056161531935274;

namespace {

// quintic smoothstep, C^2 at both ends
double sstep(double t) {
    if (t <= 0) return 0;
    if (t >= 1) return 1;
    return t * t * t * (t * (6 * t - 15) + 10);
}
double sstep1(double t) {
    if (t <= 0 || t >= 1) return 0;
    return 30 * t * t * (t - 1) * (t - 1);
}
double sstep2(double t) {
    if (t <= 0 || t >= 1) return 0;
    return 60 * t * (t - 1) * (2 * t - 1);
}

// theta(u): 1 on [-1/4,1/4], 0 outside [-1/2,1/2]
double bump(double u) { return 1.0 - sstep(4 * std::fabs(u) - 1); }
double bump1(double u) { return -4.0 * sstep1(4 * std::fabs(u) - 1) * (u < 0 ? -1.0 : 1.0); }
double bump2(double u) { return -16.0 * sstep2(4 * std::fabs(u) - 1); }

// chi(u) = u theta(u)
double chi(double u) { return u * bump(u); }
double chi1(double u) { return bump(u) + u * bump1(u); }
double chi2(double u) { return 2 * bump1(u) + u * bump2(u); }

double frac(double x) { return x - std::floor(x); }

// (beta_N - lnln2) from the decimal expansion: -(1 - 0.d_{N^2+1}d_{N^2+2}...) 10^{-N^2}
double decimal_offset(int N) {
    std::size_t n2 = static_cast<std::size_t>(N * N);
    std::string digits(kLnLn2Digits);
    if (n2 + 17 > digits.size())
        fail(ErrorKind::Domain, "decimal-expansion policy supports N <= 7 with the stored digits");
    double r = std::stod("0." + digits.substr(n2, 17));
    return -(1.0 - r) * std::pow(10.0, -static_cast<double>(n2));
}

}  // namespace

SolenoidSystem::SolenoidSystem(int N_max, PrecisionPolicy policy, double eps, bool with_g)
    : N_max_(N_max), eps_(eps), with_g_(with_g) {
    require(N_max >= 2, "solenoid needs N_max >= 2");
    alpha_.assign(static_cast<std::size_t>(N_max) + 1, 0.0);
    beta_.assign(static_cast<std::size_t>(N_max) + 1, 0.0);
    beta_off_.assign(static_cast<std::size_t>(N_max) + 1, 0.0);
    for (int N = 2; N <= N_max; ++N) {
        double off = 0.0;
        double scale = std::pow(10.0, static_cast<double>(N * N));
        if (policy == PrecisionPolicy::DecimalExpansion) {
            off = decimal_offset(N);
        } else if (scale < 9007199254740992.0) {
            double x = scale * kLnLn2;
            off = (std::floor(x) - x) / scale;
        }  // otherwise floor(10^{N^2} lnln2) 10^{-N^2} equals lnln2 to all working digits
        beta_off_[static_cast<std::size_t>(N)] = off;
        beta_[static_cast<std::size_t>(N)] = kLnLn2 + off;
        // 2 (2^{-N} e^{N e^{beta}} - 1) with e^{beta} = ln2 e^{off}
        alpha_[static_cast<std::size_t>(N)] = 2.0 * std::expm1(N * kLn2 * std::expm1(off));
    }
    g_c1_ = g_c1_norm(1 << 14);
    inv_contraction_ = 1.0 / (2.0 - g_c1_ - std::fabs(eps_));
}

double SolenoidSystem::g(double x) const {
    if (!with_g_) return 0.0;
    x = frac(x);
    double s = 0;
    for (int K = 2; K <= N_max_; ++K) {
        double e = std::ldexp(1.0, 3 * K);
        double u = e * (x - 1.0 / (std::ldexp(1.0, K) - 1.0));
        if (std::fabs(u) < 0.5) s += alpha_[static_cast<std::size_t>(K)] / e * chi(u);
    }
    return s;
}

double SolenoidSystem::g_prime(double x) const {
    if (!with_g_) return 0.0;
    x = frac(x);
    double s = 0;
    for (int K = 2; K <= N_max_; ++K) {
        double e = std::ldexp(1.0, 3 * K);
        double u = e * (x - 1.0 / (std::ldexp(1.0, K) - 1.0));
        if (std::fabs(u) < 0.5) s += alpha_[static_cast<std::size_t>(K)] * chi1(u);
    }
    return s;
}

double SolenoidSystem::g_second(double x) const {
    if (!with_g_) return 0.0;
    x = frac(x);
    double s = 0;
    for (int K = 2; K <= N_max_; ++K) {
        double e = std::ldexp(1.0, 3 * K);
        double u = e * (x - 1.0 / (std::ldexp(1.0, K) - 1.0));
        if (std::fabs(u) < 0.5) s += alpha_[static_cast<std::size_t>(K)] * e * chi2(u);
    }
    return s;
}

double SolenoidSystem::g_c1_norm(int samples) const {
    double m0 = 0, m1 = 0;
    for (int i = 0; i < samples; ++i) {
        double x = (i + 0.5) / samples;
        m0 = std::max(m0, std::fabs(g(x)));
        m1 = std::max(m1, std::fabs(g_prime(x)));
    }
    for (int K = 2; K <= N_max_; ++K) m1 = std::max(m1, std::fabs(g_prime(1.0 / (std::ldexp(1.0, K) - 1.0))));
    return m0 + m1;
}

double SolenoidSystem::lift(double x) const {
    double n = std::floor(x), r = x - n;
    return 2 * n + 2 * r + g(r) + eps_ * std::sin(kTwoPi * r) / kTwoPi;
}

double SolenoidSystem::derivative(double x) const { return 2 + g_prime(x) + eps_ * std::cos(kTwoPi * x); }

double SolenoidSystem::inverse(int a, double theta) const {
    double target = frac(theta) + a;
    double lo = 0.0, hi = 1.0;
    double x = 0.5 * target;
    for (int it = 0; it < 60; ++it) {
        double f = lift(x) - target;
        if (f == 0) break;
        if (f > 0)
            hi = std::min(hi, x);
        else
            lo = std::max(lo, x);
        double nx = x - f / derivative(x);
        // converged Newton step first: it may sit on the bracket end it just moved
        if (std::fabs(nx - x) <= 1e-16 * std::max(1.0, x)) {
            x = nx;
            break;
        }
        if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
        x = nx;
    }
    return std::clamp(x, 0.0, 1.0);
}

double SolenoidSystem::log_derivative_lipschitz() const {
    double m2 = 0;
    for (int K = 2; K <= N_max_; ++K) {
        double e = std::ldexp(1.0, 3 * K);
        // sup |chi''| <= 2*4*1.875 + 0.5*16*5.78
        m2 = std::max(m2, std::fabs(alpha_[static_cast<std::size_t>(K)]) * e * 62.0);
    }
    m2 += eps_ * kTwoPi;
    double lo = 2.0 - g_c1_ - std::fabs(eps_);
    return m2 / lo;
}

SolenoidSystem::Vec3 SolenoidSystem::F(const Vec3& p) const {
    double t = p[0];
    return {frac(lift(t)), 0.25 * p[1] + std::cos(kTwoPi * t) / (4 * kPi), 0.25 * p[2] + std::sin(kTwoPi * t) / (4 * kPi)};
}

SolenoidSystem::Mat3 SolenoidSystem::jacobian(const Vec3& p) const {
    double t = p[0];
    Mat3 J{};
    J[0] = {derivative(t), 0.0, 0.0};
    J[1] = {-0.5 * std::sin(kTwoPi * t), 0.25, 0.0};
    J[2] = {0.5 * std::cos(kTwoPi * t), 0.0, 0.25};
    return J;
}

double SolenoidSystem::embedded_x(const std::vector<double>& th) {
    double s = 0, w = 0.25;
    for (double t : th) {
        s += w * std::cos(kTwoPi * t);
        w *= 0.25;
    }
    return s / kPi;
}

double SolenoidSystem::embedded_y(const std::vector<double>& th) {
    double s = 0, w = 0.25;
    for (double t : th) {
        s += w * std::sin(kTwoPi * t);
        w *= 0.25;
    }
    return s / kPi;
}

std::shared_ptr<SolenoidSystem> solenoid_build(int N_max, PrecisionPolicy policy, double eps) {
    auto s = std::make_shared<SolenoidSystem>(N_max, policy, eps);
    if (!(s->g_c1_norm() < 1.0)) fail(ErrorKind::Contract, "solenoid perturbation violates |g|_C1 < 1");
    return s;
}

PeriodicData solenoid_periodic(const SolenoidSystem& sys, int N) {
    require(N >= 2 && N <= sys.N_max(), "period out of range");
    PeriodicData d;
    d.theta = 1.0 / (std::pow(2.0, N) - 1.0);
    double x = d.theta;
    CompensatedSum lyap;
    double prod = 1.0;
    SolenoidSystem::Mat3 M{};
    for (int i = 0; i < 3; ++i) M[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
    for (int k = 0; k < N; ++k) {
        double fp = sys.derivative(x);
        lyap.add(std::log(fp));
        prod *= fp;
        auto J = sys.jacobian({x, 0.0, 0.0});
        SolenoidSystem::Mat3 R{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int l = 0; l < 3; ++l) s += J[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] * M[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)];
                R[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s;
            }
        M = R;
        x = sys.map(x);
    }
    double e = std::fabs(x - d.theta);
    d.return_error = std::min(e, 1.0 - e);
    d.lyapunov_orbit = lyap.value() / N;
    d.lyapunov_closed = kLn2 + std::log1p(sys.alpha(N) / 2) / N;
    d.det_product = M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
                    M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
    d.det_formula = std::pow(16.0, -N) * prod;
    return d;
}

std::vector<double> backward_orbit(const CircleExpandingMap& f, double theta, const std::vector<int>& bits, std::size_t K) {
    require(bits.size() >= K, "code shorter than requested depth");
    std::vector<double> out(K);
    double t = theta;
    for (std::size_t k = 0; k < K; ++k) {
        t = f.inverse(bits[k], t);
        out[k] = t;
    }
    return out;
}

bool same_piece(double a, double b) { return (frac(a) < 0.5) == (frac(b) < 0.5); }

CodedPoint solenoid_bracket(const CodedPoint& p, const CodedPoint& q) {
    if (p.bits.size() != q.bits.size()) fail(ErrorKind::Domain, "bracket depth mismatch");
    require(same_piece(p.theta, q.theta), "bracket needs both points in the same depth-1 piece");
    return {p.theta, q.bits};
}

DeltaValue solenoid_delta(const CircleExpandingMap& f, const CodedPoint& p, const CodedPoint& q, std::size_t K,
                          const std::function<double(double)>& tau, double tau_lip) {
    require(same_piece(p.theta, q.theta), "delta needs both points in the same depth-1 piece");
    auto ap = backward_orbit(f, p.theta, p.bits, K), aq = backward_orbit(f, q.theta, p.bits, K);
    auto bp = backward_orbit(f, p.theta, q.bits, K), bq = backward_orbit(f, q.theta, q.bits, K);
    CompensatedSum s;
    double worst = 0;
    for (std::size_t k = 0; k < K; ++k) {
        double u = tau(ap[k]) - tau(aq[k]);
        double v = tau(bp[k]) - tau(bq[k]);
        s.add(u - v);
        worst = std::max({worst, std::fabs(tau(ap[k])), std::fabs(tau(bp[k]))});
    }
    DeltaValue d;
    d.value = s.value();
    double kappa = f.inverse_contraction();
    double dth = std::fabs(p.theta - q.theta);
    d.tail_bound = 2 * tau_lip * std::pow(kappa, static_cast<double>(K + 1)) / (1 - kappa) * dth +
                   8.0 * static_cast<double>(K) * 2.220446049250313e-16 * worst;
    return d;
}

DeltaValue solenoid_delta(const CircleExpandingMap& f, const CodedPoint& p, const CodedPoint& q, std::size_t K) {
    return solenoid_delta(f, p, q, K, [&f](double x) { return f.log_derivative(x); }, f.log_derivative_lipschitz());
}

}  // namespace fracfourier
