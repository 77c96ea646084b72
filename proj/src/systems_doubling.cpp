#include <algorithm>
#include <cmath>

#include "fracfourier/error.hpp"
#include "fracfourier/systems.hpp"

namespace fracfourier {

namespace {

// 8-point Gauss-Legendre on [-1,1]
constexpr double kGLx[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
constexpr double kGLw[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

double frac(double x) { return x - std::floor(x); }

}  // namespace

double CircleExpandingMap::map(double x) const { return frac(lift(x)); }

PeriodicFunction PeriodicFunction::by_name(const std::string& name) {
    PeriodicFunction p;
    p.name = name;
    if (name == "cos") {
        p.f = [](double x) { return std::cos(kTwoPi * x); };
        p.d1 = [](double x) { return -kTwoPi * std::sin(kTwoPi * x); };
        p.d2 = [](double x) { return -kTwoPi * kTwoPi * std::cos(kTwoPi * x); };
        p.sup_d1 = kTwoPi;
        p.sup_d2 = kTwoPi * kTwoPi;
    } else if (name == "sin2") {
        // sin(2 pi x)^2 = (1 - cos(4 pi x)) / 2
        p.f = [](double x) { return 0.5 * (1.0 - std::cos(2 * kTwoPi * x)); };
        p.d1 = [](double x) { return kTwoPi * std::sin(2 * kTwoPi * x); };
        p.d2 = [](double x) { return 2 * kTwoPi * kTwoPi * std::cos(2 * kTwoPi * x); };
        p.sup_d1 = kTwoPi;
        p.sup_d2 = 2 * kTwoPi * kTwoPi;
    } else if (name == "bump") {
        // exp(-1/(1-t^2)) with t = 4(x - 1/2), supported in (1/4, 3/4)
        auto tt = [](double x) { return 4.0 * (frac(x) - 0.5); };
        p.f = [tt](double x) {
            double t = tt(x);
            return std::fabs(t) < 1 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0;
        };
        p.d1 = [tt](double x) {
            double t = tt(x);
            if (std::fabs(t) >= 1) return 0.0;
            double s = 1.0 - t * t;
            return 4.0 * std::exp(-1.0 / s) * (-2.0 * t / (s * s));
        };
        p.d2 = [tt](double x) {
            double t = tt(x);
            if (std::fabs(t) >= 1) return 0.0;
            double s = 1.0 - t * t;
            double e = std::exp(-1.0 / s);
            // d/dt [-2t/s^2] = (-2 s^2 - 8 t^2 s) / s^4 ; plus (-2t/s^2)^2
            double h = -2.0 * t / (s * s);
            double dh = (-2.0 * s - 8.0 * t * t) / (s * s * s);
            return 16.0 * e * (h * h + dh);
        };
        double m1 = 0, m2 = 0;
        for (int i = 0; i < 20000; ++i) {
            double x = (i + 0.5) / 20000;
            m1 = std::max(m1, std::fabs(p.d1(x)));
            m2 = std::max(m2, std::fabs(p.d2(x)));
        }
        p.sup_d1 = m1 * 1.01;
        p.sup_d2 = m2 * 1.01;
    } else {
        fail(ErrorKind::Schema, "unknown Phi '" + name + "' (known: cos, sin2, bump)");
    }
    return p;
}

std::vector<std::string> PeriodicFunction::registry() { return {"cos", "sin2", "bump"}; }

DoublingPerturbation::DoublingPerturbation(PeriodicFunction Phi, double delta, int cells)
    : Phi_(std::move(Phi)), delta_(delta), cells_(cells) {
    require(delta >= 0, "delta must be >= 0");
    require(cells >= 16, "quadrature needs at least 16 cells");
    nonconstant_ = std::fabs(2 * Phi_.f(0.0) - Phi_.f(1.0 / 3.0) - Phi_.f(2.0 / 3.0)) > 1e-12;
    if (delta_ > 0) {
        cum_.assign(static_cast<std::size_t>(cells_) + 1, 0.0);
        CompensatedSum s;
        for (int k = 0; k < cells_; ++k) {
            s.add(cell_integral(static_cast<double>(k) / cells_, static_cast<double>(k + 1) / cells_));
            cum_[static_cast<std::size_t>(k) + 1] = s.value();
        }
        z_ = 1.0 / cum_.back();
        double lo = INFINITY;
        for (int i = 0; i < 8192; ++i) lo = std::min(lo, 2 * z_ * std::exp(delta_ * Phi_.f((i + 0.5) / 8192)));
        inf_fprime_ = lo;
        if (!(lo > 1.0)) fail(ErrorKind::Contract, "f_delta is not expanding: inf f' = " + std::to_string(lo));
    }
    m_ = TransitionMatrix::full(2);
    init_bounds();
}

double DoublingPerturbation::cell_integral(double a, double b) const {
    double c = 0.5 * (a + b), h = 0.5 * (b - a), s = 0;
    for (int i = 0; i < 4; ++i)
        s += kGLw[i] * (std::exp(delta_ * Phi_.f(c - h * kGLx[i])) + std::exp(delta_ * Phi_.f(c + h * kGLx[i])));
    return s * h;
}

std::string DoublingPerturbation::name() const {
    return "doubling(" + Phi_.name + "," + std::to_string(delta_) + ")";
}

double DoublingPerturbation::phi(double x) const {
    if (delta_ == 0) return x;
    double n = std::floor(x), r = x - n;
    int k = std::min(cells_ - 1, static_cast<int>(r * cells_));
    double xk = static_cast<double>(k) / cells_;
    return n + z_ * (cum_[static_cast<std::size_t>(k)] + cell_integral(xk, r));
}

double DoublingPerturbation::phi_prime(double x) const { return z_ * std::exp(delta_ * Phi_.f(x)); }

double DoublingPerturbation::phi_inv(double y) const {
    if (delta_ == 0) return y;
    double n = std::floor(y), r = y - n;
    double target = r / z_;
    auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    int k = static_cast<int>(it - cum_.begin()) - 1;
    k = std::clamp(k, 0, cells_ - 1);
    double lo = static_cast<double>(k) / cells_, hi = static_cast<double>(k + 1) / cells_;
    double x = lo + (target - cum_[static_cast<std::size_t>(k)]) / std::exp(delta_ * Phi_.f(lo));
    for (int it2 = 0; it2 < 6; ++it2) {
        x = std::clamp(x, lo, hi);
        double f = phi(x) - r;
        double step = f / phi_prime(x);
        x -= step;
        if (std::fabs(step) < 1e-17) break;
    }
    return n + std::clamp(x, lo, hi);
}

double DoublingPerturbation::g(int a, double x) const { return 0.5 * (phi_inv(x) + a); }

double DoublingPerturbation::g_prime(int, double x) const { return 0.5 / phi_prime(phi_inv(x)); }

double DoublingPerturbation::branch(int, int b, double u) const { return phi_inv(0.5 * (b + u)); }

ChartPoint DoublingPerturbation::forward(int, double u) const {
    double y = phi(u);
    int b = y < 0.5 ? 0 : 1;
    return {b, std::clamp(2 * y - b, 0.0, 1.0)};
}

double DoublingPerturbation::log_expansion(int, double u) const {
    if (delta_ == 0) return kLn2;
    return std::log(2 * z_) + delta_ * Phi_.f(u);
}

double DoublingPerturbation::lift(double x) const { return phi(2 * x); }
double DoublingPerturbation::derivative(double x) const { return 2 * phi_prime(2 * x); }
double DoublingPerturbation::log_derivative(double x) const {
    if (delta_ == 0) return kLn2;
    return std::log(2 * z_) + delta_ * Phi_.f(2 * x);
}
double DoublingPerturbation::log_derivative_lipschitz() const { return 2 * delta_ * Phi_.sup_d1; }

std::shared_ptr<DoublingPerturbation> build_doubling(const std::string& Phi_name, double delta) {
    return std::make_shared<DoublingPerturbation>(PeriodicFunction::by_name(Phi_name), delta);
}

double conjugacy_point(const DoublingPerturbation& sys, double x, int K) {
    require(K >= 1, "conjugacy depth must be >= 1");
    x -= std::floor(x);
    std::vector<int> digits(static_cast<std::size_t>(K));
    double r = x;
    for (int k = 0; k < K; ++k) {
        r *= 2;
        int d = r >= 1 ? 1 : 0;
        r -= d;
        digits[static_cast<std::size_t>(k)] = d;
    }
    double y = 0.0;
    for (int k = K - 1; k >= 0; --k) y = sys.g(digits[static_cast<std::size_t>(k)], y);
    return y;
}

}  // namespace fracfourier
