#include <cmath>
#include <sstream>

#include "fracfourier/error.hpp"
#include "fracfourier/systems.hpp"

namespace fracfourier {

namespace {

double angle_gap(double a, double b) {
    double d = std::fmod(std::fabs(a - b), kTwoPi);
    return d > kPi ? kTwoPi - d : d;
}

}  // namespace

JuliaQuadratic::JuliaQuadratic(cplx c, int depth) : c_(c), depth_(depth) {
    beta_ = 0.5 * (1.0 + std::sqrt(1.0 - 4.0 * c));
    // hyperbolicity: the critical orbit must settle on an attracting cycle
    cplx z = 0.0;
    for (int i = 0; i < 200; ++i) {
        z = z * z + c;
        if (std::abs(z) > 4) fail(ErrorKind::Contract, "critical orbit escapes: c outside the connectedness locus");
    }
    for (int p = 1; p <= 32 && period_ == 0; ++p) {
        cplx w = z, deriv = 1.0;
        for (int i = 0; i < p; ++i) {
            deriv *= 2.0 * w;
            w = w * w + c;
        }
        if (std::abs(w - z) < 1e-9 && std::abs(deriv) < 1.0) {
            period_ = p;
            attractor_ = z;
        }
    }
    if (period_ == 0) fail(ErrorKind::Contract, "no attracting cycle found within 200 iterates: c not certified hyperbolic");
    m_ = TransitionMatrix::full(2);
    init_bounds(257);
    if (!(kappa_max_ < 1.0)) fail(ErrorKind::Contract, "Julia coding is not uniformly contracting");
}

std::string JuliaQuadratic::name() const {
    std::ostringstream s;
    s.precision(17);
    s << "julia(" << c_.real() << (c_.imag() < 0 ? "" : "+") << c_.imag() << "i)";
    return s.str();
}

cplx JuliaQuadratic::at_angle(double theta) const {
    theta -= std::floor(theta);
    std::vector<double> th(static_cast<std::size_t>(depth_) + 1);
    th[0] = theta;
    for (int k = 1; k <= depth_; ++k) {
        double t = 2 * th[static_cast<std::size_t>(k - 1)];
        th[static_cast<std::size_t>(k)] = t >= 1 ? t - 1 : t;
    }
    // start far out on the external ray; each square root halves the Green potential
    cplx w = std::polar(1e10, kTwoPi * th[static_cast<std::size_t>(depth_)]);
    for (int k = depth_ - 1; k >= 0; --k) {
        cplx s = std::sqrt(w - c_);
        double target = kTwoPi * th[static_cast<std::size_t>(k)];
        double g1 = angle_gap(std::arg(s), target), g2 = angle_gap(std::arg(-s), target);
        w = g1 <= g2 ? s : -s;
        // the two roots are antipodal; a chosen root far from the target angle means the selection is ambiguous
        if (std::min(g1, g2) > kPi / 3)
            fail(ErrorKind::BranchJump, "square-root branch lost continuity at angle " + std::to_string(theta));
    }
    return w;
}

double JuliaQuadratic::branch(int, int b, double u) const { return 0.5 * (b + u); }

ChartPoint JuliaQuadratic::forward(int, double u) const {
    int b = u < 0.5 ? 0 : 1;
    return {b, std::min(1.0, 2 * u - b)};
}

double JuliaQuadratic::log_expansion(int a, double u) const { return std::log(2.0 * std::abs(point(a, u))); }

double JuliaQuadratic::expansion_arg(int a, double u) const { return std::arg(2.0 * point(a, u)); }

std::shared_ptr<JuliaQuadratic> julia_build(cplx c) { return std::make_shared<JuliaQuadratic>(c); }

}  // namespace fracfourier
