#include "doctest.h"

#include <cmath>

#include "fracfourier/error.hpp"
#include "fracfourier/systems.hpp"

using namespace fracfourier;

namespace {

double circle_gap(double a, double b) {
    double d = std::fmod(std::fabs(a - b), 1.0);
    return std::min(d, 1.0 - d);
}

}  // namespace

TEST_CASE("linear IFS branches invert the forward map") {
    for (auto sys : {LinearIFS::cantor(), LinearIFS::halves()}) {
        CHECK(sys->right_inverse_residual() < 1e-14);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (double u : {0.1, 0.25, 0.9}) {
                    ChartPoint p = sys->forward(a, sys->branch(a, b, u));
                    CHECK(p.piece == b);
                    CHECK(std::fabs(p.u - u) < 1e-14);
                }
    }
    auto c = LinearIFS::cantor();
    CHECK(c->point(1, 0.0).real() == doctest::Approx(2.0 / 3.0));
    CHECK(c->log_expansion(0, 0.5) == doctest::Approx(std::log(3.0)));
}

TEST_CASE("perturbed doubling map") {
    auto f = build_doubling("cos", 0.05);
    CHECK(f->lift(0.0) == 0.0);
    CHECK(std::fabs(f->lift(1.0) - 2.0) < 1e-12);
    CHECK(f->right_inverse_residual() < 1e-12);
    SUBCASE("derivative agrees with a central difference") {
        for (double x : {0.1, 0.37, 0.8}) {
            double h = 1e-5;
            double fd = (f->lift(x + h) - f->lift(x - h)) / (2 * h);
            CHECK(std::fabs(fd - f->derivative(x)) < 1e-7);
        }
    }
    SUBCASE("inverse branches") {
        for (int a : {0, 1})
            for (double t : {0.0, 0.2, 0.5, 0.99}) {
                double x = f->g(a, t);
                CHECK(std::fabs(f->lift(x) - (t + a)) < 1e-12);
                CHECK(std::fabs(f->g_prime(a, t) * f->derivative(x) - 1) < 1e-9);
            }
    }
    SUBCASE("expansion bounds") {
        CHECK(f->inf_derivative() > 1.0);
        CHECK(f->inverse_contraction() < 1.0);
        CHECK(f->nonconstant_flag());
    }
    SUBCASE("conjugacy is increasing and fixes the endpoints") {
        double prev = -1;
        for (int i = 0; i <= 64; ++i) {
            double y = conjugacy_point(*f, i / 64.0 * (1 - 1e-12), 50);
            CHECK(y > prev);
            prev = y;
        }
        CHECK(std::fabs(conjugacy_point(*f, 0.0, 50)) < 1e-12);
    }
}

TEST_CASE("delta zero is the plain doubling map") {
    auto f = build_doubling("sin2", 0.0);
    for (double x : {0.0, 0.3, 0.77}) {
        CHECK(std::fabs(f->lift(x) - 2 * x) < 1e-14);
        CHECK(std::fabs(f->derivative(x) - 2) < 1e-14);
    }
}

TEST_CASE("periodic function registry") {
    for (const auto& name : PeriodicFunction::registry()) {
        PeriodicFunction P = PeriodicFunction::by_name(name);
        for (double x : {0.1, 0.45, 0.9}) {
            CHECK(std::fabs(P.f(x + 1) - P.f(x)) < 1e-12);
            double h = 1e-5;
            CHECK(std::fabs((P.f(x + h) - P.f(x - h)) / (2 * h) - P.d1(x)) < 1e-6);
        }
    }
    CHECK_THROWS_AS(PeriodicFunction::by_name("no-such"), Error);
}

TEST_CASE("Julia set coding conjugates the quadratic map") {
    auto J = julia_build(cplx(-0.1, 0.1));
    for (int a : {0, 1})
        for (double u : {0.1, 0.5, 0.8}) {
            cplx z = J->point(a, u);
            ChartPoint p = J->forward(a, u);
            CHECK(std::abs(J->point(p.piece, p.u) - (z * z + J->c())) < 1e-9);
            CHECK(std::fabs(J->log_expansion(a, u) - std::log(std::abs(2.0 * z))) < 1e-9);
        }
    auto circle = julia_build(cplx(0, 0));
    CHECK(std::abs(circle->at_angle(0.125) - std::polar(1.0, 2 * M_PI * 0.125)) < 1e-12);
}

TEST_CASE("solenoid base map") {
    auto s = solenoid_build(6, PrecisionPolicy::WorkingPrecision);
    CHECK(s->lift(0.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::fabs(s->lift(1.0) - 2.0) < 1e-12);
    CHECK(s->inverse_contraction() < 1.0);
    SUBCASE("inverse branches are continuous right inverses") {
        // regression: a converged Newton step on the bracket end returned the midpoint
        for (int a : {0, 1}) {
            double prev = s->inverse(a, 0.0);
            for (int i = 0; i <= 4000; ++i) {
                double t = i / 4000.0 * (1 - 1e-9);
                double x = s->inverse(a, t);
                CHECK(std::fabs(s->lift(x) - (t + a)) < 1e-12);
                CHECK(x >= prev);
                CHECK(x - prev < 1e-3);
                prev = x;
            }
        }
    }
    SUBCASE("periodic closed forms") {
        for (int N = 2; N <= 6; ++N) {
            PeriodicData d = solenoid_periodic(*s, N);
            CHECK(d.return_error < 1e-10);
            CHECK(std::fabs(d.lyapunov_closed - d.lyapunov_orbit) < 1e-9);
            CHECK(std::fabs(d.det_product / d.det_formula - 1) < 1e-9);
        }
    }
}

TEST_CASE("temporal distance") {
    auto s = solenoid_build(6, PrecisionPolicy::WorkingPrecision);
    CodedPoint p{0.2, {0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 1, 0, 1, 1, 0, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 0, 1, 1}};
    CodedPoint q{0.31, {1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0}};
    CHECK(same_piece(p.theta, q.theta));
    CHECK(solenoid_delta(*s, p, p, 25).value == 0.0);
    DeltaValue a = solenoid_delta(*s, p, q, 25), b = solenoid_delta(*s, q, p, 25);
    CHECK(std::fabs(a.value - b.value) < 1e-12);
    DeltaValue deep = solenoid_delta(*s, p, q, 30);
    CHECK(std::fabs(deep.value - a.value) <= a.tail_bound);
    SolenoidSystem flat(6, PrecisionPolicy::WorkingPrecision, 0.0, false);
    CHECK(std::fabs(solenoid_delta(flat, p, q, 25).value) < 1e-12);
    SUBCASE("backward orbit maps forward to the start") {
        auto th = backward_orbit(*s, p.theta, p.bits, 10);
        double y = th.back();
        for (int k = 0; k < 10; ++k) y = s->map(y);
        CHECK(circle_gap(y, p.theta) < 1e-9);
    }
}
