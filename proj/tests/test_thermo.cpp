#include "doctest.h"

#include <cmath>

#include "fracfourier/systems.hpp"
#include "fracfourier/thermo.hpp"
#include "oracles.hpp"

using namespace fracfourier;

TEST_CASE("pressure of the zero potential on the full 2-shift is ln 2") {
    auto sys = LinearIFS::halves();
    PressureResult p = pressure(*sys, constant_potential(0.0));
    CHECK(p.converged);
    CHECK(std::fabs(p.value - std::log(2.0)) < 1e-12);
}

TEST_CASE("pressure shifts by constants") {
    auto sys = build_doubling("cos", 0.05);
    PotentialSpec phi = scaled_log_expansion(sys, -0.6);
    double p0 = pressure(*sys, phi).value;
    for (double c : {-1.3, 0.2, 2.5}) CHECK(std::fabs(pressure(*sys, add(phi, constant_potential(c))).value - p0 - c) < 1e-8);
}

TEST_CASE("geometric potential at s = 1 has zero pressure for the perturbed doubling map") {
    for (double d : {0.0, 0.05, 0.1}) {
        auto sys = build_doubling("cos", d);
        CHECK(std::fabs(pressure(*sys, scaled_log_expansion(sys, -1.0)).value) < 1e-8);
    }
}

TEST_CASE("linear IFS pressure and dimension match the Moran equation") {
    auto sys = std::make_shared<LinearIFS>("two", std::vector<LinearIFS::Piece>{{0.0, 0.3}, {0.5, 0.4}});
    for (double s : {0.3, 0.7, 1.0}) {
        double expect = std::log(std::pow(0.3, s) + std::pow(0.4, s));
        CHECK(std::fabs(pressure(*sys, scaled_log_expansion(sys, -s)).value - expect) < 1e-9);
    }
    DimensionResult d = dimension_root(*sys, 14, 1e-9);
    CHECK(d.monotone);
    CHECK(std::fabs(d.delta - oracle::moran_root({0.3, 0.4})) < 1e-6);
    CHECK(std::fabs(dimension_root(*LinearIFS::cantor(), 14, 1e-9).delta - std::log(2.0) / std::log(3.0)) < 1e-6);
}

TEST_CASE("pressure is convex and decreasing along -s log f'") {
    auto sys = build_doubling("cos", 0.08);
    std::vector<double> P;
    for (int i = 0; i <= 6; ++i) P.push_back(pressure(*sys, scaled_log_expansion(sys, -0.25 * i)).value);
    for (std::size_t i = 1; i < P.size(); ++i) CHECK(P[i] < P[i - 1]);
    for (std::size_t i = 1; i + 1 < P.size(); ++i) CHECK(P[i - 1] + P[i + 1] - 2 * P[i] >= -1e-9);
}

TEST_CASE("Bernoulli derivative matches the closed form") {
    auto sys = LinearIFS::halves();
    const std::vector<double> p{0.3, 0.7}, v{1.0, -0.5};
    PotentialSpec phi = locally_constant({std::log(p[0]), std::log(p[1])});
    PotentialSpec psi = locally_constant(v);
    PressureDerivativeCheck chk(sys, phi, psi, 12);
    const double exact = oracle::bernoulli_derivative(p, v, 0.0);
    CHECK(std::fabs(chk.integral() - exact) < 1e-6);
    for (double t : {1e-2, 1e-3}) {
        PressureDerivative d = chk.at(t);
        double fd = (oracle::bernoulli_pressure(p, v, t) - oracle::bernoulli_pressure(p, v, 0.0)) / t;
        CHECK(std::fabs(d.finite_difference - fd) < 1e-9);
        CHECK(d.discrepancy < 2 * t);
    }
}

TEST_CASE("equilibrium weights") {
    SUBCASE("doubling with delta 0 gives exact dyadic weights") {
        auto sys = build_doubling("cos", 0.0);
        EquilibriumResult r = equilibrium(sys, constant_potential(0.0), 10);
        for (int d = 1; d <= 10; ++d)
            for (double w : r.data.level(d).weights) CHECK(w == std::ldexp(1.0, -d));
    }
    SUBCASE("Bernoulli weights are the product measure") {
        auto sys = LinearIFS::halves();
        EquilibriumResult r = equilibrium(sys, locally_constant({std::log(0.3), std::log(0.7)}), 8);
        const CylinderLevel& lv = r.data.level(8);
        for (std::size_t i = 0; i < lv.codes.size(); ++i) {
            Word w = Word::from_code(lv.codes[i], 2, 8);
            double expect = 1;
            for (int a : w.letters) expect *= a == 0 ? 0.3 : 0.7;
            CHECK(std::fabs(lv.weights[i] / expect - 1) < 1e-9);
        }
    }
    SUBCASE("weights refine and sum to one") {
        auto sys = build_doubling("cos", 0.05);
        EquilibriumResult r = equilibrium(sys, scaled_log_expansion(sys, -0.6), 9);
        for (int d = 1; d <= 9; ++d) {
            double s = 0;
            for (double w : r.data.level(d).weights) s += w;
            CHECK(std::fabs(s - 1) < 1e-12);
        }
        const auto& a = r.data.level(8).weights;
        const auto& b = r.data.level(9).weights;
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - b[2 * i] - b[2 * i + 1]) < 1e-12);
        CHECK(std::fabs(r.atoms.total_mass() - 1) < 1e-12);
    }
}

TEST_CASE("normalized potential fixes the constant function") {
    auto sys = build_doubling("cos", 0.05);
    NormalizedPotential n = normalize_potential(sys, scaled_log_expansion(sys, -0.6));
    CHECK(n.max_defect < 1e-6);
    std::vector<double> one(2 * 4096, 1.0);
    auto img = transfer_apply(*sys, n.phi, one, 3);
    for (double v : img) CHECK(std::fabs(v - 1) < 1e-5);
}

TEST_CASE("large deviations of digit counts follow the binomial tail") {
    auto sys = LinearIFS::halves();
    EquilibriumResult r = equilibrium(sys, constant_potential(0.0), 17);
    std::vector<int> ns;
    for (int n = 6; n <= 16; ++n) ns.push_back(n);
    const double eps = 0.15;
    LargeDeviationResult ld = large_deviation_probe(*sys, r.data, locally_constant({1.0, 0.0}), eps, ns);
    CHECK(std::fabs(ld.mean - 0.5) < 1e-15);
    for (std::size_t i = 0; i < ns.size(); ++i) CHECK(std::fabs(ld.mass[i] - oracle::binomial_tail(ns[i], eps)) < 1e-14);
    CHECK(ld.rate > 0);
}

TEST_CASE("twisted transfer operator") {
    auto sys = build_doubling("cos", 0.05);
    NormalizedPotential n = normalize_potential(sys, scaled_log_expansion(sys, -1.0), 2048);
    SUBCASE("no twist keeps the norm at one") {
        TwistedResult t = twisted_contraction_probe(sys, n.phi, 0.0, 0, 20, 5, 20, 2048);
        for (double v : t.norms) CHECK(std::fabs(v - 1) < 1e-6);
    }
    SUBCASE("linear map does not contract") {
        auto lin = build_doubling("cos", 0.0);
        TwistedResult t = twisted_contraction_probe(lin, scaled_log_expansion(lin, -1.0), 40.0, 0, 30, 10, 30, 2048);
        CHECK(std::fabs(t.rho - 1) < 1e-6);
    }
    SUBCASE("the perturbation contracts at a large frequency") {
        TwistedResult t = twisted_contraction_probe(sys, n.phi, 40.0, 0, 40, 10, 40, 2048);
        CHECK(t.rho < 1.0);
        CHECK(std::fabs(fit_rho(t.norms, 10, 25) - fit_rho(t.norms, 25, 40)) < 0.05);
    }
}
