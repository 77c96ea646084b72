#include "doctest.h"

#include <cmath>

#include "fracfourier/error.hpp"
#include "fracfourier/fourier.hpp"
#include "oracles.hpp"

using namespace fracfourier;

TEST_CASE("Cantor transform equals the infinite-product truncation") {
    AtomicMeasure mu = cantor_atoms(12);
    CHECK(std::fabs(mu.total_mass() - 1) < 1e-15);
    for (double xi : {0.5, 1.0, 7.3, 81.0, 1000.0, 3e4}) {
        cplx a = fourier_transform(mu, xi), b = oracle::cantor_transform(xi, 12);
        CHECK(std::abs(a - b) < 1e-11);
    }
}

TEST_CASE("Cantor transform is invariant under tripling up to the depth error") {
    const int m = 16;
    AtomicMeasure mu = cantor_atoms(m);
    cplx base = fourier_transform(mu, 1.0);
    for (int k = 0; k <= 10; ++k) {
        double xi = std::pow(3.0, k);
        CHECK(std::abs(fourier_transform(mu, xi) - base) <= 2 * M_PI * std::pow(3.0, k - m) + 1e-12);
    }
}

TEST_CASE("Lebesgue atoms vanish at resolved nonzero integers") {
    AtomicMeasure mu = lebesgue_atoms(10);
    for (int m = 1; m < 1024; m += 37) CHECK(std::abs(fourier_transform(mu, m)) < 1e-12);
    CHECK(std::abs(fourier_transform(mu, 1024.0) - 1.0) < 1e-9);
}

TEST_CASE("|transform| is bounded by the mass") {
    AtomicMeasure mu = cantor_atoms(8);
    auto grid = FrequencyGrid::dyadic(0, 10, 3);
    for (cplx z : fourier_transform_grid(mu, grid)) CHECK(std::abs(z) <= 1 + 1e-12);
}

TEST_CASE("frequency grids") {
    auto g = FrequencyGrid::dyadic(2, 4, 2);
    CHECK(g.size() == 6);
    CHECK(g.values[0] == 4.0);
    CHECK(g.octave[5] == 4);
    auto e = FrequencyGrid::explicit_values({1, 3, 9, 27}, 3.0);
    CHECK(e.octave == std::vector<int>{0, 1, 2, 3});
    CHECK_THROWS_AS(FrequencyGrid::explicit_values({2, 1}), Error);
}

TEST_CASE("decay fit recovers a planted power law") {
    auto g = FrequencyGrid::dyadic(0, 12, 1);
    std::vector<double> mod;
    for (double v : g.values) mod.push_back(3.0 * std::pow(v, -0.4));
    DecayReport r = fit_decay(g, mod, 2, 10, 0.0);
    REQUIRE(r.rho.has_value());
    CHECK(std::fabs(*r.rho - 0.4) < 1e-12);
    CHECK(r.r_squared > 1 - 1e-12);
}

TEST_CASE("affine phase reduces to the transform") {
    AtomicMeasure mu = cantor_atoms(10);
    const double a = 2.5, b = 0.3;
    for (double xi : {3.0, 40.0, 700.0}) {
        PhaseValue v = phase_pushforward(
            mu, [&](cplx z) { return a * z.real() + b; }, [](cplx) { return 1.0; }, xi);
        cplx expect = std::polar(1.0, xi * b) * fourier_transform(mu, -xi * a / (2 * M_PI));
        CHECK(std::abs(v.value - expect) < 1e-12);
    }
}

TEST_CASE("sum-product probe matches exact integer phases") {
    for (int m : {5, 6, 7}) {
        double h = std::ldexp(1.0, -m);
        CHECK(std::fabs(sum_product_probe(h, 3).modulus - oracle::sum_product_modulus(h, 3)) < 1e-12);
        CHECK(std::fabs(sum_product_probe(h, 2).modulus - oracle::sum_product_modulus(h, 2)) < 1e-12);
        CHECK(std::fabs(sum_product_probe(h, 1).modulus - 1) < 1e-12);
    }
    CHECK(sum_product_support(0.125).size() == 5);
}

TEST_CASE("multiplicative convolution") {
    AtomicMeasure a = uniform_atoms({0.5, 1.0}), b = uniform_atoms({0.5, 1.0});
    AtomicMeasure c = mult_convolution(a, b);
    CHECK(std::fabs(c.total_mass() - 1) < 1e-15);
    // 0.25, 0.5 (twice, merged), 1
    CHECK(c.size() == 3);
    CHECK(c.x(1) == 0.5);
    CHECK(c.weights[1] == doctest::Approx(0.5));
    for (double xi : {1.0, 3.7, 10.0}) {
        cplx direct = 0;
        for (double x : {0.5, 1.0})
            for (double y : {0.5, 1.0}) direct += 0.25 * std::polar(1.0, -2 * M_PI * xi * x * y);
        CHECK(std::abs(fourier_transform(c, xi) - direct) < 1e-14);
    }
}

TEST_CASE("energy integral of two atoms") {
    AtomicMeasure mu = uniform_atoms({0.0, 0.25});
    EnergyResult e = energy_integral(mu, 0.5);
    CHECK(e.value == doctest::Approx(2 * 0.25 * std::pow(0.25, -0.5)));
    AtomicMeasure dup = uniform_atoms({0.0, 0.0, 0.5});
    CHECK_THROWS_AS(energy_integral(dup, 0.5), Error);
    CHECK(energy_integral(dup, 0.5, true).coincident_pairs == 1);
}

TEST_CASE("regularity exponent of the Cantor measure") {
    AtomicMeasure mu = cantor_atoms(14);
    RegularityResult r = regularity_exponent(mu, {1e-3, 3e-3, 1e-2, 3e-2, 1e-1});
    CHECK(std::fabs(r.exponent - std::log(2.0) / std::log(3.0)) < 0.05);
}

TEST_CASE("box counting of Cantor atoms gives log 2 / log 3") {
    AtomicMeasure mu = cantor_atoms(16);
    std::vector<double> pts(mu.coords.begin(), mu.coords.end());
    CHECK(std::fabs(oracle::box_count_slope(pts, 4, 18) - std::log(2.0) / std::log(3.0)) < 0.05);
}
