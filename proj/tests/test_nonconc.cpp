#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "fracfourier/nonconc.hpp"

using namespace fracfourier;

namespace {

// chain rule along G_i = g_{a_i} o ... o g_{a_1}, a_1 the top bit
double derivative_by_chain(const DoublingPerturbation& f, const PeriodicFunction& Phi, std::size_t word, int n, double x) {
    double y = x, dy = 1, total = 0;
    for (int i = 1; i <= n; ++i) {
        int a = static_cast<int>((word >> (n - i)) & 1u);
        dy *= f.g_prime(a, y);
        y = f.g(a, y);
        total += Phi.d1(y) * dy;
    }
    return total;
}

double collisions_brute(const std::vector<double>& v, double s) {
    double c = 0;
    for (double a : v)
        for (double b : v)
            if (std::fabs(a - b) <= s) c += 1;
    return c;
}

}  // namespace

TEST_CASE("Birkhoff-sum derivatives follow the chain rule") {
    auto f = build_doubling("cos", 0.05);
    const PeriodicFunction& Phi = f->Phi();
    for (int n : {1, 4, 7}) {
        for (double x : {0.05, 0.5, 0.93}) {
            auto v = birkhoff_derivative_values(*f, Phi, n, x);
            REQUIRE(v.size() == (std::size_t(1) << n));
            for (std::size_t w = 0; w < v.size(); ++w) CHECK(std::fabs(v[w] - derivative_by_chain(*f, Phi, w, n, x)) < 1e-12);
        }
    }
}

TEST_CASE("UNI certificate for the perturbed doubling map") {
    auto f = build_doubling("cos", 0.05);
    UniCertificate c = certify_uni(*f, f->Phi(), 8, 256);
    REQUIRE(c.found);
    CHECK(c.c0 > 0);
    CHECK(c.tail <= c.c0 / 4);
    for (const UniScan& s : c.scans) CHECK(s.c0_certified <= s.c0_hat);
}

TEST_CASE("tree bound") {
    CHECK(tree_gamma(3) == doctest::Approx(std::log(7.0 / 8.0) / (3 * std::log(0.25))));
    std::vector<double> v{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
    TreeBound t = tree_bound_check(v, 3, 0.15, 0.3, 1, 1.0);
    CHECK(t.fraction == doctest::Approx(3.0 / 8.0));
    auto f = build_doubling("cos", 0.05);
    UniCertificate c = certify_uni(*f, f->Phi(), 8, 256);
    REQUIRE(c.found);
    for (double a : {-0.3, 0.0, 0.2})
        for (double s : {1e-3, 1e-2, 1e-1}) CHECK(tree_bound_check(*f, f->Phi(), 10, s, a, 0.3, c.N, c.c0).pass);
}

TEST_CASE("collision counts") {
    std::vector<double> v{0.0, 0.01, 0.015, 0.4, 0.41, 0.9, 0.3};
    for (double s : {0.0, 0.005, 0.01, 0.1, 1.0}) CHECK(collision_count(v, s) == collisions_brute(v, s));
    auto f = build_doubling("cos", 0.05);
    ZetaFamily z = zeta_family(*f, 8, {3, 17, 200}, 1);
    CHECK(z.table.size() == 256);
    for (double x : z.table) {
        CHECK(x >= 1 / z.kappa_range);
        CHECK(x <= z.kappa_range);
    }
    CollisionResult r = zeta_collisions(z, {1e-4, 1e-3, 1e-2, 1e-1});
    for (std::size_t i = 1; i < r.count.size(); ++i) CHECK(r.count[i] >= r.count[i - 1]);
    CHECK(r.count.front() >= 256);
}

TEST_CASE("regular word sets") {
    auto f = build_doubling("cos", 0.05);
    PotentialSpec phi = scaled_log_expansion(f, -1.0);
    EquilibriumResult eq = equilibrium(f, phi, 11);
    double prev = 2;
    for (int n : {4, 7, 10}) {
        RegularWordSet r = regular_words(f, eq.data, phi, n, 0.3);
        CHECK(r.members.size() <= r.total);
        CHECK(r.complement_mass >= 0);
        CHECK(r.complement_mass <= 1 + 1e-12);
        CHECK(std::is_sorted(r.members.begin(), r.members.end()));
        prev = std::min(prev, r.complement_mass);
    }
    CHECK(prev < 1);
}

TEST_CASE("QNL probe") {
    auto s = solenoid_build(6, PrecisionPolicy::WorkingPrecision);
    QnlOptions o;
    o.pairs = 2000;
    o.K = 30;
    o.seed = 9;
    o.bootstrap = 50;
    o.depth_check = true;
    std::vector<double> sigma{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    QnlResult a = qnl_probe(*s, sigma, o);
    CHECK(a.pairs == 2000);
    CHECK(a.depth_violations == 0);
    for (std::size_t i = 1; i < a.mass.size(); ++i) CHECK(a.mass[i] >= a.mass[i - 1]);
    QnlResult b = qnl_probe(*s, sigma, o);
    CHECK(a.gamma == b.gamma);
    CHECK(a.mass == b.mass);
    auto pairs = sample_pairs(*s, 50, 20, 40, 3);
    for (const auto& [p, q] : pairs) CHECK(same_piece(p.theta, q.theta));
}
