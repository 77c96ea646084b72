#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "fracfourier/hypgeom.hpp"
#include "oracles.hpp"

using namespace fracfourier;

namespace {

std::vector<cplx> sample_points() {
    std::vector<cplx> v;
    CounterRng rng(17);
    for (int i = 0; i < 40; ++i) v.push_back(std::polar(0.97 * std::sqrt(rng.uniform()), kTwoPi * rng.uniform()));
    return v;
}

std::shared_ptr<SchottkyGroup> two_generators(double length) {
    return std::make_shared<SchottkyGroup>(std::vector<SchottkyGenerator>{{0.0, length}, {kPi / 2, length}});
}

}  // namespace

TEST_CASE("translations match the closed Moebius form") {
    for (cplx b : sample_points()) {
        MoebiusMap T = hyperbolic_translation(b);
        CHECK(std::abs(T.apply(cplx(0, 0)) - b) < 1e-12);
        for (cplx z : {cplx(0.1, -0.2), cplx(-0.5, 0.3), cplx(0.0, 0.8)})
            CHECK(std::abs(T.apply(z) - oracle::translate(b, z)) < 1e-10 * (1 + T.norm()));
        CHECK(T.q_defect() < 1e-10 * T.norm() * T.norm());
    }
}

TEST_CASE("distances, Busemann functions and visual distances") {
    auto pts = sample_points();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        cplx x = pts[i], y = pts[i + 1];
        CHECK(std::fabs(hyperbolic_distance(x, y) - oracle::disk_distance(x, y)) < 1e-9);
        double xi = 0.37 * static_cast<double>(i);
        CHECK(std::fabs(busemann(xi, x, y) - oracle::busemann_limit(xi, x, y)) < 1e-6);
        double eta = xi + 1.1;
        CHECK(std::fabs(visual_distance(x, xi, eta) - oracle::visual_angle(x, xi, eta)) < 1e-10);
        // change of base point distorts visual distance by at most e^{d(x,y)}
        double r = visual_distance(x, xi, eta) / visual_distance(y, xi, eta);
        double d = hyperbolic_distance(x, y);
        CHECK(r <= std::exp(d) * (1 + 1e-12));
        CHECK(r >= std::exp(-d) * (1 - 1e-12));
    }
}

TEST_CASE("isometries preserve distance and compose") {
    MoebiusMap a = MoebiusMap::boost(0.3, 1.2), b = MoebiusMap::boost(2.0, 0.7) * MoebiusMap::rotation(0.4);
    for (cplx x : sample_points()) {
        cplx y(0.2, 0.1);
        CHECK(std::fabs(hyperbolic_distance(a.apply(x), a.apply(y)) - hyperbolic_distance(x, y)) < 1e-9);
        CHECK(std::abs((a * b).apply(x) - a.apply(b.apply(x))) < 1e-10);
        CHECK(std::abs(a.inverse().apply(a.apply(x)) - x) < 1e-10);
    }
    CHECK(std::fabs(a.kappa() - 1.2) < 1e-12);
}

TEST_CASE("Gibbs cocycle and gap map agree with their truncated limits") {
    for (cplx x : sample_points()) {
        double xi = std::arg(x) + 1.0;
        TruncatedValue t = gibbs_cocycle_truncated(0.6, xi, x, cplx(0.1, 0.0));
        CHECK(std::fabs(gibbs_cocycle(0.6, xi, x, cplx(0.1, 0.0)) - t.value) <= t.tail_bound + 1e-9);
    }
    for (double eta : {0.3, 1.0, 2.5}) {
        TruncatedValue g = gap_truncated(0.55, 0.0, eta);
        CHECK(std::fabs(gap_closed_form(0.55, 0.0, eta) - g.value) <= g.tail_bound + 1e-12);
    }
}

TEST_CASE("shadows from the origin") {
    Arc a = shadow(cplx(0, 0), std::polar(0.9, 1.0), 0.5);
    CHECK(std::fabs(a.center - 1.0) < 1e-12);
    double d = hyperbolic_distance(cplx(0, 0), std::polar(0.9, 1.0));
    CHECK(std::fabs(a.half_width - std::asin(std::sinh(0.5) / std::sinh(d))) < 1e-12);
    CHECK(shadow(cplx(0, 0), cplx(0.1, 0), 1.0).full);
}

TEST_CASE("contraction constant is stable across scales") {
    std::vector<double> cs;
    for (double L : {3.0, 5.0, 7.0}) cs.push_back(contraction_lemma(MoebiusMap::boost(0.4, L), 4.0).c);
    auto [lo, hi] = std::minmax_element(cs.begin(), cs.end());
    CHECK(*hi / *lo < 1.2);
}

TEST_CASE("Schottky group combinatorics") {
    auto g = two_generators(2.5);
    CHECK(g->letters() == 4);
    CHECK(g->arc_gap() > 0);
    for (int n = 1; n <= 5; ++n) {
        auto w = g->reduced_words(n);
        CHECK(w.size() == g->reduced_count(n));
        CHECK(w.size() == 4 * static_cast<std::size_t>(std::pow(3, n - 1)));
        for (const auto& word : w)
            for (std::size_t i = 1; i < word.size(); ++i) CHECK(word[i] != SchottkyGroup::inverse_letter(word[i - 1]));
    }
    SUBCASE("letters map the complement of the inverse arc into their own arc") {
        for (int a = 0; a < 4; ++a) {
            const Arc& own = g->arc(a);
            const Arc& inv = g->arc(SchottkyGroup::inverse_letter(a));
            for (int j = 0; j < 200; ++j) {
                double th = -kPi + kTwoPi * j / 200;
                if (inv.contains(th)) continue;
                CHECK(own.contains(g->letter_map(a).boundary(th)));
            }
        }
    }
    SUBCASE("word maps are products of letters") {
        for (const auto& w : g->reduced_words(4)) {
            MoebiusMap m;
            for (int a : w) m = m * g->letter_map(a);
            const Mat3& A = m.matrix();
            const Mat3& B = g->word_map(w).matrix();
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) CHECK(std::fabs(A[i][j] - B[i][j]) < 1e-10 * m.norm());
        }
    }
}

TEST_CASE("Patterson-Sullivan measure") {
    auto g = two_generators(2.5);
    PsMeasure ps = ps_measure(g, 8, 1024);
    CHECK(ps.delta > 0);
    CHECK(ps.delta < 1);
    CHECK(std::fabs(ps.atoms.total_mass() - 1) < 1e-10);
    CHECK(std::fabs(ps.delta - ps.root.delta) < 1e-3);
    for (double th : ps.angles) {
        bool inside = false;
        for (int a = 0; a < g->letters(); ++a) inside = inside || g->arc(a).contains(th);
        CHECK(inside);
    }
    ShadowRatios s = shadow_ratios(*g, ps, 3, 1.0);
    CHECK(s.words == g->reduced_count(3));
    CHECK(s.min_ratio > 0);
    CHECK(std::isfinite(s.C));
}

TEST_CASE("stationary synthesis balances its mass") {
    auto g = two_generators(3.0);
    PsMeasure ps = ps_measure(g, 8, 1024);
    StationaryParams p;
    p.n_max = 2;
    StationarySynthesis st = stationary_synthesis(*g, ps, p);
    CHECK(st.bound_ok);
    CHECK(st.mass_identity_defect < 1e-4);
    for (const NuEntry& e : st.nu) CHECK(e.weight > 0);
    CHECK(st.nu_total <= 1 + 1e-12);
    std::vector<std::pair<MoebiusMap, double>> nu;
    for (const NuEntry& e : st.nu) nu.emplace_back(g->word_map(e.word), e.weight);
    StationaryCheck chk = check_stationary(nu, ps, 16);
    CHECK(chk.per_mode.size() == 17);
    CHECK(chk.discrepancy <= st.residual + 0.05);
}

TEST_CASE("BMS sampling is reproducible") {
    auto g = two_generators(2.5);
    PsMeasure ps = ps_measure(g, 7, 1024);
    BmsSample a = bms_sample(ps, 500, 4), b = bms_sample(ps, 500, 4);
    CHECK(a.atoms.coords == b.atoms.coords);
    CHECK(std::fabs(a.atoms.total_mass() - 1) < 1e-12);
    CHECK(a.rejected_mass <= 0.5);
}
