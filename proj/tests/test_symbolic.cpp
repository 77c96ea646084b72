#include "doctest.h"

#include <cmath>

#include "fracfourier/symbolic.hpp"
#include "fracfourier/systems.hpp"

using namespace fracfourier;

namespace {

// brute force: every word over the alphabet, filtered by the matrix
std::size_t count_by_filter(const TransitionMatrix& m, int n) {
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(m.size());
    std::size_t ok = 0;
    for (std::size_t c = 0; c < total; ++c)
        if (Word::from_code(c, m.size(), n).admissible(m)) ++ok;
    return ok;
}

}  // namespace

TEST_CASE("mixing power of small matrices") {
    CHECK(TransitionMatrix::full(3).stored_mixing_power() == 1);
    TransitionMatrix golden({{1, 1}, {1, 0}});
    CHECK(golden.mixing());
    CHECK(mixing_power(golden) == 2);
    TransitionMatrix swap({{0, 1}, {1, 0}});
    CHECK_FALSE(swap.mixing());
}

TEST_CASE("admissible words match the filtered enumeration") {
    TransitionMatrix golden({{1, 1}, {1, 0}});
    TransitionMatrix three({{1, 1, 0}, {0, 1, 1}, {1, 0, 1}});
    for (int n = 1; n <= 9; ++n) {
        auto g = admissible_words(golden, n);
        CHECK(g.size() == count_by_filter(golden, n));
        auto t = admissible_words(three, n);
        CHECK(t.size() == count_by_filter(three, n));
        for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i - 1] < t[i]);
    }
    // Fibonacci counts for the golden mean shift
    std::size_t a = 2, b = 3;
    for (int n = 3; n <= 12; ++n) {
        std::size_t c = a + b;
        a = b;
        b = c;
        CHECK(admissible_words(golden, n).size() == b);
    }
}

TEST_CASE("word codes round trip") {
    for (std::uint64_t c = 0; c < 243; ++c) {
        Word w = Word::from_code(c, 3, 5);
        CHECK(w.length() == 5);
        CHECK(w.code(3) == c);
    }
    Word w{{2, 0, 1}};
    CHECK(w.code(3) == 2 * 9 + 0 * 3 + 1);
    CHECK(w.str() == "201");
}

TEST_CASE("join drops the shared letter") {
    Word a{{0, 1}}, b{{1, 2}}, c{{2, 0}};
    CHECK(a.leads_to(b));
    CHECK_FALSE(a.leads_to(c));
    CHECK(a.join(b) == Word{{0, 1, 2}});
    CHECK(a.join(b).join(c) == Word{{0, 1, 2, 0}});
}

TEST_CASE("block star and sharp products") {
    // n = 1: words of length 2
    BlockPair p;
    p.A = {Word{{0, 1}}, Word{{0, 1}}};
    p.B = {Word{{1, 0}}};
    CHECK(p.matched());
    CHECK(p.star() == Word{{0, 1, 0, 1}});
    CHECK(p.sharp() == Word{{0, 1, 0}});
    p.B = {Word{{0, 0}}};
    CHECK_FALSE(p.matched());
}

TEST_CASE("Birkhoff sums count binary digits on the halves system") {
    auto sys = LinearIFS::halves();
    PotentialSpec zeros = locally_constant({1.0, 0.0});
    for (double u : {0.3, 0.71, 0.123456}) {
        for (int a : {0, 1}) {
            double x = 0.5 * (a + u);
            double direct = 0;
            double y = x;
            for (int k = 0; k < 20; ++k) {
                if (y < 0.5) direct += 1;
                y = 2 * y - std::floor(2 * y);
            }
            CHECK(birkhoff_sum(*sys, zeros, {a, u}, 20) == doctest::Approx(direct));
        }
    }
    CHECK(birkhoff_sum(*sys, constant_potential(0.25), {0, 0.4}, 12) == doctest::Approx(3.0));
}
