#include "fracfourier/nonconc.hpp"

#include <algorithm>
#include <cmath>

#include "fracfourier/error.hpp"
#include "fracfourier/fourier.hpp"

namespace fracfourier {

// ---------------------------------------------------------------- UNI

BirkhoffDerivatives::BirkhoffDerivatives(const DoublingPerturbation& sys, const PeriodicFunction& Phi, int n,
                                         const std::vector<double>& xs)
    : n_(n), xs_(xs) {
    require(n >= 1 && n <= 16, "word length must lie in [1, 16]");
    const std::size_t G = xs.size();
    // state per (word, x): G_i x, G_i'(x), D
    std::vector<double> y(xs), d(G, 1.0), D(G, 0.0);
    std::size_t count = 1;
    for (int len = 1; len <= n; ++len) {
        std::vector<double> y2(2 * count * G), d2(2 * count * G), D2(2 * count * G);
        parallel_for(2 * count, [&](std::size_t w) {
            std::size_t parent = w >> 1;
            int a = static_cast<int>(w & 1u);
            for (std::size_t i = 0; i < G; ++i) {
                std::size_t src = parent * G + i, dst = w * G + i;
                double yy = y[src];
                double gp = sys.g_prime(a, yy);
                double ny = sys.g(a, yy);
                double nd = d[src] * gp;
                y2[dst] = ny;
                d2[dst] = nd;
                D2[dst] = D[src] + Phi.d1(ny) * nd;
            }
        });
        y.swap(y2);
        d.swap(d2);
        D.swap(D2);
        count *= 2;
    }
    d_ = std::move(D);
}

std::vector<double> birkhoff_derivative_values(const DoublingPerturbation& sys, const PeriodicFunction& Phi, int n,
                                               double x) {
    BirkhoffDerivatives b(sys, Phi, n, {x});
    std::vector<double> out(b.words());
    for (std::size_t w = 0; w < out.size(); ++w) out[w] = b.row(w)[0];
    return out;
}

double birkhoff_second_derivative_bound(const DoublingPerturbation& sys, const PeriodicFunction& Phi) {
    double k = sys.kappa_max();
    double lip = sys.log_derivative_lipschitz();
    return Phi.sup_d2 * k * k / (1 - k * k) + Phi.sup_d1 * lip * k * k / ((1 - k) * (1 - k));
}

namespace {

UniScan scan_rows(const BirkhoffDerivatives& bd, double C2) {
    UniScan s;
    s.n = bd.n();
    const std::size_t G = bd.xs().size();
    s.grid = static_cast<int>(G);
    const std::size_t W = bd.words();
    auto pair_inf = [&](std::size_t a, std::size_t b, double floor) {
        const double* ra = bd.row(a);
        const double* rb = bd.row(b);
        double m = INFINITY;
        // coarse pass first so hopeless pairs exit early
        const std::size_t stride = 32;
        for (std::size_t off = 0; off < stride; ++off)
            for (std::size_t i = off; i < G; i += stride) {
                m = std::min(m, std::fabs(ra[i] - rb[i]));
                if (m <= floor) return m;
            }
        return m;
    };
    // heuristic seed: extremes of the mean value
    std::size_t lo = 0, hi = 0;
    double mlo = INFINITY, mhi = -INFINITY;
    for (std::size_t w = 0; w < W; ++w) {
        double m = 0;
        for (std::size_t i = 0; i < G; ++i) m += bd.row(w)[i];
        if (m < mlo) mlo = m, lo = w;
        if (m > mhi) mhi = m, hi = w;
    }
    double best = lo == hi ? 0.0 : pair_inf(std::min(lo, hi), std::max(lo, hi), -1.0);
    std::size_t ba = std::min(lo, hi), bb = std::max(lo, hi);
    std::vector<double> row_best(W, -1.0);
    std::vector<std::size_t> row_arg(W, 0), row_count(W, 0);
    parallel_for(W, [&](std::size_t a) {
        double rb = best;
        for (std::size_t b = a + 1; b < W; ++b) {
            ++row_count[a];
            double v = pair_inf(a, b, rb);
            if (v > rb) {
                rb = v;
                row_best[a] = v;
                row_arg[a] = b;
            }
        }
    });
    for (std::size_t a = 0; a < W; ++a) {
        s.pairs_scanned += row_count[a];
        if (row_best[a] > best) {
            best = row_best[a];
            ba = a;
            bb = row_arg[a];
        }
    }
    s.best_a = ba;
    s.best_b = bb;
    s.c0_hat = best;
    double h = 1.0 / static_cast<double>(G);
    s.oscillation = 2 * C2 * h / 2;
    s.c0_certified = s.c0_hat - s.oscillation;
    s.coarse = s.oscillation > 0.1 * s.c0_hat;
    return s;
}

std::vector<double> circle_grid(int G) {
    std::vector<double> xs(static_cast<std::size_t>(G));
    for (int i = 0; i < G; ++i) xs[static_cast<std::size_t>(i)] = static_cast<double>(i) / G;
    return xs;
}

}  // namespace

UniScan uni_scan(const DoublingPerturbation& sys, const PeriodicFunction& Phi, int n, int x_grid) {
    require(n >= 1 && n <= 12, "uni_scan needs 1 <= n <= 12");
    require(x_grid >= 8, "x grid too small");
    BirkhoffDerivatives bd(sys, Phi, n, circle_grid(x_grid));
    return scan_rows(bd, birkhoff_second_derivative_bound(sys, Phi));
}

UniCertificate certify_uni(const DoublingPerturbation& sys, const PeriodicFunction& Phi, int n_max, int x_grid) {
    UniCertificate c;
    c.kappa_max = sys.kappa_max();
    for (int n = 1; n <= n_max; ++n) {
        UniScan s = uni_scan(sys, Phi, n, x_grid);
        c.scans.push_back(s);
        double tail = 2 * Phi.sup_d1 * std::pow(c.kappa_max, n + 1) / (1 - c.kappa_max);
        if (s.c0_certified > 0 && tail <= s.c0_certified / 4) {
            c.N = n;
            c.c0 = s.c0_certified;
            c.tail = tail;
            c.found = true;
            break;
        }
    }
    return c;
}

double tree_gamma(int N, double kappa_minus) {
    require(N >= 1, "N must be >= 1");
    return std::log(1 - std::ldexp(1.0, -N)) / (N * std::log(kappa_minus));
}

TreeBound tree_bound_check(const std::vector<double>& v, int n, double sigma, double a, int N, double c0,
                           double kappa_minus) {
    require(sigma > 0 && c0 > 0, "sigma and c0 must be positive");
    TreeBound t;
    auto lo = std::lower_bound(v.begin(), v.end(), a - sigma);
    auto hi = std::upper_bound(v.begin(), v.end(), a + sigma);
    t.fraction = static_cast<double>(hi - lo) / static_cast<double>(v.size());
    t.gamma = tree_gamma(N, kappa_minus);
    t.bound = std::pow(4 * sigma / c0, t.gamma) + std::pow(kappa_minus, t.gamma * (n - N));
    t.pass = t.fraction <= t.bound;
    return t;
}

TreeBound tree_bound_check(const DoublingPerturbation& sys, const PeriodicFunction& Phi, int n, double sigma, double a,
                           double x0, int N, double c0) {
    require(n >= 1 && n <= 14, "tree bound needs 1 <= n <= 14");
    auto v = birkhoff_derivative_values(sys, Phi, n, x0);
    std::sort(v.begin(), v.end());
    return tree_bound_check(v, n, sigma, a, N, c0);
}

// ---------------------------------------------------------------- regular words

RegularWordSet regular_words(SystemPtr sys, const EquilibriumData& eq, const PotentialSpec& phi, int n, double eps) {
    require(n >= 1 && eq.depth >= n + 1, "equilibrium depth must be >= n + 1");
    require(eps > 0, "eps must be positive");
    PotentialSpec tau{"log|f'|", 1.0, [sys](int a, double u) { return sys->log_expansion(a, u); }};
    PotentialSpec pn = normalized_from(sys, eq, phi);
    auto t1 = word_tree(*sys, n + 1, &tau);
    auto t2 = word_tree(*sys, n + 1, &pn);
    const WordLevel& L1 = t1.back();
    const WordLevel& L2 = t2.back();
    const CylinderLevel& cw = eq.level(n + 1);
    if (cw.codes != L1.code) fail(ErrorKind::Contract, "cylinder table and word tree disagree");
    RegularWordSet r;
    r.eps = eps;
    r.n = n;
    r.lambda = eq.lyapunov;
    r.delta = eq.dimension;
    r.total = L1.code.size();
    CompensatedSum out;
    for (std::size_t i = 0; i < L1.code.size(); ++i) {
        double st = L1.birkhoff[i], sp = L2.birkhoff[i];
        bool ok = std::fabs(st / n - r.lambda) < eps && std::fabs(sp / st + r.delta) < eps;
        if (ok)
            r.members.push_back(L1.code[i]);
        else
            out.add(cw.weights[i]);
    }
    r.complement_mass = out.value();
    return r;
}

// ---------------------------------------------------------------- zeta collisions

ZetaFamily zeta_family(const DoublingPerturbation& sys, int n, const std::vector<int>& A, int j) {
    require(j >= 1 && j < static_cast<int>(A.size()), "zeta index out of range");
    ZetaFamily z;
    z.n = n;
    z.j = j;
    z.A = A;
    z.table = zeta_values(sys, n, static_cast<std::uint32_t>(A[static_cast<std::size_t>(j - 1)]),
                          static_cast<std::uint32_t>(A[static_cast<std::size_t>(j)]));
    z.nominal = std::ldexp(1.0, n);
    z.normalization = "4^n";
    for (double v : z.table) z.kappa_range = std::max({z.kappa_range, v, 1.0 / v});
    return z;
}

double collision_count(std::vector<double> v, double sigma) {
    std::sort(v.begin(), v.end());
    std::size_t lo = 0, hi = 0;
    double total = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        while (v[i] - v[lo] > sigma) ++lo;
        if (hi < i) hi = i;
        while (hi + 1 < v.size() && v[hi + 1] - v[i] <= sigma) ++hi;
        total += static_cast<double>(hi - lo + 1);
    }
    return total;
}

CollisionResult zeta_collisions(const ZetaFamily& family, const std::vector<double>& sigma) {
    CollisionResult r;
    r.sigma = sigma;
    const double N2 = static_cast<double>(family.table.size()) * static_cast<double>(family.table.size());
    double gamma = INFINITY;
    for (double s : sigma) {
        require(s >= 0, "sigma must be >= 0");
        double c = collision_count(family.table, s);
        r.count.push_back(c);
        if (s > 0 && s < 1) gamma = std::min(gamma, std::log(c / N2) / std::log(s));
    }
    r.gamma = std::isfinite(gamma) ? std::max(0.0, gamma) : 0.0;
    return r;
}

// ---------------------------------------------------------------- QNL

std::vector<std::pair<CodedPoint, CodedPoint>> sample_pairs(const CircleExpandingMap& f, std::size_t count,
                                                            std::size_t K, int forward_depth, std::uint64_t seed) {
    std::vector<std::pair<CodedPoint, CodedPoint>> out(count);
    parallel_for(count, [&](std::size_t i) {
        CounterRng rng(seed, i);
        for (int attempt = 0; attempt < 64; ++attempt) {
            int c = static_cast<int>(rng.below(2));
            auto draw = [&]() {
                CodedPoint p;
                double t = 0;
                std::vector<int> fb(static_cast<std::size_t>(forward_depth));
                for (int& b : fb) b = static_cast<int>(rng.below(2));
                for (int k = forward_depth - 1; k >= 0; --k) t = f.inverse(fb[static_cast<std::size_t>(k)], t);
                p.theta = f.inverse(c, t);
                p.bits.resize(K);
                for (int& b : p.bits) b = static_cast<int>(rng.below(2));
                return p;
            };
            CodedPoint p = draw();
            CodedPoint q = draw();
            if (same_piece(p.theta, q.theta)) {
                out[i] = {std::move(p), std::move(q)};
                return;
            }
        }
        fail(ErrorKind::Convergence, "could not draw a pair inside one depth-1 piece");
    });
    return out;
}

QnlResult qnl_probe(const CircleExpandingMap& f, const std::vector<double>& sigma, const QnlOptions& o) {
    require(!sigma.empty() && o.pairs >= 10, "qnl needs sigma values and pairs");
    auto pairs = sample_pairs(f, o.pairs, o.K, o.forward_depth, o.seed);
    std::vector<double> absd(pairs.size()), tails(pairs.size()), change(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
        DeltaValue d = solenoid_delta(f, pairs[i].first, pairs[i].second, o.K);
        absd[i] = std::fabs(d.value);
        tails[i] = d.tail_bound;
        if (o.depth_check) {
            // same pair with K extra backward bits
            CounterRng ext(o.seed ^ 0xdeb7deb7ULL, i);
            CodedPoint p = pairs[i].first, q = pairs[i].second;
            for (std::size_t k = 0; k < o.K; ++k) p.bits.push_back(static_cast<int>(ext.below(2)));
            for (std::size_t k = 0; k < o.K; ++k) q.bits.push_back(static_cast<int>(ext.below(2)));
            DeltaValue d2 = solenoid_delta(f, p, q, 2 * o.K);
            change[i] = std::fabs(d2.value - d.value) - d.tail_bound;
        }
    });
    QnlResult r;
    r.pairs = pairs.size();
    r.sigma = sigma;
    r.max_tail = *std::max_element(tails.begin(), tails.end());
    r.max_abs_delta = *std::max_element(absd.begin(), absd.end());
    if (o.depth_check) {
        r.depth_checked = true;
        r.depth_excess = *std::max_element(change.begin(), change.end());
        for (double c : change) r.depth_violations += c > 0 ? 1 : 0;
    }
    for (double s : sigma)
        if (s < r.max_tail) fail(ErrorKind::Domain, "sigma below the truncation resolution of Delta");

    auto masses = [&](const std::vector<double>& sorted) {
        std::vector<double> m;
        for (double s : sigma)
            m.push_back(static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), s) - sorted.begin()) /
                        static_cast<double>(sorted.size()));
        return m;
    };
    auto slope = [&](const std::vector<double>& m, double* r2) {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < sigma.size(); ++i)
            if (m[i] > 0 && sigma[i] > 0) {
                x.push_back(std::log(sigma[i]));
                y.push_back(std::log(m[i]));
            }
        if (x.size() < 2) return 0.0;
        LinearFit fl = fit_line(x, y);
        if (r2) *r2 = fl.r_squared;
        return fl.slope;
    };
    std::vector<double> sorted = absd;
    std::sort(sorted.begin(), sorted.end());
    r.mass = masses(sorted);
    r.gamma = slope(r.mass, &r.r_squared);

    std::vector<double> boot(static_cast<std::size_t>(std::max(0, o.bootstrap)));
    parallel_for(boot.size(), [&](std::size_t b) {
        CounterRng rng(o.seed ^ 0xb007b007ULL, b);
        std::vector<double> s(absd.size());
        for (double& x : s) x = absd[rng.below(absd.size())];
        std::sort(s.begin(), s.end());
        boot[b] = slope(masses(s), nullptr);
    });
    if (!boot.empty()) {
        std::sort(boot.begin(), boot.end());
        auto q = [&](double p) {
            std::size_t i = static_cast<std::size_t>(std::floor(p * static_cast<double>(boot.size() - 1)));
            return boot[i];
        };
        r.boot_lo = q(0.025);
        r.boot_hi = q(0.975);
    }
    return r;
}

}  // namespace fracfourier
