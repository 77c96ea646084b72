#include "fracfourier/thermo.hpp"

#include <algorithm>
#include <cmath>

#include "fracfourier/error.hpp"

namespace fracfourier {

void AtomicMeasure::push(cplx p, double w) {
    coords.push_back(p.real());
    if (dim > 1) coords.push_back(p.imag());
    weights.push_back(w);
}

double AtomicMeasure::total_mass() const { return compensated_sum(weights); }

// ---------------------------------------------------------------- operator

TransferOperator::TransferOperator(const BranchSystem& sys, const PotentialSpec& phi, int grid_points)
    : k_(sys.piece_count()), G_(grid_points) {
    require(G_ >= 4, "transfer grid needs at least 4 points per piece");
    const TransitionMatrix& m = sys.transitions();
    kernel_.resize(size());
    parallel_for(size(), [&](std::size_t idx) {
        int b = static_cast<int>(idx) / G_, j = static_cast<int>(idx) % G_;
        double v = node(j);
        auto& row = kernel_[idx];
        for (int a = 0; a < k_; ++a) {
            if (!m.allowed(a, b)) continue;
            Entry e;
            e.a = a;
            e.u = sys.branch(a, b, v);
            double pos = std::clamp(e.u, 0.0, 1.0) * (G_ - 1);
            e.i0 = std::clamp(static_cast<int>(std::floor(pos)), 0, G_ - 2);
            e.t = std::clamp(pos - e.i0, 0.0, 1.0);
            e.weight = std::exp(phi(a, e.u));
            e.tau = sys.log_expansion(a, e.u);
            e.arg = sys.expansion_arg(a, e.u);
            row.push_back(e);
        }
    });
}

double TransferOperator::interpolate(const std::vector<double>& h, int piece, double u) const {
    double pos = std::clamp(u, 0.0, 1.0) * (G_ - 1);
    int i0 = std::clamp(static_cast<int>(std::floor(pos)), 0, G_ - 2);
    double t = std::clamp(pos - i0, 0.0, 1.0);
    std::size_t base = static_cast<std::size_t>(piece * G_ + i0);
    return (1 - t) * h[base] + t * h[base + 1];
}

std::vector<double> TransferOperator::apply(const std::vector<double>& h) const {
    std::vector<double> out(size());
    parallel_for(size(), [&](std::size_t idx) {
        double s = 0;
        for (const Entry& e : kernel_[idx]) {
            std::size_t base = static_cast<std::size_t>(e.a * G_ + e.i0);
            s += e.weight * ((1 - e.t) * h[base] + e.t * h[base + 1]);
        }
        out[idx] = s;
    });
    return out;
}

std::vector<double> TransferOperator::apply_adjoint(const std::vector<double>& m) const {
    std::vector<double> out(size(), 0.0);
    for (std::size_t idx = 0; idx < size(); ++idx) {
        double mi = m[idx];
        if (mi == 0) continue;
        for (const Entry& e : kernel_[idx]) {
            std::size_t base = static_cast<std::size_t>(e.a * G_ + e.i0);
            out[base] += mi * e.weight * (1 - e.t);
            out[base + 1] += mi * e.weight * e.t;
        }
    }
    return out;
}

std::vector<cplx> TransferOperator::apply_twisted(const std::vector<cplx>& v, double xi, int l,
                                                  const std::vector<double>* h, double lambda) const {
    std::vector<cplx> out(size());
    parallel_for(size(), [&](std::size_t idx) {
        cplx s = 0;
        for (const Entry& e : kernel_[idx]) {
            std::size_t base = static_cast<std::size_t>(e.a * G_ + e.i0);
            double w = e.weight;
            if (h) w *= ((1 - e.t) * (*h)[base] + e.t * (*h)[base + 1]) / (lambda * (*h)[idx]);
            cplx twist = std::polar(1.0, xi * e.tau + l * e.arg);
            s += w * twist * ((1 - e.t) * v[base] + e.t * v[base + 1]);
        }
        out[idx] = s;
    });
    return out;
}

EigenData leading_eigen(const TransferOperator& L, double tol, int max_iter) {
    EigenData d;
    const std::size_t n = L.size();
    std::vector<double> h(n, 1.0), ratio(n);
    for (int it = 1; it <= max_iter; ++it) {
        std::vector<double> Lh = L.apply(h);
        for (std::size_t i = 0; i < n; ++i) ratio[i] = Lh[i] / h[i];
        std::vector<double> tmp = ratio;
        std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(n / 2), tmp.end());
        double lam = tmp[n / 2];
        double res = 0, hmax = 0;
        for (std::size_t i = 0; i < n; ++i) {
            res = std::max(res, std::fabs(Lh[i] - lam * h[i]));
            hmax = std::max(hmax, Lh[i]);
        }
        res /= lam;
        for (std::size_t i = 0; i < n; ++i) h[i] = Lh[i] / hmax;
        d.eigenvalue = lam;
        d.residual_h = res;
        d.iterations = it;
        if (res < tol) break;
    }
    if (!(d.eigenvalue > 0)) fail(ErrorKind::Convergence, "leading eigenvalue not positive");
    for (double x : h)
        if (!(x > 0)) fail(ErrorKind::Convergence, "eigenfunction lost positivity");
    d.h = std::move(h);
    d.pressure = std::log(d.eigenvalue);

    std::vector<double> m(n, 1.0 / static_cast<double>(n));
    for (int it = 1; it <= max_iter; ++it) {
        std::vector<double> Lm = L.apply_adjoint(m);
        double total = compensated_sum(Lm);
        double res = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double next = Lm[i] / total;
            res += std::fabs(next - m[i]);
            m[i] = next;
        }
        d.residual_m = res;
        if (res < tol) break;
    }
    d.m = std::move(m);
    d.converged = d.residual_h < tol && d.residual_m < tol;
    return d;
}

// ---------------------------------------------------------------- pressure

PressureResult extrapolate_pressure(const std::vector<double>& q, double tol) {
    PressureResult r;
    r.sequence = q;
    const int N = static_cast<int>(q.size());
    if (N == 0) fail(ErrorKind::Domain, "empty pressure sequence");
    r.value = q.back();
    r.n_used = N;
    if (N < 4) return r;
    for (int m = 4; m <= N; ++m) {
        const double* s = q.data() + (m - 4);
        double d0 = s[1] - s[0], d1 = s[2] - s[1], d2 = s[3] - s[2];
        double scale = 1.0 + std::fabs(s[3]);
        double est = s[3], err = std::fabs(d2), rate = 0.0;
        if (std::max({std::fabs(d0), std::fabs(d1), std::fabs(d2)}) <= 1e-14 * scale) {
            err = std::fabs(d2);
        } else {
            double r1 = d0 != 0 ? d1 / d0 : 0.0, r2 = d1 != 0 ? d2 / d1 : 0.0;
            double rr = 0.5 * (r1 + r2);
            if (std::isfinite(rr) && std::fabs(rr) < 0.95) {
                std::vector<double> x(4), y(s, s + 4);
                for (int j = 0; j < 4; ++j) x[static_cast<std::size_t>(j)] = std::pow(rr, j);
                LinearFit f = fit_line(x, y);
                est = f.intercept;
                if (std::fabs(rr) < 1e-12) est = s[3];
                err = std::fabs(d2 * rr / (1 - rr));
                rate = rr;
            }
        }
        r.value = est;
        r.n_used = m;
        r.rate = rate;
        if (err < tol) {
            r.converged = true;
            return r;
        }
    }
    return r;
}

PressureResult pressure_from_sums(const std::vector<std::vector<double>>& levels, double tol) {
    require(levels.size() >= 2, "pressure needs at least two word levels");
    std::vector<double> logZ;
    for (const auto& lv : levels) logZ.push_back(log_sum_exp(lv));
    std::vector<double> q;
    for (std::size_t n = 1; n < logZ.size(); ++n) q.push_back(logZ[n] - logZ[n - 1]);
    return extrapolate_pressure(q, tol);
}

PressureResult pressure(const BranchSystem& sys, const PotentialSpec& phi, int n_max, double tol) {
    require(n_max >= 4, "pressure needs n_max >= 4");
    if (!sys.transitions().mixing()) fail(ErrorKind::Domain, "pressure requires a mixing transition matrix");
    auto tree = word_tree(sys, n_max + 1, &phi);
    std::vector<std::vector<double>> sums;
    for (auto& lv : tree) sums.push_back(std::move(lv.birkhoff));
    return pressure_from_sums(sums, tol);
}

NormalizedPotential normalize_potential(SystemPtr sys, const PotentialSpec& phi, int grid_points) {
    auto L = std::make_shared<TransferOperator>(*sys, phi, grid_points);
    NormalizedPotential out;
    out.eigen = leading_eigen(*L);
    if (!out.eigen.converged)
        fail(ErrorKind::Convergence, "eigen iteration did not converge, residual " + std::to_string(out.eigen.residual_h));
    auto h = std::make_shared<std::vector<double>>(out.eigen.h);
    double P = out.eigen.pressure;
    auto pe = phi.eval;
    out.phi.label = "normalized(" + phi.label + ")";
    out.phi.hoelder = phi.hoelder;
    out.phi.eval = [sys, L, h, P, pe](int a, double u) {
        ChartPoint y = sys->forward(a, u);
        return pe(a, u) + std::log(L->interpolate(*h, a, u)) - std::log(L->interpolate(*h, y.piece, y.u)) - P;
    };
    std::vector<double> Lh = L->apply(*h);
    for (std::size_t i = 0; i < Lh.size(); ++i)
        out.max_defect = std::max(out.max_defect, std::fabs(Lh[i] / (out.eigen.eigenvalue * (*h)[i]) - 1.0));
    return out;
}

std::vector<double> transfer_apply(const BranchSystem& sys, const PotentialSpec& phi, const std::vector<double>& h,
                                   int iterations, int grid_points) {
    TransferOperator L(sys, phi, grid_points);
    require(h.size() == L.size(), "grid vector has the wrong size");
    std::vector<double> v = h;
    for (int i = 0; i < iterations; ++i) v = L.apply(v);
    return v;
}

// ---------------------------------------------------------------- equilibrium

double EquilibriumData::weight(const Word& w) const {
    const CylinderLevel& lv = level(static_cast<int>(w.length()));
    std::uint64_t c = w.code(alphabet);
    auto it = std::lower_bound(lv.codes.begin(), lv.codes.end(), c);
    if (it == lv.codes.end() || *it != c) return 0.0;
    return lv.weights[static_cast<std::size_t>(it - lv.codes.begin())];
}

namespace {

struct Bin {
    double u;
    double mass;
};

struct DfsContext {
    const BranchSystem* sys;
    const PotentialSpec* phi;
    const TransferOperator* L;
    const std::vector<double>* h;
    double lambda;
    WeightMode mode;
    int depth;
    int k;
    std::vector<std::uint64_t> kpow;
    // per depth: (code, raw weight, representative product)
    std::vector<std::vector<std::uint64_t>> codes;
    std::vector<std::vector<double>> weight, rep;
};

// state[q] = (chart coordinate, accumulated product); the last slot is the representative
void dfs(DfsContext& c, int len, int first, std::uint64_t code, const std::vector<Bin>& state) {
    double w = 0;
    for (std::size_t q = 0; q + 1 < state.size(); ++q) w += state[q].mass;
    c.codes[static_cast<std::size_t>(len - 1)].push_back(code);
    c.weight[static_cast<std::size_t>(len - 1)].push_back(w);
    c.rep[static_cast<std::size_t>(len - 1)].push_back(state.back().mass);
    if (len == c.depth) return;
    std::vector<Bin> next(state.size());
    for (int a = 0; a < c.k; ++a) {
        if (!c.sys->transitions().allowed(a, first)) continue;
        for (std::size_t q = 0; q < state.size(); ++q) {
            double u = c.sys->branch(a, first, state[q].u);
            double f = std::exp((*c.phi)(a, u)) / c.lambda;
            if (c.mode == WeightMode::Equilibrium)
                f *= c.L->interpolate(*c.h, a, u) / c.L->interpolate(*c.h, first, state[q].u);
            next[q] = {u, state[q].mass * f};
        }
        dfs(c, len + 1, a, static_cast<std::uint64_t>(a) * c.kpow[static_cast<std::size_t>(len)] + code, next);
    }
}

}  // namespace

EquilibriumResult equilibrium(SystemPtr sysp, const PotentialSpec& phi, int depth, const EquilibriumOptions& opts) {
    const BranchSystem& sys = *sysp;
    require(depth >= 1, "equilibrium depth must be >= 1");
    require(opts.bins >= 1 && opts.bins <= opts.grid_points, "bins must lie in [1, grid_points]");
    if (!sys.transitions().mixing()) fail(ErrorKind::Domain, "equilibrium requires a mixing transition matrix");
    const int k = sys.piece_count();
    TransferOperator L(sys, phi, opts.grid_points);
    EigenData eig = leading_eigen(L);
    const int G = opts.grid_points;
    const std::size_t n = L.size();

    EquilibriumResult res;
    EquilibriumData& d = res.data;
    d.pressure = eig.pressure;
    d.grid_points = G;
    d.eigenfunction = eig.h;
    d.depth = depth;
    d.alphabet = k;
    d.mode = opts.mode;
    d.residual = std::max(eig.residual_h, eig.residual_m);
    d.converged = eig.converged;
    d.node_u.resize(static_cast<std::size_t>(G));
    for (int j = 0; j < G; ++j) d.node_u[static_cast<std::size_t>(j)] = L.node(j);

    std::vector<double> nu(n);
    for (std::size_t i = 0; i < n; ++i) nu[i] = eig.m[i] * eig.h[i];
    double nt = compensated_sum(nu);
    for (double& x : nu) x /= nt;
    d.grid_measure = opts.mode == WeightMode::Equilibrium ? nu : eig.m;

    CompensatedSum lyap, iphi;
    for (int a = 0; a < k; ++a)
        for (int j = 0; j < G; ++j) {
            std::size_t i = static_cast<std::size_t>(a * G + j);
            double u = L.node(j);
            ChartPoint y = sys.forward(a, u);
            double pt = phi(a, u) + std::log(eig.h[i]) - std::log(L.interpolate(eig.h, y.piece, y.u)) - eig.pressure;
            lyap.add(nu[i] * sys.log_expansion(a, u));
            iphi.add(nu[i] * pt);
        }
    d.lyapunov = lyap.value();
    d.integral_phi = iphi.value();
    d.dimension = -d.integral_phi / d.lyapunov;

    DfsContext c;
    c.sys = &sys;
    c.phi = &phi;
    c.L = &L;
    c.h = &eig.h;
    c.lambda = eig.eigenvalue;
    c.mode = opts.mode;
    c.depth = depth;
    c.k = k;
    c.kpow.assign(static_cast<std::size_t>(depth) + 1, 1);
    for (int i = 1; i <= depth; ++i) c.kpow[static_cast<std::size_t>(i)] = c.kpow[static_cast<std::size_t>(i - 1)] * static_cast<std::uint64_t>(k);
    c.codes.resize(static_cast<std::size_t>(depth));
    c.weight.resize(static_cast<std::size_t>(depth));
    c.rep.resize(static_cast<std::size_t>(depth));
    const int Q = opts.bins;
    for (int b = 0; b < k; ++b) {
        std::vector<Bin> state;
        for (int q = 0; q < Q; ++q) {
            int lo = static_cast<int>(static_cast<long long>(q) * G / Q), hi = static_cast<int>(static_cast<long long>(q + 1) * G / Q);
            double mass = 0, mom = 0;
            for (int j = lo; j < hi; ++j) {
                double w = d.grid_measure[static_cast<std::size_t>(b * G + j)];
                mass += w;
                mom += w * L.node(j);
            }
            if (mass > 0) state.push_back({mom / mass, mass});
        }
        state.push_back({sys.representative(b), 1.0});
        dfs(c, 1, b, static_cast<std::uint64_t>(b), state);
    }

    // sort the deepest level, renormalize, and sum prefixes for coarser levels
    auto& dc = c.codes[static_cast<std::size_t>(depth - 1)];
    auto& dw = c.weight[static_cast<std::size_t>(depth - 1)];
    std::vector<std::size_t> order(dc.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return dc[x] < dc[y]; });
    CylinderLevel deep;
    deep.depth = depth;
    CompensatedSum total;
    for (std::size_t i : order) {
        deep.codes.push_back(dc[i]);
        deep.weights.push_back(dw[i]);
        total.add(dw[i]);
    }
    d.renormalization = total.value();
    for (double& w : deep.weights) w /= d.renormalization;
    d.levels.resize(static_cast<std::size_t>(depth));
    d.levels[static_cast<std::size_t>(depth - 1)] = deep;
    for (int len = depth - 1; len >= 1; --len) {
        CylinderLevel lv;
        lv.depth = len;
        std::uint64_t div = c.kpow[static_cast<std::size_t>(depth - len)];
        CompensatedSum s;
        for (std::size_t i = 0; i < deep.codes.size(); ++i) {
            std::uint64_t p = deep.codes[i] / div;
            if (!lv.codes.empty() && lv.codes.back() != p) {
                lv.weights.push_back(s.value());
                s = CompensatedSum{};
            }
            if (lv.codes.empty() || lv.codes.back() != p) lv.codes.push_back(p);
            s.add(deep.weights[i]);
        }
        lv.weights.push_back(s.value());
        d.levels[static_cast<std::size_t>(len - 1)] = std::move(lv);
    }

    // Gibbs ratios weight / e^{S_{n-1} phi~(x_a)}
    std::vector<int> gd = opts.gibbs_depths;
    if (gd.empty()) gd.push_back(depth);
    for (int g : gd) {
        require(g >= 1 && g <= depth, "Gibbs depth out of range");
        const auto& codes = c.codes[static_cast<std::size_t>(g - 1)];
        const auto& rep = c.rep[static_cast<std::size_t>(g - 1)];
        const CylinderLevel& lv = d.level(g);
        double worst = 1.0;
        for (std::size_t i = 0; i < codes.size(); ++i) {
            auto it = std::lower_bound(lv.codes.begin(), lv.codes.end(), codes[i]);
            double r = lv.weights[static_cast<std::size_t>(it - lv.codes.begin())] / rep[i];
            worst = std::max({worst, r, 1.0 / r});
        }
        d.gibbs_by_depth.emplace_back(g, worst);
        d.gibbs_constant = std::max(d.gibbs_constant, worst);
    }

    // atoms at g_a(x_{last})
    auto tree = word_tree(sys, depth);
    const WordLevel& wl = tree.back();
    if (wl.code != deep.codes) fail(ErrorKind::Contract, "cylinder table and word tree disagree");
    AtomicMeasure& mu = res.atoms;
    mu.dim = sys.phase_dim();
    mu.depth = depth;
    mu.label = sys.name() + " / " + phi.label;
    for (std::size_t i = 0; i < wl.u.size(); ++i) mu.push(sys.point(wl.first[i], wl.u[i]), deep.weights[i]);
    mu.diameter_bound = level_diameter(sys, tree, depth);
    return res;
}

PotentialSpec normalized_from(SystemPtr sys, const EquilibriumData& eq, const PotentialSpec& phi) {
    auto h = std::make_shared<std::vector<double>>(eq.eigenfunction);
    const int G = eq.grid_points;
    const double P = eq.pressure;
    auto interp = [h, G](int a, double u) {
        double pos = std::clamp(u, 0.0, 1.0) * (G - 1);
        int i0 = std::clamp(static_cast<int>(std::floor(pos)), 0, G - 2);
        double t = std::clamp(pos - i0, 0.0, 1.0);
        std::size_t base = static_cast<std::size_t>(a * G + i0);
        return (1 - t) * (*h)[base] + t * (*h)[base + 1];
    };
    auto pe = phi.eval;
    return {"normalized(" + phi.label + ")", phi.hoelder, [sys, interp, pe, P](int a, double u) {
                ChartPoint y = sys->forward(a, u);
                return pe(a, u) + std::log(interp(a, u)) - std::log(interp(y.piece, y.u)) - P;
            }};
}

double integrate_grid(const BranchSystem& sys, const EquilibriumData& eq, const PotentialSpec& psi) {
    CompensatedSum s;
    const int G = eq.grid_points;
    for (int a = 0; a < sys.piece_count(); ++a)
        for (int j = 0; j < G; ++j)
            s.add(eq.grid_measure[static_cast<std::size_t>(a * G + j)] * psi(a, eq.node_u[static_cast<std::size_t>(j)]));
    return s.value();
}

DimensionResult dimension_root(const BranchSystem& sys, int n_max, double tol) {
    require(n_max >= 4, "dimension root needs n_max >= 4");
    if (!sys.transitions().mixing()) fail(ErrorKind::Domain, "dimension root requires a mixing transition matrix");
    PotentialSpec tau{"log|f'|", 1.0, [&sys](int a, double u) { return sys.log_expansion(a, u); }};
    auto tree = word_tree(sys, n_max + 1, &tau);
    std::vector<double> scratch;
    auto P = [&](double s) {
        std::vector<std::vector<double>> sums;
        for (const auto& lv : tree) {
            scratch.resize(lv.birkhoff.size());
            for (std::size_t i = 0; i < scratch.size(); ++i) scratch[i] = -s * lv.birkhoff[i];
            sums.push_back(scratch);
        }
        return pressure_from_sums(sums, 1e-12).value;
    };
    DimensionResult r;
    double lo = 0, plo = P(0);
    if (!(plo > 0)) fail(ErrorKind::Domain, "bracket failure: P(0) <= 0");
    double hi = 2, phi_ = P(hi);
    while (phi_ > 0) {
        lo = hi;
        plo = phi_;
        hi *= 2;
        phi_ = P(hi);
        if (hi > 1e6) fail(ErrorKind::Convergence, "bracket failure: pressure stays positive");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        double mid = 0.5 * (lo + hi), pm = P(mid);
        ++r.bisection_steps;
        if (pm > plo + 1e-12 || pm < phi_ - 1e-12) r.monotone = false;
        if (pm > 0) {
            lo = mid;
            plo = pm;
        } else {
            hi = mid;
            phi_ = pm;
        }
    }
    r.delta = 0.5 * (lo + hi);
    r.pressure_at_root = P(r.delta);
    if (!r.monotone) fail(ErrorKind::Contract, "pressure not monotone in s during bisection");
    if (std::fabs(r.pressure_at_root) > tol)
        fail(ErrorKind::Convergence, "dimension root pressure residual " + std::to_string(r.pressure_at_root));
    return r;
}

// ---------------------------------------------------------------- probes

LargeDeviationResult large_deviation_probe(const BranchSystem& sys, const EquilibriumData& eq, const PotentialSpec& psi,
                                           double eps, const std::vector<int>& n_list) {
    const int D = eq.depth;
    int nmax = 0;
    for (int n : n_list) {
        require(n >= 1, "n must be >= 1");
        nmax = std::max(nmax, n);
    }
    if (nmax > D - 1) fail(ErrorKind::Domain, "depth insufficient: need depth >= max n + 1");
    auto tree = word_tree(sys, D);
    const CylinderLevel& lv = eq.level(D);
    const std::size_t W = lv.weights.size();
    // psi along the representative orbit: x_a, x_{sigma a}, ...
    std::vector<std::vector<double>> orbit(W, std::vector<double>(static_cast<std::size_t>(nmax)));
    parallel_for(W, [&](std::size_t j) {
        std::size_t idx = j;
        for (int i = 0; i < nmax; ++i) {
            const WordLevel& L = tree[static_cast<std::size_t>(D - 1 - i)];
            orbit[j][static_cast<std::size_t>(i)] = psi(L.first[idx], L.u[idx]);
            idx = L.tail[idx];
        }
    });
    LargeDeviationResult r;
    CompensatedSum mean;
    for (std::size_t j = 0; j < W; ++j) mean.add(lv.weights[j] * orbit[j][0]);
    r.mean = mean.value();
    std::vector<double> xs, ys;
    for (int n : n_list) {
        CompensatedSum mass;
        for (std::size_t j = 0; j < W; ++j) {
            double s = 0;
            for (int i = 0; i < n; ++i) s += orbit[j][static_cast<std::size_t>(i)];
            if (std::fabs(s / n - r.mean) >= eps - 1e-12) mass.add(lv.weights[j]);
        }
        r.n.push_back(n);
        r.mass.push_back(mass.value());
        if (mass.value() > 0) {
            xs.push_back(n);
            ys.push_back(std::log(mass.value()));
        }
    }
    if (xs.size() >= 2) {
        LinearFit f = fit_line(xs, ys);
        r.rate = -f.slope;
        r.r_squared = f.r_squared;
    }
    return r;
}

PressureDerivativeCheck::PressureDerivativeCheck(SystemPtr sys, const PotentialSpec& phi, const PotentialSpec& psi,
                                                 int n_max) {
    auto t1 = word_tree(*sys, n_max + 1, &phi);
    auto t2 = word_tree(*sys, n_max + 1, &psi);
    for (auto& lv : t1) sphi_.push_back(std::move(lv.birkhoff));
    for (auto& lv : t2) spsi_.push_back(std::move(lv.birkhoff));
    p0_ = pressure_from_sums(sphi_, 1e-13).value;
    TransferOperator L(*sys, phi);
    EigenData eig = leading_eigen(L);
    const int G = L.grid_points();
    CompensatedSum s, tot;
    for (int a = 0; a < sys->piece_count(); ++a)
        for (int j = 0; j < G; ++j) {
            std::size_t i = static_cast<std::size_t>(a * G + j);
            double w = eig.m[i] * eig.h[i];
            tot.add(w);
            s.add(w * psi(a, L.node(j)));
        }
    integral_ = s.value() / tot.value();
}

PressureDerivative PressureDerivativeCheck::at(double t) const {
    require(t != 0, "finite-difference step must be nonzero");
    std::vector<std::vector<double>> sums(sphi_.size());
    for (std::size_t L = 0; L < sums.size(); ++L) {
        sums[L].resize(sphi_[L].size());
        for (std::size_t i = 0; i < sums[L].size(); ++i) sums[L][i] = sphi_[L][i] + t * spsi_[L][i];
    }
    PressureDerivative d;
    d.finite_difference = (pressure_from_sums(sums, 1e-13).value - p0_) / t;
    d.integral = integral_;
    d.discrepancy = std::fabs(d.finite_difference - d.integral);
    return d;
}

double fit_rho(const std::vector<double>& norms, int lo, int hi) {
    std::vector<double> x, y;
    for (int n = lo; n <= hi && n < static_cast<int>(norms.size()); ++n) {
        if (!(norms[static_cast<std::size_t>(n)] > 0)) continue;
        x.push_back(n);
        y.push_back(std::log(norms[static_cast<std::size_t>(n)]));
    }
    if (x.size() < 2) return 0.0;
    return std::exp(fit_line(x, y).slope);
}

TwistedResult twisted_contraction_probe(SystemPtr sys, const PotentialSpec& phi, double xi, int l, int n_max,
                                        int window_lo, int window_hi, int grid_points) {
    if (l != 0 && sys->phase_dim() != 2) fail(ErrorKind::Domain, "argument twist l != 0 needs a complex system");
    require(n_max >= 1 && window_lo < window_hi && window_hi <= n_max, "bad twisted-probe window");
    TransferOperator L(*sys, phi, grid_points);
    EigenData eig = leading_eigen(L);
    std::vector<cplx> v(L.size(), cplx(1.0, 0.0));
    TwistedResult r;
    r.norms.push_back(1.0);
    for (int n = 1; n <= n_max; ++n) {
        v = L.apply_twisted(v, xi, l, &eig.h, eig.eigenvalue);
        double m = 0;
        for (const cplx& z : v) m = std::max(m, std::abs(z));
        r.norms.push_back(m);
    }
    std::vector<double> x, y;
    for (int n = window_lo; n <= window_hi; ++n) {
        x.push_back(n);
        y.push_back(std::log(r.norms[static_cast<std::size_t>(n)]));
    }
    LinearFit f = fit_line(x, y);
    r.rho = std::exp(f.slope);
    r.r_squared = f.r_squared;
    return r;
}

}  // namespace fracfourier
