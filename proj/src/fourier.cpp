#include "fracfourier/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fracfourier/error.hpp"

namespace fracfourier {

namespace {

// fractional part of a*b with the rounding error of the product recovered
double frac_product(double a, double b) {
    double p = a * b;
    double e = std::fma(a, b, -p);
    double f = p - std::floor(p);
    return f + e;
}

cplx unit(double turns) { return std::polar(1.0, -kTwoPi * turns); }

}  // namespace

FrequencyGrid FrequencyGrid::dyadic(int j_min, int j_max, int per_octave, double base) {
    require(j_max >= j_min && per_octave >= 1 && base > 1, "bad dyadic grid");
    FrequencyGrid g;
    g.base = base;
    g.scheme = "dyadic(" + std::to_string(j_min) + "," + std::to_string(j_max) + "," + std::to_string(per_octave) + ")";
    for (int j = j_min; j <= j_max; ++j)
        for (int i = 0; i < per_octave; ++i) {
            double v = i == 0 ? std::pow(base, j) : std::pow(base, j + static_cast<double>(i) / per_octave);
            g.values.push_back(v);
            g.octave.push_back(j);
        }
    return g;
}

FrequencyGrid FrequencyGrid::explicit_values(std::vector<double> v, double base) {
    FrequencyGrid g;
    g.base = base;
    g.scheme = "explicit";
    for (std::size_t i = 0; i < v.size(); ++i) {
        require(v[i] > 0, "explicit frequencies must be positive");
        if (i) require(v[i] > v[i - 1], "explicit frequencies must be strictly increasing");
        // octave from the exponent, nudged so exact powers land in their own octave
        g.octave.push_back(static_cast<int>(std::floor(std::log(v[i]) / std::log(base) + 1e-9)));
    }
    g.values = std::move(v);
    return g;
}

cplx fourier_transform(const AtomicMeasure& mu, double xi) {
    CompensatedComplexSum s;
    for (std::size_t i = 0; i < mu.size(); ++i) s.add(mu.weights[i] * unit(frac_product(xi, mu.x(i))));
    return s.value();
}

cplx fourier_transform(const AtomicMeasure& mu, double xi1, double xi2) {
    if (mu.dim == 1) return fourier_transform(mu, xi1);
    CompensatedComplexSum s;
    for (std::size_t i = 0; i < mu.size(); ++i)
        s.add(mu.weights[i] * unit(frac_product(xi1, mu.x(i, 0)) + frac_product(xi2, mu.x(i, 1))));
    return s.value();
}

std::vector<cplx> fourier_transform_grid(const AtomicMeasure& mu, const FrequencyGrid& grid) {
    std::vector<cplx> out(grid.size());
    double c = std::cos(grid.direction), s = std::sin(grid.direction);
    parallel_for(grid.size(), [&](std::size_t i) {
        double xi = grid.values[i];
        out[i] = mu.dim == 1 ? fourier_transform(mu, xi) : fourier_transform(mu, xi * c, xi * s);
    });
    return out;
}

PhaseValue phase_pushforward(const AtomicMeasure& mu, const AtomFunction& psi, const AtomFunction& chi, double xi,
                             double psi_lipschitz, double chi_sup) {
    CompensatedComplexSum s;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        cplx z = mu.z(i);
        s.add(mu.weights[i] * chi(z) * std::polar(1.0, xi * psi(z)));
    }
    return {s.value(), std::fabs(xi) * psi_lipschitz * mu.diameter_bound * chi_sup};
}

DecayReport fit_decay(const FrequencyGrid& grid, const std::vector<double>& moduli, int lo, int hi,
                      double diameter_bound, const std::vector<double>* truncation) {
    require(moduli.size() == grid.size(), "moduli and grid differ in size");
    require(hi >= lo, "empty fit window");
    DecayReport r;
    r.grid = grid;
    r.moduli = moduli;
    r.window_lo = lo;
    r.window_hi = hi;
    std::vector<double> x, y;
    for (int j = lo; j <= hi; ++j) {
        double sup = -1, bound = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid.octave[i] != j) continue;
            sup = std::max(sup, moduli[i]);
            double b = truncation ? (*truncation)[i] : kTwoPi * grid.values[i] * diameter_bound;
            bound = std::max(bound, b);
        }
        if (sup < 0) fail(ErrorKind::Domain, "fit window octave " + std::to_string(j) + " has no frequencies");
        r.octaves.push_back(j);
        r.octave_sup.push_back(sup);
        r.truncation_bound = std::max(r.truncation_bound, bound);
        if (!(sup > bound)) r.truncation_limited = true;
        x.push_back(j * std::log(grid.base));
        y.push_back(std::log(sup));
    }
    if (r.octaves.size() < 3) r.truncation_limited = true;
    if (!r.truncation_limited) {
        LinearFit f = fit_line(x, y);
        r.rho = -f.slope;
        r.intercept = f.intercept;
        r.r_squared = f.r_squared;
    }
    return r;
}

EnergyResult energy_integral(const AtomicMeasure& mu, double beta, bool merge_coincident) {
    require(beta > 0 && beta < mu.dim, "energy exponent must lie in (0, dim)");
    const std::size_t n = mu.size();
    std::vector<double> rows(n, 0.0);
    std::vector<std::size_t> hits(n, 0);
    parallel_for(n, [&](std::size_t i) {
        CompensatedSum s;
        cplx zi = mu.z(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            double d = std::abs(zi - mu.z(j));
            if (d == 0) {
                ++hits[i];
                continue;
            }
            s.add(mu.weights[j] * std::exp(-beta * std::log(d)));
        }
        rows[i] = mu.weights[i] * s.value();
    });
    EnergyResult r;
    r.coincident_pairs = std::accumulate(hits.begin(), hits.end(), std::size_t(0));
    if (r.coincident_pairs && !merge_coincident)
        fail(ErrorKind::Domain, std::to_string(r.coincident_pairs) + " coincident atom pairs in energy integral");
    r.value = 2 * compensated_sum(rows);
    return r;
}

AtomicMeasure uniform_atoms(const std::vector<double>& points) {
    AtomicMeasure m;
    m.dim = 1;
    for (double p : points) m.push({p, 0}, 1.0 / static_cast<double>(points.size()));
    return m;
}

AtomicMeasure mult_convolution(const AtomicMeasure& mu, const AtomicMeasure& nu) {
    require(mu.dim == 1 && nu.dim == 1, "multiplicative convolution needs real atoms");
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (mu.x(i) == 0) fail(ErrorKind::Domain, "zero atom in support");
    for (std::size_t i = 0; i < nu.size(); ++i)
        if (nu.x(i) == 0) fail(ErrorKind::Domain, "zero atom in support");
    std::vector<std::pair<double, double>> prod;
    prod.reserve(mu.size() * nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j) prod.emplace_back(mu.x(i) * nu.x(j), mu.weights[i] * nu.weights[j]);
    std::stable_sort(prod.begin(), prod.end(), [](auto& a, auto& b) { return a.first < b.first; });
    AtomicMeasure out;
    out.dim = 1;
    out.label = "mult(" + mu.label + "," + nu.label + ")";
    std::size_t i = 0;
    while (i < prod.size()) {
        CompensatedSum w;
        std::size_t j = i;
        for (; j < prod.size() && prod[j].first == prod[i].first; ++j) w.add(prod[j].second);
        out.push({prod[i].first, 0}, w.value());
        i = j;
    }
    return out;
}

std::vector<double> sum_product_support(double h) {
    require(h > 0 && h <= 0.25, "h must lie in (0, 1/4]");
    long lo = static_cast<long>(std::ceil(0.5 / h - 1e-9)), hi = static_cast<long>(std::floor(1.0 / h + 1e-9));
    std::vector<double> s;
    for (long j = lo; j <= hi; ++j) s.push_back(static_cast<double>(j) * h);
    return s;
}

SumProductValue sum_product_probe(double h, int k, Kernel kernel, std::size_t cap) {
    require(k >= 1, "k must be >= 1");
    std::vector<double> S = sum_product_support(h);
    SumProductValue r;
    r.support = S.size();
    double terms = std::pow(static_cast<double>(S.size()), k);
    if (terms > static_cast<double>(cap)) fail(ErrorKind::SizeCap, "sum-product direct sum exceeds the term cap");
    r.terms = static_cast<std::size_t>(terms);
    const double eta = 1.0 / h;
    const std::size_t m = S.size();
    // outer index over the first k-1 factors, inner over the last
    std::size_t outer = r.terms / m;
    std::vector<cplx> rows(outer);
    parallel_for(outer, [&](std::size_t o) {
        double p = 1.0;
        std::size_t rem = o;
        for (int f = 0; f < k - 1; ++f) {
            p *= S[rem % m];
            rem /= m;
        }
        CompensatedComplexSum s;
        for (std::size_t j = 0; j < m; ++j) {
            double x = p * S[j];
            s.add(kernel == Kernel::Transform ? unit(frac_product(eta, x)) : std::polar(1.0, eta * x));
        }
        rows[o] = s.value();
    });
    CompensatedComplexSum t;
    for (const cplx& z : rows) t.add(z);
    r.value = t.value() / terms;
    r.modulus = std::abs(r.value);
    return r;
}

std::vector<double> zeta_values(const DoublingPerturbation& sys, int n, std::uint32_t a_prev, std::uint32_t a_next) {
    require(n >= 1 && n <= 20, "block length must lie in [1, 20]");
    auto bit = [n](std::uint32_t code, int i) { return static_cast<int>((code >> (n - 1 - i)) & 1u); };
    double x = 0.0;
    for (int i = n - 1; i >= 0; --i) x = sys.g(bit(a_next, i), x);
    const std::uint32_t count = 1u << n;
    std::vector<double> out(count);
    const double scale = std::ldexp(1.0, 2 * n);
    parallel_for(count, [&](std::size_t bi) {
        std::uint32_t b = static_cast<std::uint32_t>(bi);
        double z = x, d = 1.0;
        for (int i = n - 1; i >= 0; --i) {
            d *= sys.g_prime(bit(b, i), z);
            z = sys.g(bit(b, i), z);
        }
        for (int i = n - 1; i >= 0; --i) {
            d *= sys.g_prime(bit(a_prev, i), z);
            z = sys.g(bit(a_prev, i), z);
        }
        out[bi] = scale * d;
    });
    return out;
}

ExpSumResult exp_sum_probe(const DoublingPerturbation& sys, int n, int k, double eta,
                           const std::vector<std::vector<int>>& fixed_blocks, int random_blocks, std::uint64_t seed) {
    require(k >= 1 && n >= 1, "need k, n >= 1");
    if (k * n > 24) fail(ErrorKind::SizeCap, "exp-sum direct sum needs k*n <= 24");
    ExpSumResult r;
    const std::uint32_t count = 1u << n;
    for (const auto& A : fixed_blocks) {
        require(static_cast<int>(A.size()) == k + 1, "each A-block needs k+1 words");
        for (int a : A) require(a >= 0 && static_cast<std::uint32_t>(a) < count, "A-block word out of range");
        r.blocks.push_back(A);
    }
    CounterRng rng(seed, 0x5eed);
    for (int i = 0; i < random_blocks; ++i) {
        std::vector<int> A;
        for (int j = 0; j <= k; ++j) A.push_back(static_cast<int>(rng.below(count)));
        r.blocks.push_back(A);
    }
    require(!r.blocks.empty(), "no A-blocks requested");
    r.zeta_min = INFINITY;
    r.zeta_max = -INFINITY;
    const double norm = std::ldexp(1.0, -k * n);
    for (const auto& A : r.blocks) {
        std::vector<std::vector<double>> z(static_cast<std::size_t>(k));
        for (int j = 1; j <= k; ++j) {
            z[static_cast<std::size_t>(j - 1)] =
                zeta_values(sys, n, static_cast<std::uint32_t>(A[static_cast<std::size_t>(j - 1)]),
                            static_cast<std::uint32_t>(A[static_cast<std::size_t>(j)]));
            for (double v : z[static_cast<std::size_t>(j - 1)]) {
                r.zeta_min = std::min(r.zeta_min, v);
                r.zeta_max = std::max(r.zeta_max, v);
            }
        }
        std::size_t outer = std::size_t(1) << (n * (k - 1));
        std::vector<cplx> rows(outer);
        parallel_for(outer, [&](std::size_t o) {
            double p = 1.0;
            std::size_t rem = o;
            for (int f = 0; f < k - 1; ++f) {
                p *= z[static_cast<std::size_t>(f)][rem & (count - 1)];
                rem >>= n;
            }
            CompensatedComplexSum s;
            for (double v : z[static_cast<std::size_t>(k - 1)]) s.add(std::polar(1.0, eta * p * v));
            rows[o] = s.value();
        });
        CompensatedComplexSum t;
        for (const cplx& c : rows) t.add(c);
        r.moduli.push_back(std::abs(t.value()) * norm);
    }
    r.mean_modulus = compensated_sum(r.moduli) / static_cast<double>(r.moduli.size());
    return r;
}

RegularityResult regularity_exponent(const AtomicMeasure& mu, const std::vector<double>& radii) {
    require(!radii.empty() && mu.size() > 0, "regularity needs atoms and radii");
    RegularityResult r;
    r.radii = radii;
    for (double rad : radii)
        if (rad < mu.diameter_bound) fail(ErrorKind::Domain, "radius below the atomic resolution");
    const std::size_t n = mu.size();
    if (mu.dim == 1) {
        std::vector<std::size_t> ord(n);
        std::iota(ord.begin(), ord.end(), 0);
        std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return mu.x(a) < mu.x(b); });
        std::vector<double> xs(n), pre(n + 1, 0.0);
        CompensatedSum s;
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = mu.x(ord[i]);
            s.add(mu.weights[ord[i]]);
            pre[i + 1] = s.value();
        }
        for (double rad : radii) {
            double best = 0;
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t a = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), xs[i] - rad) - xs.begin());
                std::size_t b = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), xs[i] + rad) - xs.begin());
                best = std::max(best, pre[b] - pre[a]);
            }
            r.sup_mass.push_back(best);
        }
    } else {
        // centers on a deterministic stride; masses exact over all atoms.
        // atoms bucketed on a grid of cell = largest radius, so only 3x3 cells are scanned
        std::size_t stride = std::max<std::size_t>(1, n / 4096);
        std::vector<std::size_t> centers;
        for (std::size_t i = 0; i < n; i += stride) centers.push_back(i);
        const double cell = *std::max_element(radii.begin(), radii.end());
        double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
        for (std::size_t j = 0; j < n; ++j) {
            cplx z = mu.z(j);
            x0 = std::min(x0, z.real()), x1 = std::max(x1, z.real());
            y0 = std::min(y0, z.imag()), y1 = std::max(y1, z.imag());
        }
        const auto nx = static_cast<std::int64_t>((x1 - x0) / cell) + 1;
        const auto ny = static_cast<std::int64_t>((y1 - y0) / cell) + 1;
        auto cell_of = [&](cplx z) {
            return std::pair<std::int64_t, std::int64_t>{static_cast<std::int64_t>((z.real() - x0) / cell),
                                                         static_cast<std::int64_t>((z.imag() - y0) / cell)};
        };
        std::vector<std::int64_t> key(n);
        for (std::size_t j = 0; j < n; ++j) {
            auto [cx, cy] = cell_of(mu.z(j));
            key[j] = cx * ny + cy;
        }
        std::vector<std::size_t> ord(n);
        std::iota(ord.begin(), ord.end(), 0);
        std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
        std::vector<std::int64_t> sorted_key(n);
        for (std::size_t j = 0; j < n; ++j) sorted_key[j] = key[ord[j]];
        std::vector<std::vector<double>> mass(radii.size(), std::vector<double>(centers.size()));
        parallel_for(centers.size(), [&](std::size_t c) {
            cplx z = mu.z(centers[c]);
            auto [cx, cy] = cell_of(z);
            std::vector<CompensatedSum> s(radii.size());
            for (std::int64_t dx = -1; dx <= 1; ++dx) {
                if (cx + dx < 0 || cx + dx >= nx) continue;
                for (std::int64_t dy = -1; dy <= 1; ++dy) {
                    if (cy + dy < 0 || cy + dy >= ny) continue;
                    std::int64_t k = (cx + dx) * ny + cy + dy;
                    auto lo = std::lower_bound(sorted_key.begin(), sorted_key.end(), k);
                    auto hi = std::upper_bound(lo, sorted_key.end(), k);
                    for (auto it = lo; it != hi; ++it) {
                        std::size_t j = ord[static_cast<std::size_t>(it - sorted_key.begin())];
                        double d = std::abs(mu.z(j) - z);
                        for (std::size_t q = 0; q < radii.size(); ++q)
                            if (d <= radii[q]) s[q].add(mu.weights[j]);
                    }
                }
            }
            for (std::size_t q = 0; q < radii.size(); ++q) mass[q][c] = s[q].value();
        });
        for (std::size_t q = 0; q < radii.size(); ++q) r.sup_mass.push_back(*std::max_element(mass[q].begin(), mass[q].end()));
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        lx.push_back(std::log(radii[i]));
        ly.push_back(std::log(r.sup_mass[i]));
    }
    LinearFit f = fit_line(lx, ly);
    r.exponent = f.slope;
    r.r_squared = f.r_squared;
    r.degenerate = n == 1 || radii.size() < 2 || std::fabs(f.slope) < 1e-9;
    return r;
}

AtomicMeasure lebesgue_atoms(int depth) {
    require(depth >= 0 && depth <= 26, "Lebesgue depth must lie in [0, 26]");
    AtomicMeasure m;
    m.dim = 1;
    m.depth = depth;
    m.label = "lebesgue";
    std::size_t N = std::size_t(1) << depth;
    double w = std::ldexp(1.0, -depth);
    m.coords.resize(N);
    m.weights.assign(N, w);
    for (std::size_t j = 0; j < N; ++j) m.coords[j] = static_cast<double>(j) * w;
    m.diameter_bound = w;
    return m;
}

AtomicMeasure cantor_atoms(int depth) {
    require(depth >= 0 && depth <= 30, "Cantor depth must lie in [0, 30]");
    AtomicMeasure m;
    m.dim = 1;
    m.depth = depth;
    m.label = "cantor";
    std::size_t N = std::size_t(1) << depth;
    double scale = std::pow(3.0, -depth);
    m.coords.resize(N);
    m.weights.assign(N, std::ldexp(1.0, -depth));
    for (std::size_t c = 0; c < N; ++c) {
        std::uint64_t v = 0;
        for (int i = depth - 1; i >= 0; --i) v = v * 3 + 2 * ((c >> i) & 1u);
        m.coords[c] = static_cast<double>(v) * scale;
    }
    m.diameter_bound = scale;
    return m;
}

}  // namespace fracfourier
