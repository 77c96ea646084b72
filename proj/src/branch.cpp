#include "fracfourier/branch.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fracfourier/error.hpp"

namespace fracfourier {

void BranchSystem::init_bounds(int samples) {
    double lo = INFINITY, hi = 0.0;
    for (int a = 0; a < piece_count(); ++a)
        for (int i = 0; i < samples; ++i) {
            double u = (i + 0.5) / samples;
            double g = std::exp(-log_expansion(a, u));
            lo = std::min(lo, g);
            hi = std::max(hi, g);
        }
    kappa_min_ = lo;
    kappa_max_ = hi;
}

double BranchSystem::right_inverse_residual(int samples) const {
    double worst = 0.0;
    for (int a = 0; a < piece_count(); ++a)
        for (int b = 0; b < piece_count(); ++b) {
            if (!m_.allowed(a, b)) continue;
            for (int i = 0; i < samples; ++i) {
                double v = (i + 0.5) / samples;
                double u = branch(a, b, v);
                ChartPoint y = forward(a, u);
                worst = std::max(worst, std::abs(point(y.piece, y.u) - point(b, v)));
            }
        }
    return worst;
}

PotentialSpec constant_potential(double c) {
    return {"const(" + std::to_string(c) + ")", 1.0, [c](int, double) { return c; }};
}

PotentialSpec scaled_log_expansion(SystemPtr sys, double s) {
    return {std::to_string(s) + "*log|f'|", 1.0, [sys, s](int a, double u) { return s * sys->log_expansion(a, u); }};
}

PotentialSpec add(const PotentialSpec& p, const PotentialSpec& q) {
    auto pe = p.eval, qe = q.eval;
    return {p.label + "+" + q.label, std::min(p.hoelder, q.hoelder), [pe, qe](int a, double u) { return pe(a, u) + qe(a, u); }};
}

PotentialSpec scale(const PotentialSpec& p, double s) {
    auto pe = p.eval;
    return {std::to_string(s) + "*(" + p.label + ")", p.hoelder, [pe, s](int a, double u) { return s * pe(a, u); }};
}

PotentialSpec locally_constant(std::vector<double> v) {
    return {"locally-constant", 1.0, [v](int a, double) { return v[static_cast<std::size_t>(a)]; }};
}

double empirical_hoelder_ratio(const BranchSystem& sys, const PotentialSpec& phi, int samples) {
    double worst = 0.0;
    for (int a = 0; a < sys.piece_count(); ++a)
        for (int i = 0; i < samples; ++i) {
            double u = (i + 0.25) / samples, v = (i + 0.75) / samples;
            double d = std::abs(sys.point(a, u) - sys.point(a, v));
            if (d <= 0) continue;
            worst = std::max(worst, std::fabs(phi(a, u) - phi(a, v)) / std::pow(d, phi.hoelder));
        }
    return worst;
}

std::vector<WordLevel> word_tree(const BranchSystem& sys, int n, const PotentialSpec* phi, std::size_t cap) {
    require(n >= 1, "word tree needs n >= 1");
    const TransitionMatrix& m = sys.transitions();
    const int k = m.size();
    std::vector<WordLevel> levels;
    std::vector<CompensatedSum> acc, next_acc;

    WordLevel l1;
    l1.length = 1;
    for (int b = 0; b < k; ++b) {
        l1.code.push_back(static_cast<std::uint64_t>(b));
        l1.first.push_back(b);
        l1.tail.push_back(0);
        l1.u.push_back(sys.representative(b));
        if (phi) {
            l1.birkhoff.push_back(0.0);
            acc.emplace_back();
        }
    }
    levels.push_back(std::move(l1));

    std::uint64_t kpow = static_cast<std::uint64_t>(k);
    for (int len = 2; len <= n; ++len) {
        const WordLevel& prev = levels.back();
        WordLevel cur;
        cur.length = len;
        std::size_t count = 0;
        for (int a = 0; a < k; ++a)
            for (std::size_t i = 0; i < prev.u.size(); ++i)
                if (m.allowed(a, prev.first[i])) ++count;
        if (count > cap) fail(ErrorKind::SizeCap, "word tree exceeds cap at length " + std::to_string(len));
        cur.code.reserve(count);
        cur.first.reserve(count);
        cur.tail.reserve(count);
        cur.u.resize(count);
        std::vector<int> parent_first;
        for (int a = 0; a < k; ++a)
            for (std::size_t i = 0; i < prev.u.size(); ++i) {
                if (!m.allowed(a, prev.first[i])) continue;
                cur.code.push_back(static_cast<std::uint64_t>(a) * kpow + prev.code[i]);
                cur.first.push_back(a);
                cur.tail.push_back(static_cast<std::uint32_t>(i));
            }
        parallel_for(count, [&](std::size_t j) {
            std::size_t i = cur.tail[j];
            cur.u[j] = sys.branch(cur.first[j], prev.first[i], prev.u[i]);
        });
        if (phi) {
            std::vector<double> vals(count);
            parallel_for(count, [&](std::size_t j) { vals[j] = (*phi)(cur.first[j], cur.u[j]); });
            next_acc.assign(count, CompensatedSum{});
            cur.birkhoff.resize(count);
            for (std::size_t j = 0; j < count; ++j) {
                CompensatedSum s = acc[cur.tail[j]];
                s.add(vals[j]);
                next_acc[j] = s;
                cur.birkhoff[j] = s.value();
            }
            acc.swap(next_acc);
        }
        kpow *= static_cast<std::uint64_t>(k);
        levels.push_back(std::move(cur));
    }
    return levels;
}

double level_diameter(const BranchSystem& sys, const std::vector<WordLevel>& tree, int length) {
    require(length >= 1 && length <= static_cast<int>(tree.size()), "level out of range");
    constexpr int S = 5;
    const double samples[S] = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<std::array<double, S>> cur(tree[0].u.size());
    for (std::size_t i = 0; i < cur.size(); ++i)
        for (int s = 0; s < S; ++s) cur[i][static_cast<std::size_t>(s)] = samples[s];
    for (int len = 2; len <= length; ++len) {
        const WordLevel& lv = tree[static_cast<std::size_t>(len - 1)];
        const WordLevel& pv = tree[static_cast<std::size_t>(len - 2)];
        std::vector<std::array<double, S>> nxt(lv.u.size());
        parallel_for(lv.u.size(), [&](std::size_t j) {
            std::size_t i = lv.tail[j];
            for (int s = 0; s < S; ++s)
                nxt[j][static_cast<std::size_t>(s)] = sys.branch(lv.first[j], pv.first[i], cur[i][static_cast<std::size_t>(s)]);
        });
        cur.swap(nxt);
    }
    const WordLevel& lv = tree[static_cast<std::size_t>(length - 1)];
    double diam = 0.0;
    for (std::size_t j = 0; j < cur.size(); ++j)
        for (int s = 0; s < S; ++s)
            for (int t = s + 1; t < S; ++t)
                diam = std::max(diam, std::abs(sys.point(lv.first[j], cur[j][static_cast<std::size_t>(s)]) -
                                               sys.point(lv.first[j], cur[j][static_cast<std::size_t>(t)])));
    return diam;
}

}  // namespace fracfourier
