#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace oracle {

namespace {
constexpr long double kPiL = 3.141592653589793238462643383279502884L;
}

cplx translate(cplx b, cplx z) { return (z + b) / (1.0 + std::conj(b) * z); }

double disk_distance(cplx x, cplx y) {
    double r = std::abs(x - y) / std::abs(1.0 - std::conj(x) * y);
    return 2.0 * std::atanh(r);
}

double busemann_limit(double xi, cplx x, cplx y) {
    // d(z, w) = acosh(1 + 2|z-w|^2 / ((1-|z|^2)(1-|w|^2))); the common factor of w cancels
    using L = long double;
    auto part = [&](cplx z, L wr, L wi, L one_minus_w2) {
        L dx = L(z.real()) - wr, dy = L(z.imag()) - wi;
        L zz = 1 - L(z.real()) * z.real() - L(z.imag()) * z.imag();
        return std::acosh(1 + 2 * (dx * dx + dy * dy) / (zz * one_minus_w2));
    };
    L t = 24;  // ray time: d(o, w) = t
    L r = std::tanh(t / 2);
    L wr = r * std::cos(L(xi)), wi = r * std::sin(L(xi));
    L om = (1 - r) * (1 + r);
    return static_cast<double>(part(x, wr, wi, om) - part(y, wr, wi, om));
}

double visual_angle(cplx x, double xi, double eta) {
    // move x to the origin, where the angle is the arc length
    cplx a = translate(-x, std::polar(1.0, xi));
    cplx b = translate(-x, std::polar(1.0, eta));
    double ang = std::fabs(std::arg(a / b));
    return std::sin(0.5 * ang);
}

double binomial_tail(int n, double eps) {
    long double mass = 0, c = 1;  // C(n,k) built incrementally
    for (int k = 0; k <= n; ++k) {
        if (k > 0) c = c * (n - k + 1) / k;
        if (std::fabs(static_cast<double>(k) / n - 0.5) >= eps) mass += c;
    }
    return static_cast<double>(mass / std::pow(2.0L, n));
}

cplx cantor_transform(double xi, int m) {
    // digit d in {0, 2}: (1 + e^{-2 pi i xi 2 3^-k}) / 2
    cplx p = 1.0;
    long double scale = 1;
    for (int k = 1; k <= m; ++k) {
        scale /= 3;
        long double ph = -2 * kPiL * xi * 2 * scale;
        p *= 0.5 * (1.0 + cplx(std::cos(static_cast<double>(ph)), std::sin(static_cast<double>(ph))));
    }
    return p;
}

double moran_root(const std::vector<double>& ratios) {
    auto g = [&](double s) {
        double t = 0;
        for (double r : ratios) t += std::pow(r, s);
        return t - 1.0;
    };
    double lo = 0, hi = 1;
    while (g(hi) > 0) hi *= 2;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (g(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double bernoulli_pressure(const std::vector<double>& p, const std::vector<double>& v, double t) {
    double z = 0;
    for (std::size_t a = 0; a < p.size(); ++a) z += p[a] * std::exp(t * v[a]);
    return std::log(z);
}

double bernoulli_derivative(const std::vector<double>& p, const std::vector<double>& v, double t) {
    double z = 0, dz = 0;
    for (std::size_t a = 0; a < p.size(); ++a) {
        double e = p[a] * std::exp(t * v[a]);
        z += e;
        dz += v[a] * e;
    }
    return dz / z;
}

double sum_product_modulus(double h, int k) {
    int m = 0;
    while (std::ldexp(1.0, -m) > h) ++m;
    if (std::ldexp(1.0, -m) != h) throw std::invalid_argument("h must be a power of two");
    // x = j h with 2^{m-1} <= j <= 2^m; phase = prod j / 2^{m(k-1)} mod 1
    const std::uint64_t lo = std::uint64_t(1) << (m - 1), hi = std::uint64_t(1) << m;
    const int bits = m * (k - 1);
    if (m * k > 63) throw std::invalid_argument("product overflows");
    const std::uint64_t mask = bits == 0 ? 0 : (std::uint64_t(1) << bits) - 1;
    const std::uint64_t N = hi - lo + 1;
    std::vector<std::uint64_t> idx(static_cast<std::size_t>(k), lo);
    long double re = 0, im = 0;
    while (true) {
        std::uint64_t prod = 1;
        for (auto j : idx) prod *= j;
        long double frac = bits == 0 ? 0.0L : static_cast<long double>(prod & mask) / static_cast<long double>(mask + 1);
        re += std::cos(2 * kPiL * frac);
        im -= std::sin(2 * kPiL * frac);
        int f = 0;
        while (f < k && idx[static_cast<std::size_t>(f)] == hi) idx[static_cast<std::size_t>(f++)] = lo;
        if (f == k) break;
        ++idx[static_cast<std::size_t>(f)];
    }
    long double total = std::pow(static_cast<long double>(N), k);
    return static_cast<double>(std::sqrt(re * re + im * im) / total);
}

double box_count_slope(const std::vector<double>& points, int lo, int hi) {
    std::vector<double> x, y;
    for (int j = lo; j <= hi; ++j) {
        std::set<long long> boxes;
        for (double p : points) boxes.insert(static_cast<long long>(std::floor(std::ldexp(p, j))));
        x.push_back(j * std::log(2.0));
        y.push_back(std::log(static_cast<double>(boxes.size())));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    return sxy / sxx;
}

}  // namespace oracle
