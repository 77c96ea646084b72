#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

// z -> (z + b) / (1 + conj(b) z)
cplx translate(cplx b, cplx z);
// 2 artanh |x - y| / |1 - conj(x) y|
double disk_distance(cplx x, cplx y);
// d(x, r e^{i xi}) - d(y, r e^{i xi}) with r -> 1, in long double
double busemann_limit(double xi, cplx x, cplx y);
// sine of half the angle between the geodesics from x to e^{i xi} and e^{i eta}
double visual_angle(cplx x, double xi, double eta);

// mass of {|k/n - 1/2| >= eps} under Binomial(n, 1/2)
double binomial_tail(int n, double eps);

// product formula for the (1/2,1/2) triadic digit measure at depth m
cplx cantor_transform(double xi, int m);

// root s of sum r_a^s = 1
double moran_root(const std::vector<double>& ratios);

// log sum_a p_a e^{t v_a} and its derivative
double bernoulli_pressure(const std::vector<double>& p, const std::vector<double>& v, double t);
double bernoulli_derivative(const std::vector<double>& p, const std::vector<double>& v, double t);

// normalized k-fold sum of e^{-2 pi i x_1...x_k / h} over hZ cap [1/2,1], for h = 2^-m,
// with the phase reduced exactly in integers
double sum_product_modulus(double h, int k);

// box-counting slope of points on [0,1) over dyadic scales 2^-lo .. 2^-hi
double box_count_slope(const std::vector<double>& points, int lo, int hi);

}  // namespace oracle
