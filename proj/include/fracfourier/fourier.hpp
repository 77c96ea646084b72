#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fracfourier/systems.hpp"
#include "fracfourier/thermo.hpp"

namespace fracfourier {

// Frequencies grouped in octaves of a base; planar frequencies use a fixed direction.
struct FrequencyGrid {
    std::vector<double> values;
    std::vector<int> octave;
    double base = 2.0;
    double direction = 0.0;  // angle of planar frequencies
    std::string scheme;

    // base^{j + i/per_octave} for j in [j_min, j_max], i < per_octave
    static FrequencyGrid dyadic(int j_min, int j_max, int per_octave, double base = 2.0);
    static FrequencyGrid explicit_values(std::vector<double> v, double base = 2.0);
    std::size_t size() const { return values.size(); }
};

struct DecayReport {
    FrequencyGrid grid;
    std::vector<double> moduli;
    std::vector<int> octaves;         // octaves of the fit window
    std::vector<double> octave_sup;   // sup of moduli per window octave
    std::optional<double> rho;
    double intercept = 0.0;
    double r_squared = 0.0;
    int window_lo = 0, window_hi = 0;
    double truncation_bound = 0.0;
    bool truncation_limited = false;
};

// sum_j w_j e^{-2 pi i xi x_j}
cplx fourier_transform(const AtomicMeasure& mu, double xi);
cplx fourier_transform(const AtomicMeasure& mu, double xi1, double xi2);
std::vector<cplx> fourier_transform_grid(const AtomicMeasure& mu, const FrequencyGrid& grid);

struct PhaseValue {
    cplx value;
    double truncation_bound = 0.0;
};

using AtomFunction = std::function<double(cplx)>;
// sum_j w_j chi(x_j) e^{i xi psi(x_j)}; bound = |xi| Lip(psi) diameter_bound sup|chi|
PhaseValue phase_pushforward(const AtomicMeasure& mu, const AtomFunction& psi, const AtomFunction& chi, double xi,
                             double psi_lipschitz = 0.0, double chi_sup = 1.0);

// Least squares of log(octave sup) against octave * ln(base) over [lo, hi].
// per-octave truncation bound 2 pi xi_max diameter_bound unless bounds are given.
DecayReport fit_decay(const FrequencyGrid& grid, const std::vector<double>& moduli, int lo, int hi,
                      double diameter_bound, const std::vector<double>* truncation = nullptr);

struct EnergyResult {
    double value = 0.0;
    std::size_t coincident_pairs = 0;
};

// sum_{i != j} w_i w_j |x_i - x_j|^{-beta}; coincident atoms raise unless merge is set
EnergyResult energy_integral(const AtomicMeasure& mu, double beta, bool merge_coincident = false);

AtomicMeasure mult_convolution(const AtomicMeasure& mu, const AtomicMeasure& nu);
AtomicMeasure uniform_atoms(const std::vector<double>& points);

enum class Kernel { Transform, Plain };  // e^{-2 pi i eta x} or e^{i eta x}

struct SumProductValue {
    cplx value;
    double modulus = 0.0;
    std::size_t support = 0;
    std::size_t terms = 0;
};

// |transform of mu_h^{(k)} at eta = 1/h| by direct k-fold product sum, mu_h uniform on hZ cap [1/2,1]
SumProductValue sum_product_probe(double h, int k, Kernel kernel = Kernel::Transform,
                                  std::size_t cap = std::size_t(1) << 28);
// support of mu_h
std::vector<double> sum_product_support(double h);

struct ExpSumResult {
    std::vector<std::vector<int>> blocks;  // each A as k+1 codes of n bits
    std::vector<double> moduli;            // per A
    double mean_modulus = 0.0;
    double zeta_min = 0.0, zeta_max = 0.0;
};

// zeta_{A,j}(b) = 4^n (g_{a_{j-1}} o g_b)'(x_{a_j}) with x_a = g_a(0), b in {0,1}^n
std::vector<double> zeta_values(const DoublingPerturbation& sys, int n, std::uint32_t a_prev, std::uint32_t a_next);
// 2^{-kn} |sum_B e^{i eta zeta_1(b_1) ... zeta_k(b_k)}| per A, A fixed or drawn with the seed
ExpSumResult exp_sum_probe(const DoublingPerturbation& sys, int n, int k, double eta,
                           const std::vector<std::vector<int>>& fixed_blocks, int random_blocks, std::uint64_t seed);

struct RegularityResult {
    std::vector<double> radii;
    std::vector<double> sup_mass;
    double exponent = 0.0;
    double r_squared = 0.0;
    bool degenerate = false;
};

RegularityResult regularity_exponent(const AtomicMeasure& mu, const std::vector<double>& radii);

// Lebesgue atoms j/2^n (weights 2^{-n}) and the (1/2,1/2) triadic Cantor digit measure at depth m
AtomicMeasure lebesgue_atoms(int depth);
AtomicMeasure cantor_atoms(int depth);

}  // namespace fracfourier
