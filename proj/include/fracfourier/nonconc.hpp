#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fracfourier/systems.hpp"
#include "fracfourier/thermo.hpp"

namespace fracfourier {

// ---------------------------------------------------------------- UNI

// D_a(x) = (S_n Phi o g_a)'(x) = sum_{i<=n} Phi'(G_i x) G_i'(x), G_i = g_{a_i} o ... o g_{a_1}.
// Words are coded with a_1 as the most significant bit.
class BirkhoffDerivatives {
public:
    BirkhoffDerivatives(const DoublingPerturbation& sys, const PeriodicFunction& Phi, int n, const std::vector<double>& xs);
    int n() const { return n_; }
    std::size_t words() const { return std::size_t(1) << n_; }
    const std::vector<double>& xs() const { return xs_; }
    // values for word w at all grid points
    const double* row(std::size_t w) const { return d_.data() + w * xs_.size(); }

private:
    int n_;
    std::vector<double> xs_;
    std::vector<double> d_;
};

// Single-point D_a(x) for every word of length n.
std::vector<double> birkhoff_derivative_values(const DoublingPerturbation& sys, const PeriodicFunction& Phi, int n,
                                               double x);

struct UniScan {
    int n = 0;
    int grid = 0;
    std::size_t best_a = 0, best_b = 0;
    double c0_hat = 0.0;          // max over pairs of min over grid |D_a - D_b|
    double oscillation = 0.0;     // C2 h / 2 bound for the difference between grid points
    double c0_certified = 0.0;    // c0_hat - oscillation
    bool coarse = false;          // oscillation > 0.1 c0_hat
    std::size_t pairs_scanned = 0;
};

// C^2 bound for x -> D_a(x), uniform in a and n
double birkhoff_second_derivative_bound(const DoublingPerturbation& sys, const PeriodicFunction& Phi);
UniScan uni_scan(const DoublingPerturbation& sys, const PeriodicFunction& Phi, int n, int x_grid = 1024);

struct UniCertificate {
    int N = 0;
    double c0 = 0.0;
    double kappa_max = 0.0;
    double tail = 0.0;  // 2 |Phi'| kappa^{N+1} / (1 - kappa)
    std::vector<UniScan> scans;
    bool found = false;
};

// Smallest N with certified c0 > 0 and the tail condition 2|Phi'| kappa^{N+1}/(1-kappa) <= c0/4.
UniCertificate certify_uni(const DoublingPerturbation& sys, const PeriodicFunction& Phi, int n_max, int x_grid = 1024);

struct TreeBound {
    double fraction = 0.0;
    double bound = 0.0;
    double gamma = 0.0;
    bool pass = false;
};

double tree_gamma(int N, double kappa_minus = 0.25);
// values: sorted D_a(x0) over all words of length n
TreeBound tree_bound_check(const std::vector<double>& sorted_values, int n, double sigma, double a, int N, double c0,
                           double kappa_minus = 0.25);
TreeBound tree_bound_check(const DoublingPerturbation& sys, const PeriodicFunction& Phi, int n, double sigma, double a,
                           double x0, int N, double c0);

// ---------------------------------------------------------------- regular words

struct RegularWordSet {
    double eps = 0.0;
    int n = 0;
    std::vector<std::uint64_t> members;  // codes of words of length n+1
    std::size_t total = 0;
    double complement_mass = 0.0;
    double lambda = 0.0, delta = 0.0;
};

// Words of length n+1 with |S_n tau/n - lambda| < eps and |S_n phi~/S_n tau + delta| < eps at x_a.
RegularWordSet regular_words(SystemPtr sys, const EquilibriumData& eq, const PotentialSpec& phi, int n, double eps);

// ---------------------------------------------------------------- zeta collisions

struct ZetaFamily {
    int n = 0;
    int j = 1;
    std::vector<int> A;  // block words as n-bit codes
    std::vector<double> table;
    double nominal = 0.0;       // e^{delta lambda n}
    double kappa_range = 0.0;   // all values in [1/kappa_range, kappa_range]
    std::string normalization;
};

ZetaFamily zeta_family(const DoublingPerturbation& sys, int n, const std::vector<int>& A, int j);

struct CollisionResult {
    std::vector<double> sigma;
    std::vector<double> count;
    double gamma = 0.0;
};

// ordered pairs (b,c), diagonal included, with |zeta(b) - zeta(c)| <= sigma
double collision_count(std::vector<double> values, double sigma);
CollisionResult zeta_collisions(const ZetaFamily& family, const std::vector<double>& sigma);

// ---------------------------------------------------------------- QNL

struct QnlOptions {
    std::size_t pairs = 100000;
    std::size_t K = 40;
    int forward_depth = 40;
    std::uint64_t seed = 1;
    int bootstrap = 200;
    bool depth_check = false;  // recompute every pair with 2K backward steps
};

struct QnlResult {
    std::vector<double> sigma;
    std::vector<double> mass;
    double gamma = 0.0;
    double r_squared = 0.0;
    double boot_lo = 0.0, boot_hi = 0.0;
    double max_tail = 0.0;
    double max_abs_delta = 0.0;
    std::size_t pairs = 0;
    bool depth_checked = false;
    double depth_excess = 0.0;  // max over pairs of |Delta_2K - Delta_K| - tail_K
    std::size_t depth_violations = 0;
};

// Pairs sampled in a common depth-1 piece from the maximal-entropy measure of the base.
std::vector<std::pair<CodedPoint, CodedPoint>> sample_pairs(const CircleExpandingMap& f, std::size_t count,
                                                            std::size_t K, int forward_depth, std::uint64_t seed);
QnlResult qnl_probe(const CircleExpandingMap& f, const std::vector<double>& sigma, const QnlOptions& opts);

}  // namespace fracfourier
