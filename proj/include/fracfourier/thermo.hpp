#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fracfourier/branch.hpp"

namespace fracfourier {

// Finite weighted point cloud. Coordinates are stored row-major, `dim` per atom.
struct AtomicMeasure {
    int dim = 1;
    std::vector<double> coords;
    std::vector<double> weights;
    int depth = 0;
    double diameter_bound = 0.0;
    std::string label;

    std::size_t size() const { return weights.size(); }
    double x(std::size_t i, int c = 0) const { return coords[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)]; }
    cplx z(std::size_t i) const { return {x(i, 0), dim > 1 ? x(i, 1) : 0.0}; }
    void push(cplx p, double w);
    double total_mass() const;
};

// Transfer operator discretized on a uniform grid of G chart points per piece with
// piecewise-linear interpolation. Grid vectors are piece-major, size pieces * G.
class TransferOperator {
public:
    TransferOperator(const BranchSystem& sys, const PotentialSpec& phi, int grid_points = 4096);

    int grid_points() const { return G_; }
    int pieces() const { return k_; }
    std::size_t size() const { return static_cast<std::size_t>(k_ * G_); }
    double node(int j) const { return static_cast<double>(j) / (G_ - 1); }
    double interpolate(const std::vector<double>& h, int piece, double u) const;

    std::vector<double> apply(const std::vector<double>& h) const;
    std::vector<double> apply_adjoint(const std::vector<double>& m) const;
    // L_{phi} with extra factor e^{i xi tau + i l arg f'} and the normalization h(img)/(lambda h(x))
    std::vector<cplx> apply_twisted(const std::vector<cplx>& v, double xi, int l, const std::vector<double>* h,
                                    double lambda) const;

    struct Entry {
        int a;
        int i0;
        double t;
        double u;       // image chart coordinate in piece a
        double weight;  // e^{phi(a,u)}
        double tau;     // log|f'| at the image
        double arg;     // arg f' at the image
    };
    // entries for target node (b,j)
    const std::vector<Entry>& entries(int b, int j) const { return kernel_[static_cast<std::size_t>(b * G_ + j)]; }

private:
    int k_, G_;
    std::vector<std::vector<Entry>> kernel_;
};

struct EigenData {
    double eigenvalue = 1.0;
    double pressure = 0.0;  // log eigenvalue
    std::vector<double> h;  // right eigenvector, max = 1
    std::vector<double> m;  // left eigenvector, sum = 1
    double residual_h = 0.0, residual_m = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Power iteration: stop at residual 1e-10 or max_iter; eigenvalue is the median iterate ratio.
EigenData leading_eigen(const TransferOperator& L, double tol = 1e-10, int max_iter = 500);

// ---------------------------------------------------------------- pressure

struct PressureResult {
    double value = 0.0;
    bool converged = false;
    int n_used = 0;
    double rate = 0.0;  // fitted geometric ratio of the error
    std::vector<double> sequence;  // q_n = log Z_n - log Z_{n-1}, Z_n over W_{n+1}
};

// Richardson-style limit of log Z_n - log Z_{n-1} with Z_n = sum_{W_{n+1}} e^{S_n phi(x_a)}.
PressureResult pressure(const BranchSystem& sys, const PotentialSpec& phi, int n_max = 14, double tol = 1e-9);
// Same from precomputed Birkhoff sums: levels[L-1] holds S_{L-1} phi over words of length L.
PressureResult pressure_from_sums(const std::vector<std::vector<double>>& levels, double tol = 1e-9);
PressureResult extrapolate_pressure(const std::vector<double>& q, double tol);

struct NormalizedPotential {
    PotentialSpec phi;  // phi + log h - log h o f - P
    EigenData eigen;
    double max_defect = 0.0;  // sup |L_phi~ 1 - 1| on the grid
};

NormalizedPotential normalize_potential(SystemPtr sys, const PotentialSpec& phi, int grid_points = 4096);

// L_phi^iterations h on the grid.
std::vector<double> transfer_apply(const BranchSystem& sys, const PotentialSpec& phi, const std::vector<double>& h,
                                   int iterations, int grid_points = 4096);

// ---------------------------------------------------------------- equilibrium

enum class WeightMode { Equilibrium, Conformal };

struct EquilibriumOptions {
    int grid_points = 4096;
    int bins = 32;
    WeightMode mode = WeightMode::Equilibrium;
    std::vector<int> gibbs_depths;  // depths at which the Gibbs constant is measured (default: depth only)
};

struct CylinderLevel {
    int depth = 0;
    std::vector<std::uint64_t> codes;  // lexicographic
    std::vector<double> weights;
};

struct EquilibriumData {
    double pressure = 0.0;
    int grid_points = 0;
    std::vector<double> eigenfunction;  // h on the grid
    std::vector<double> grid_measure;   // nu (or m in conformal mode) on grid nodes
    std::vector<CylinderLevel> levels;  // depths 1..depth
    double lyapunov = 0.0;
    double dimension = 0.0;
    double integral_phi = 0.0;  // int phi~ dnu
    int depth = 0;
    double gibbs_constant = 0.0;
    std::vector<std::pair<int, double>> gibbs_by_depth;
    double renormalization = 1.0;  // sum of raw weights before renormalizing
    double residual = 0.0;
    bool converged = false;
    int alphabet = 0;
    WeightMode mode = WeightMode::Equilibrium;

    const CylinderLevel& level(int d) const { return levels.at(static_cast<std::size_t>(d - 1)); }
    double weight(const Word& w) const;
    // int psi dnu over grid nodes
    std::vector<double> node_u;
};

struct EquilibriumResult {
    EquilibriumData data;
    AtomicMeasure atoms;
};

EquilibriumResult equilibrium(SystemPtr sys, const PotentialSpec& phi, int depth, const EquilibriumOptions& opts = {});

// phi + log h - log h o f - P from the eigenfunction stored in an equilibrium of phi
PotentialSpec normalized_from(SystemPtr sys, const EquilibriumData& eq, const PotentialSpec& phi);

// int psi dnu with nu the grid measure of an equilibrium
double integrate_grid(const BranchSystem& sys, const EquilibriumData& eq, const PotentialSpec& psi);

// Bisection on s -> P(-s log|f'|) to |P| <= tol.
struct DimensionResult {
    double delta = 0.0;
    double pressure_at_root = 0.0;
    int bisection_steps = 0;
    bool monotone = true;
};
DimensionResult dimension_root(const BranchSystem& sys, int n_max = 14, double tol = 1e-6);

// ---------------------------------------------------------------- probes

struct LargeDeviationResult {
    std::vector<int> n;
    std::vector<double> mass;
    double mean = 0.0;
    double rate = 0.0;
    double r_squared = 0.0;
};

// Mass of {|S_n psi / n - int psi| >= eps} under depth-D cylinder weights.
LargeDeviationResult large_deviation_probe(const BranchSystem& sys, const EquilibriumData& eq, const PotentialSpec& psi,
                                           double eps, const std::vector<int>& n_list);

struct PressureDerivative {
    double finite_difference = 0.0;
    double integral = 0.0;
    double discrepancy = 0.0;
};

// Word-sum pressure based finite difference against int psi dmu_phi.
class PressureDerivativeCheck {
public:
    PressureDerivativeCheck(SystemPtr sys, const PotentialSpec& phi, const PotentialSpec& psi, int n_max = 14);
    PressureDerivative at(double t) const;
    double integral() const { return integral_; }

private:
    std::vector<std::vector<double>> sphi_, spsi_;
    double p0_ = 0.0;
    double integral_ = 0.0;
};

struct TwistedResult {
    std::vector<double> norms;  // |L^n 1|_inf for n = 0..n_max
    double rho = 0.0;
    double r_squared = 0.0;
};

TwistedResult twisted_contraction_probe(SystemPtr sys, const PotentialSpec& phi, double xi, int l, int n_max,
                                        int window_lo, int window_hi, int grid_points = 4096);
// rho fitted on another window from stored norms
double fit_rho(const std::vector<double>& norms, int lo, int hi);

}  // namespace fracfourier
