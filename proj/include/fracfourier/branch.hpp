#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fracfourier/numeric.hpp"
#include "fracfourier/symbolic.hpp"

namespace fracfourier {

// Expanding map with enumerated inverse branches. Each Markov piece U_a
// carries a chart u in [0,1]; branches and the forward map act on charts.
class BranchSystem {
public:
    virtual ~BranchSystem() = default;

    virtual std::string name() const = 0;
    virtual int phase_dim() const = 0;
    // phase-space position of chart point (a,u); real part only when phase_dim == 1
    virtual cplx point(int a, double u) const = 0;
    // chart coordinate in piece a of g_ab(point(b,u)); requires M_ab = 1
    virtual double branch(int a, int b, double u) const = 0;
    virtual ChartPoint forward(int a, double u) const = 0;
    // log |f'| at point(a,u)
    virtual double log_expansion(int a, double u) const = 0;
    // arg f' at point(a,u), zero for real systems
    virtual double expansion_arg(int, double) const { return 0.0; }
    // chart coordinate of the base point x_b
    virtual double representative(int) const { return 0.0; }

    const TransitionMatrix& transitions() const { return m_; }
    int piece_count() const { return m_.size(); }
    double kappa_min() const { return kappa_min_; }
    double kappa_max() const { return kappa_max_; }

    // Largest |f(g_ab x) - x| over sampled chart points.
    double right_inverse_residual(int samples = 257) const;

protected:
    // samples |g'| = exp(-log|f'|) over branch images
    void init_bounds(int samples = 513);
    TransitionMatrix m_;
    double kappa_min_ = 0.0;
    double kappa_max_ = 1.0;
};

using SystemPtr = std::shared_ptr<const BranchSystem>;

struct PotentialSpec {
    std::string label;
    double hoelder = 1.0;
    std::function<double(int, double)> eval;

    double operator()(int a, double u) const { return eval(a, u); }
};

PotentialSpec constant_potential(double c);
// s * log|f'|
PotentialSpec scaled_log_expansion(SystemPtr sys, double s);
PotentialSpec add(const PotentialSpec& p, const PotentialSpec& q);
PotentialSpec scale(const PotentialSpec& p, double s);
// locally constant, value v[a] on piece a
PotentialSpec locally_constant(std::vector<double> v);
// Largest |phi(x)-phi(y)| / |x-y|^alpha over sampled pairs in each piece.
double empirical_hoelder_ratio(const BranchSystem& sys, const PotentialSpec& phi, int samples = 200);

// One depth of the lexicographic word tree. Word w of length L has base
// point x_w = g_w(x_{last}) stored as chart coordinate u in piece first(w).
struct WordLevel {
    int length = 0;
    std::vector<std::uint64_t> code;
    std::vector<int> first;
    std::vector<std::uint32_t> tail;  // index of w without its first letter in the previous level
    std::vector<double> u;
    std::vector<double> birkhoff;  // S_{L-1} phi(x_w), empty when no potential was given
};

// Levels 1..n in lexicographic order.
std::vector<WordLevel> word_tree(const BranchSystem& sys, int n, const PotentialSpec* phi = nullptr,
                                 std::size_t cap = std::size_t(1) << 26);

// Largest distance between images of five chart samples under g_w, over all w of the level.
double level_diameter(const BranchSystem& sys, const std::vector<WordLevel>& tree, int length);

}  // namespace fracfourier
