#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

namespace fracfourier {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kLn2 = 0.69314718055994530942;

// Neumaier variant of Kahan summation.
class CompensatedSum {
public:
    void add(double x) {
        double t = s_ + x;
        if (std::fabs(s_) >= std::fabs(x))
            c_ += (s_ - t) + x;
        else
            c_ += (x - t) + s_;
        s_ = t;
    }
    double value() const { return s_ + c_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

class CompensatedComplexSum {
public:
    void add(cplx z) {
        re_.add(z.real());
        im_.add(z.imag());
    }
    cplx value() const { return {re_.value(), im_.value()}; }

private:
    CompensatedSum re_, im_;
};

double compensated_sum(const std::vector<double>& v);

// log(sum exp(v)) without overflow, summed in the given order.
double log_sum_exp(const std::vector<double>& v);

// Counter-based generator: value i of stream `seed` is a pure function of (seed, i).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)))) {}
    std::uint64_t at(std::uint64_t counter) const { return mix(key_ + 0x9e3779b97f4a7c15ULL * (counter + 1)); }
    std::uint64_t next() { return at(counter_++); }
    // uniform in [0,1) with 53 random bits
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }
    std::uint64_t counter() const { return counter_; }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t count = 0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Thread count used by parallel loops; 0 means "not set" and falls back to 1.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(i) for i in [0,n) over contiguous blocks. Each index must write
// only its own output slot so the result does not depend on the split.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Smallest x in [lo,hi] with f(x) >= 0 for increasing f, by bisection.
double bisect(const std::function<double(double)>& f, double lo, double hi, double tol, int max_iter = 200);

}  // namespace fracfourier
