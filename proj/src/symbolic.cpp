#include "fracfourier/symbolic.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "fracfourier/branch.hpp"
#include "fracfourier/error.hpp"
#include "fracfourier/numeric.hpp"

namespace fracfourier {

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::Schema: return "schema";
        case ErrorKind::Contract: return "contract";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Convergence: return "convergence";
        case ErrorKind::OrbitEscape: return "orbit-escape";
        case ErrorKind::BranchJump: return "branch-discontinuity";
        case ErrorKind::SizeCap: return "size-cap";
    }
    return "unknown";
}

// ---- numeric helpers ----

double compensated_sum(const std::vector<double>& v) {
    CompensatedSum s;
    for (double x : v) s.add(x);
    return s.value();
}

double log_sum_exp(const std::vector<double>& v) {
    if (v.empty()) return -INFINITY;
    double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    CompensatedSum s;
    for (double x : v) s.add(std::exp(x - m));
    return m + std::log(s.value());
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LinearFit f;
    std::size_t n = std::min(x.size(), y.size());
    f.count = n;
    if (n < 2) return f;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (f.intercept + f.slope * x[i]);
        sse += r * r;
    }
    f.r_squared = syy > 0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
    return f;
}

namespace {
std::atomic<unsigned> g_threads{0};
}

void set_thread_count(unsigned n) { g_threads = n; }
unsigned thread_count() {
    unsigned n = g_threads.load();
    return n == 0 ? 1u : n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    unsigned t = std::min<std::size_t>(thread_count(), n == 0 ? 1 : n);
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(t);
    std::size_t chunk = (n + t - 1) / t;
    for (unsigned k = 0; k < t; ++k) {
        pool.emplace_back([&, k] {
            try {
                std::size_t lo = k * chunk, hi = std::min(n, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double tol, int max_iter) {
    for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) >= 0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

// ---- transition matrices ----

TransitionMatrix::TransitionMatrix(std::vector<std::vector<int>> rows) {
    n_ = static_cast<int>(rows.size());
    require(n_ >= 1, "transition matrix must have size >= 1");
    bits_.assign(static_cast<std::size_t>(n_ * n_), 0);
    for (int a = 0; a < n_; ++a) {
        require(static_cast<int>(rows[a].size()) == n_, "transition matrix must be square");
        for (int b = 0; b < n_; ++b) bits_[static_cast<std::size_t>(a * n_ + b)] = rows[a][b] ? 1 : 0;
    }
    for (int a = 0; a < n_; ++a) {
        bool row = false, col = false;
        for (int b = 0; b < n_; ++b) {
            row = row || allowed(a, b);
            col = col || allowed(b, a);
        }
        require(row && col, "transition matrix has a dead symbol");
    }
    mixing_power_ = fracfourier::mixing_power(*this);
}

TransitionMatrix TransitionMatrix::full(int size) {
    return TransitionMatrix(std::vector<std::vector<int>>(static_cast<std::size_t>(size), std::vector<int>(static_cast<std::size_t>(size), 1)));
}

std::optional<int> mixing_power(const TransitionMatrix& m) {
    int n = m.size();
    if (n < 1) return std::nullopt;
    std::vector<unsigned char> base(static_cast<std::size_t>(n * n)), cur;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) base[static_cast<std::size_t>(a * n + b)] = m.allowed(a, b);
    cur = base;
    for (int p = 1; p <= n * n; ++p) {
        if (std::all_of(cur.begin(), cur.end(), [](unsigned char v) { return v != 0; })) return p;
        std::vector<unsigned char> next(static_cast<std::size_t>(n * n), 0);
        for (int a = 0; a < n; ++a)
            for (int c = 0; c < n; ++c)
                if (cur[static_cast<std::size_t>(a * n + c)])
                    for (int b = 0; b < n; ++b)
                        if (base[static_cast<std::size_t>(c * n + b)]) next[static_cast<std::size_t>(a * n + b)] = 1;
        cur.swap(next);
    }
    return std::nullopt;
}

// ---- words ----

bool Word::admissible(const TransitionMatrix& m) const {
    for (std::size_t i = 0; i < letters.size(); ++i) {
        if (letters[i] < 0 || letters[i] >= m.size()) return false;
        if (i + 1 < letters.size() && !m.allowed(letters[i], letters[i + 1])) return false;
    }
    return true;
}

Word Word::join(const Word& b) const {
    require(leads_to(b), "join requires a ~> b");
    Word w;
    w.letters.assign(letters.begin(), letters.end() - 1);
    w.letters.insert(w.letters.end(), b.letters.begin(), b.letters.end());
    return w;
}

std::string Word::str() const {
    std::string s;
    for (int l : letters) s += std::to_string(l);
    return s;
}

std::uint64_t Word::code(int alphabet) const {
    std::uint64_t c = 0;
    for (int l : letters) c = c * static_cast<std::uint64_t>(alphabet) + static_cast<std::uint64_t>(l);
    return c;
}

Word Word::from_code(std::uint64_t code, int alphabet, int length) {
    Word w;
    w.letters.assign(static_cast<std::size_t>(length), 0);
    for (int i = length - 1; i >= 0; --i) {
        w.letters[static_cast<std::size_t>(i)] = static_cast<int>(code % static_cast<std::uint64_t>(alphabet));
        code /= static_cast<std::uint64_t>(alphabet);
    }
    return w;
}

std::vector<Word> admissible_words(const TransitionMatrix& m, int n) {
    require(n >= 0, "word length must be >= 0");
    std::vector<Word> out;
    if (n == 0) {
        out.emplace_back();
        return out;
    }
    Word w;
    w.letters.assign(static_cast<std::size_t>(n), 0);
    // depth-first in lexicographic order
    std::function<void(int)> rec = [&](int pos) {
        if (pos == n) {
            out.push_back(w);
            return;
        }
        for (int a = 0; a < m.size(); ++a) {
            if (pos > 0 && !m.allowed(w.letters[static_cast<std::size_t>(pos - 1)], a)) continue;
            w.letters[static_cast<std::size_t>(pos)] = a;
            rec(pos + 1);
        }
    };
    rec(0);
    return out;
}

bool BlockPair::matched() const {
    if (A.size() != B.size() + 1) return false;
    for (std::size_t j = 1; j < A.size(); ++j)
        if (!A[j - 1].leads_to(B[j - 1]) || !B[j - 1].leads_to(A[j])) return false;
    return true;
}

Word BlockPair::star() const {
    require(matched(), "A <-> B required");
    Word w;
    for (std::size_t j = 0; j + 1 < A.size(); ++j) {
        w.letters.insert(w.letters.end(), A[j].letters.begin(), A[j].letters.end() - 1);
        w.letters.insert(w.letters.end(), B[j].letters.begin(), B[j].letters.end() - 1);
    }
    w.letters.insert(w.letters.end(), A.back().letters.begin(), A.back().letters.end());
    return w;
}

Word BlockPair::sharp() const {
    require(matched(), "A <-> B required");
    Word w;
    for (std::size_t j = 0; j + 1 < A.size(); ++j) {
        w.letters.insert(w.letters.end(), A[j].letters.begin(), A[j].letters.end() - 1);
        if (j + 2 < A.size())
            w.letters.insert(w.letters.end(), B[j].letters.begin(), B[j].letters.end() - 1);
        else
            w.letters.insert(w.letters.end(), B[j].letters.begin(), B[j].letters.end());
    }
    return w;
}

double birkhoff_sum(const BranchSystem& sys, const PotentialSpec& phi, ChartPoint x, int n) {
    CompensatedSum s;
    for (int k = 0; k < n; ++k) {
        s.add(phi(x.piece, x.u));
        if (k + 1 < n) x = sys.forward(x.piece, x.u);
    }
    return s.value();
}

}  // namespace fracfourier
