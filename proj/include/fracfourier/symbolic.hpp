#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fracfourier {

class BranchSystem;
struct PotentialSpec;

class TransitionMatrix {
public:
    TransitionMatrix() = default;
    explicit TransitionMatrix(std::vector<std::vector<int>> rows);
    static TransitionMatrix full(int size);

    int size() const { return n_; }
    bool allowed(int a, int b) const { return bits_[static_cast<std::size_t>(a * n_ + b)] != 0; }
    bool mixing() const { return mixing_power_.has_value(); }
    std::optional<int> stored_mixing_power() const { return mixing_power_; }

private:
    int n_ = 0;
    std::vector<unsigned char> bits_;
    std::optional<int> mixing_power_;
};

// Least N <= size^2 with M^N entrywise positive.
std::optional<int> mixing_power(const TransitionMatrix& m);

struct Word {
    std::vector<int> letters;

    std::size_t length() const { return letters.size(); }
    int first() const { return letters.front(); }
    int last() const { return letters.back(); }
    bool admissible(const TransitionMatrix& m) const;
    // a ~> b when the last letter of a equals the first letter of b
    bool leads_to(const Word& b) const { return !letters.empty() && !b.letters.empty() && last() == b.first(); }
    // a'b: a with its last letter removed, followed by b
    Word join(const Word& b) const;
    std::string str() const;
    // base-k integer with the first letter most significant
    std::uint64_t code(int alphabet) const;
    static Word from_code(std::uint64_t code, int alphabet, int length);

    bool operator==(const Word& o) const = default;
    auto operator<=>(const Word& o) const = default;
};

// Admissible words of length n in lexicographic order.
std::vector<Word> admissible_words(const TransitionMatrix& m, int n);

// A = (a_0..a_k) and B = (b_1..b_k), all of length n+1, with a_{j-1} ~> b_j ~> a_j.
struct BlockPair {
    std::vector<Word> A;
    std::vector<Word> B;

    bool matched() const;
    // A*B = a_0' b_1' a_1' ... b_k' a_k
    Word star() const;
    // A#B = a_0' b_1' b_2' ... b_k
    Word sharp() const;
};

struct ChartPoint {
    int piece = 0;
    double u = 0.0;
};

// S_n phi(x) = sum_{k<n} phi(f^k x), compensated.
double birkhoff_sum(const BranchSystem& sys, const PotentialSpec& phi, ChartPoint x, int n);

}  // namespace fracfourier
