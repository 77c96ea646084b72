#pragma once

#include <stdexcept>
#include <string>

namespace fracfourier {

enum class ErrorKind {
    Schema,        // malformed configuration
    Contract,      // a numeric contract failed
    Domain,        // precondition violated by the caller
    Convergence,   // iteration did not converge
    OrbitEscape,   // iterate left the admissible domain
    BranchJump,    // square-root branch tracking lost continuity
    SizeCap,       // enumeration exceeds the configured cap
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(ErrorKind::Domain, msg);
}

}  // namespace fracfourier
