#pragma once

#include <stdexcept>
#include <string>

namespace planarflow {

// Error taxonomy shared by every module. Each failure carries a Kind so
// callers (and the CLI exit-code mapping) can react without string matching.
enum class ErrorKind {
    invalid_argument,   // bad token kind, out-of-range scalar, malformed input
    shape_mismatch,     // grid/trajectory dimension disagreement
    domain,             // value outside mathematical domain (t, depth, K=0, ...)
    degenerate,         // rank-deficient fit, near-parallel columns, all-sentinel flow
    insufficient_data,  // empty corpus, too few frames, pool exhausted
    numerical,          // NaN loss, diverged training
    protocol,           // critic returned garbage, retries exhausted
    io,                 // file missing, parse failure, bad magic
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

} // namespace planarflow
