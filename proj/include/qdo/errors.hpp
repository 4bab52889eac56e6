#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace qdo {

using cxd = std::complex<double>;

// Machine-readable failure categories. The CLI prints `code_name()` in its
// single-line error records, so names are stable identifiers.
enum class errc {
    domain,           // argument outside the object's domain (t outside [a,b], Im λ = 0, ...)
    singularity,      // evaluation exactly at a singular anchor
    non_integrable,   // L1/L2 norm diverges (exponent <= -1)
    complexity,       // representation limits exceeded (breakpoints, term count, degree)
    division,         // reciprocal of a vanishing / structurally-zero piece
    admissibility,    // coefficient family outside the admissible class
    parameter,        // malformed structural parameter (m < 2, k out of range, ...)
    constraint,       // boundary-coefficient relations violated
    validity,         // matrix fails the structural validity conditions
    integration,      // ODE integrator failure (step underflow, step cap)
    realization,      // boundary-data realization system ill-conditioned
    resolvent_pole,   // λ is (numerically) an eigenvalue of the extension
    not_an_eigenvalue,// eigenfunction requested at a regular point
    preset,           // boundary-condition preset not constructible
    schema,           // spec-file parse/validation error
    task,             // task/subcommand mismatch or unsupported combination
    comparison,       // compare task: operands not comparable
};

inline const char* errc_name(errc c) {
    switch (c) {
    case errc::domain: return "domain";
    case errc::singularity: return "singularity";
    case errc::non_integrable: return "non-integrable";
    case errc::complexity: return "complexity";
    case errc::division: return "division";
    case errc::admissibility: return "admissibility";
    case errc::parameter: return "parameter";
    case errc::constraint: return "constraint";
    case errc::validity: return "validity";
    case errc::integration: return "integration-failure";
    case errc::realization: return "realization";
    case errc::resolvent_pole: return "resolvent-pole";
    case errc::not_an_eigenvalue: return "not-an-eigenvalue";
    case errc::preset: return "preset";
    case errc::schema: return "schema";
    case errc::task: return "task";
    case errc::comparison: return "comparison";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    errc code() const { return code_; }
    const char* code_name() const { return errc_name(code_); }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

// i^k for any integer k, exact over the Gaussian units {1, i, -1, -i}.
inline cxd unit_imag_power(long k) {
    long r = ((k % 4) + 4) % 4;
    switch (r) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
    }
}

} // namespace qdo
