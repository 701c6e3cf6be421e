// protocol.hpp
// The bit-commitment protocol family: parameter records, validation, file
// format, and the analytic bound calculators.

#pragma once

#include "coinsearch/probvec.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace coinsearch {

// Round structure: n commitment exchanges (n=1 is the four-round protocol,
// n=2 the six-round one) with per-round message dimensions.
struct RoundSpec {
    int n = 1;
    IndexShape a_dims;
    IndexShape b_dims;

    RoundSpec() = default;
    RoundSpec(std::vector<int> a, std::vector<int> b);

    std::int64_t a_total() const { return a_dims.total(); }
    std::int64_t b_total() const { return b_dims.total(); }
    bool operator==(const RoundSpec& o) const {
        return n == o.n && a_dims.dims == o.a_dims.dims && b_dims.dims == o.b_dims.dims;
    }
};

// Unvalidated protocol data, as read from a file or assembled by a caller.
struct ProtocolDraft {
    int rounds = 0; // message count: 4 or 6 (so n = rounds/2 - 1)
    std::vector<int> a_dims;
    std::vector<int> b_dims;
    std::array<std::vector<Rational>, 4> dists; // alpha0, alpha1, beta0, beta1
};

// A validated protocol: the 4-tuple of commitment distributions. The honest
// states and measurements are fully determined by this record and never
// materialized.
struct ProtocolParams {
    RoundSpec spec;
    ProbVec alpha0, alpha1, beta0, beta1;

    ProtocolParams(RoundSpec s, ProbVec a0, ProbVec a1, ProbVec b0, ProbVec b1);

    const ProbVec& alpha(int a) const { return a == 0 ? alpha0 : alpha1; }
    const ProbVec& beta(int b) const { return b == 0 ? beta0 : beta1; }

    bool operator==(const ProtocolParams& o) const {
        return spec == o.spec && alpha0 == o.alpha0 && alpha1 == o.alpha1 &&
               beta0 == o.beta0 && beta1 == o.beta1;
    }
};

// Reports every violated invariant; empty means valid.
std::vector<std::string> validate(const ProtocolDraft& draft);

// Throws std::invalid_argument listing all violations.
ProtocolParams finalize(const ProtocolDraft& draft);

ProtocolDraft to_draft(const ProtocolParams& params);

// Protocol file format: JSON with fields rounds, a_dims, b_dims and the four
// distributions as arrays of exact fractions "num/den" (decimal strings are
// accepted on input). Rationals round-trip bit-exactly.
ProtocolDraft load_protocol(std::istream& in);
ProtocolDraft load_protocol_file(const std::string& path);
void save_protocol(const ProtocolParams& params, std::ostream& out);

// Mesh-approximation bound: biases of a protocol and its nearest mesh
// neighbour differ by at most 2*sqrt(D/N).
struct BoundReport {
    double mesh_gap = 0;            // 2*sqrt(D/N)
    std::int64_t min_N_for_claim = 0; // smallest N closing the 0.2499 -> Kitaev gap
    std::string context;
};

BoundReport mesh_gap_bound(std::int64_t D, std::int64_t N);

// Guaranteed lower bound on max{P_A0*, P_B0*} for four-round protocols whose
// commitment distributions are two-dimensional on the flagged side(s).
double qubit_lower_bound(bool alice_is_qubit, bool bob_is_qubit);

} // namespace coinsearch
