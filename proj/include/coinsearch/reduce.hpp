// reduce.hpp
// Optimal cheating probabilities P*_{A,c} and P*_{B,c} via the reduced
// fidelity programs over the cheating polytopes, solved with pairwise
// Frank-Wolfe and certified by the duality gap.

#pragma once

#include "coinsearch/protocol.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace coinsearch {

enum class Party { Alice, Bob };

// Cheating Bob's behavioral strategy. p[j] is p_{j+1} in chain layout over
// A_1 x B_1 x ... x A_{j+1} x B_{j+1} (row-major, interleaved).
struct BobStrategy {
    std::vector<std::vector<double>> p;
};

// Cheating Alice's strategy: the message chain s_1..s_n (s_j over
// A_1 x B_1 x ... x B_{j-1} x A_j) plus the final reveal split s over
// A'_0 x A x B (row-major).
struct AliceStrategy {
    std::vector<std::vector<double>> s_chain;
    std::vector<double> s_final;
};

struct CheatCertificate {
    double value = 0; // best feasible objective found
    double gap = 0;   // Frank-Wolfe duality gap at termination
    double upper = 0; // value + gap
    int iterations = 0;
    Party party = Party::Bob;
    int outcome = 0;
    BobStrategy bob;
    AliceStrategy alice;
};

// Objective 1/2 sum_a F((alpha_a (x) I_B)^T p_n, beta_{a xor c}).
// Throws if the strategy violates the polytope constraints beyond 1e-6.
double bob_objective(const ProtocolParams& params, int c, const BobStrategy& strat);

// Objective 1/2 sum_a sum_y beta_{a xor c, y} F(s^{(a,y)}, alpha_a).
double alice_objective(const ProtocolParams& params, int c, const AliceStrategy& strat);

// Vertex maximizing <gradient, p_n> over Bob's cheating polytope, by
// backward induction; ties broken toward the smallest index. The gradient
// is over p_n's chain index space.
BobStrategy lmo_bob(const ProtocolParams& params, std::span<const double> gradient);

// Vertex maximizing <gradient, s> over Alice's cheating polytope. The
// gradient is over A'_0 x A x B; the final split sends each (x, y) to the
// bit with the larger coefficient, ties to a = 0.
AliceStrategy lmo_alice(const ProtocolParams& params, std::span<const double> gradient);

// Pairwise Frank-Wolfe from the uniform behavioral interior point with
// exact golden-section line search. Stops at gap <= tol or max_iter.
CheatCertificate solve_cheating(const ProtocolParams& params, Party party, int c,
                                double tol = 1e-7, int max_iter = 20000);

struct BiasResult {
    double bias = 0;
    std::array<CheatCertificate, 4> certs; // A0, A1, B0, B1
};

BiasResult solve_bias(const ProtocolParams& params, double tol = 1e-7, int max_iter = 20000);

// Exhaustive grid over the behavioral parameters; the independent oracle
// for solver tests. Refuses when the polytope has more than 6 free
// dimensions (or more than one commitment exchange).
double brute_force_value(const ProtocolParams& params, Party party, int c, double grid_step);

// Max constraint violation of a strategy against its polytope (used by
// tests and the objectives' feasibility check).
double bob_feasibility_error(const ProtocolParams& params, const BobStrategy& strat);
double alice_feasibility_error(const ProtocolParams& params, const AliceStrategy& strat);

} // namespace coinsearch
