// symmetry.hpp
// Canonicalization of protocols under bias-preserving moves: local index
// permutations and the (alpha0, alpha1) / (beta0, beta1) swaps.

#pragma once

#include "coinsearch/protocol.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace coinsearch {

struct AppliedMoves {
    bool swapped_alpha = false;
    bool swapped_beta = false;
    std::vector<std::vector<int>> a_perms; // per axis; new[i] = old[perm[i]]
    std::vector<std::vector<int>> b_perms;
};

struct CanonicalForm {
    ProtocolParams params;
    AppliedMoves applied;
};

// The search algorithm's canonical form. Four rounds: swap the alpha pair if
// max(alpha1) > max(alpha0) (ties keep), then sort indices so alpha0 is
// nondecreasing (stable); same for the betas. Six rounds: after the swap
// rule, sort the second message axis so the slice holding alpha0's largest
// entry is nondecreasing, then sort the first axis so the per-slice last
// entries are nondecreasing with that slice last. All comparisons exact.
CanonicalForm canonicalize(const ProtocolParams& params);

// Whether a distribution pair is a fixed point of the search canonical form
// (mesh searches enumerate exactly these pairs).
bool is_search_canonical_pair(const std::vector<Rational>& v0,
                              const std::vector<Rational>& v1, const IndexShape& dims,
                              int n);

// True iff the two protocols are related by bias-preserving moves. Decided
// by a complete orbit minimum (brute force over local permutations), so it
// collapses ties the search canonical form deliberately leaves open.
bool equivalent(const ProtocolParams& p1, const ProtocolParams& p2);

// Complete orbit-minimal representative of one distribution pair.
std::pair<std::vector<Rational>, std::vector<Rational>>
orbit_min_pair(std::vector<Rational> v0, std::vector<Rational> v1, const IndexShape& dims);

// Number of search-canonical (alpha0, alpha1) pairs on the 1/N mesh; the
// funnel tables' Symmetry row is the product of the two sides' counts.
// `d` is the per-round message dimension.
std::int64_t count_canonical_pairs(int d, std::int64_t N, int rounds);

// Materializes the search-canonical pairs for one side of the mesh search,
// in deterministic enumeration order.
std::vector<std::pair<ProbVec, ProbVec>> canonical_mesh_pairs(const IndexShape& dims, int n,
                                                              std::int64_t N);

// All compositions of N into `dim` parts as exact mesh distributions j/N.
std::vector<ProbVec> gen_mesh(int dim, std::int64_t N);

// C(dim + N - 1, N), the mesh size, without materializing it.
std::int64_t mesh_size(int dim, std::int64_t N);

} // namespace coinsearch
