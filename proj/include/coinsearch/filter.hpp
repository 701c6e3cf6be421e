// filter.hpp
// Closed-form cheating-strategy lower bounds and the staged protocol filter.

#pragma once

#include "coinsearch/protocol.hpp"
#include "coinsearch/reduce.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace coinsearch {

enum class StrategyCode {
    F1, F2, F3, F4, F5, F6, F7, F8, F9, F10, F11, F12, F13,
    SDPA0, SDPA1, SDPB0, SDPB1,
    G1, G2, G3, G4, G5, G6, G7, G8, G9, G10, G11, G12,
};

struct StageInfo {
    StrategyCode code;
    const char* name;       // "F1", "SDPA0", ...
    const char* formula_id; // strategy formula label: "B1", "A2", "kitaev", "exact"
    Party party;            // whose optimal cheating probability it lower-bounds
    int outcome;            // the forced bit c
    int family;             // 4 or 6 (round count); SDP stages carry 0 = both
    bool needs_solver;      // SDP stages and the Kitaev-implied bounds
};

const std::vector<StageInfo>& strategy_catalog();
const StageInfo& stage_info(StrategyCode code);
StrategyCode parse_strategy_code(const std::string& name);

// The empirically tuned default stage orders for the mesh searches.
std::vector<StrategyCode> default_filter_order(int rounds);

// Success probability of one closed-form strategy; a valid lower bound on
// the corresponding P*. Kitaev-implied codes (F12/F13/G11/G12) need the
// matching optimal value passed in `solver_value`.
double eval_strategy(const ProtocolParams& params, StrategyCode code,
                     std::optional<double> solver_value = std::nullopt);

struct FilterOutcome {
    std::vector<std::pair<StrategyCode, double>> values; // stages evaluated, in order
    std::optional<StrategyCode> rejected_at;
    bool passed = false;
};

// Returns certificate.upper of solve_cheating(party, c) for SDP stages; the
// same cached values feed the Kitaev-implied stages.
using SolverHook = std::function<double(Party, int)>;

SolverHook default_solver_hook(const ProtocolParams& params, double tol = 1e-7,
                               int max_iter = 20000);

// Evaluates stages in order and stops at the first value strictly above the
// threshold. Stages whose round family does not match are rejected; the
// returning strategies F4/F5 are skipped when |A| != |B|.
FilterOutcome run_filter(const ProtocolParams& params,
                         const std::vector<StrategyCode>& order, double threshold,
                         const SolverHook& solver_hook);

FilterOutcome run_filter(const ProtocolParams& params, double threshold = 0.7499,
                         double solver_tol = 1e-7);

} // namespace coinsearch
