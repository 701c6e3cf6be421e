// search.hpp
// Staged mesh/offset/zoom searches over the protocol family, with sharded
// deterministic execution, funnel reporting, and checkpoint/resume.

#pragma once

#include "coinsearch/filter.hpp"
#include "coinsearch/symmetry.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace coinsearch {

enum class SearchMode { Mesh, Offset, Zoom };

struct SearchConfig {
    int rounds = 4; // 4 or 6
    int d_a = 2, d_b = 2; // per-round message dimensions
    std::int64_t N = 5;   // mesh fineness, nu = 1/N
    double threshold = 0.7499;
    std::vector<StrategyCode> order; // empty = default order for the family

    SearchMode mode = SearchMode::Mesh;
    std::uint64_t offset_seed = 0;                // offset mode
    std::optional<ProtocolDraft> zoom_center;     // zoom mode
    Rational zoom_step = Rational(1, 10);         // zoom mode
    int zoom_radius_steps = 2;                    // radius = k * step, k in {0,1,2}

    double solver_tol = 1e-7;
    int solver_max_iter = 20000;
    int shards = 1;

    std::string checkpoint_path;      // empty = no checkpointing
    std::int64_t max_alpha_steps = -1; // stop early (resumable); -1 = run to completion
};

struct SurvivorRecord {
    ProtocolDraft protocol;
    FilterOutcome outcome;
    std::array<double, 4> probs{}; // PA0, PA1, PB0, PB1 upper bounds where solved
    std::array<bool, 4> solved{};
    double bias = 0;
    bool undecided = false; // solver failure; kept conservatively
};

struct FunnelReport {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::pair<std::string, long long>> stage_counts; // Protocols, Symmetry, ...
    std::vector<SurvivorRecord> survivors;
    bool complete = true; // false when stopped early by max_alpha_steps
};

// Offset delta drawn uniformly from the open interval (0, 1/(2N)) as an
// exact dyadic rational.
Rational draw_offset_delta(std::uint64_t seed, std::int64_t N);

// Offset mesh: first d-1 entries from {delta, delta + 1/N, ...,
// delta + 1 - 1/N}, last entry the exact complement; only valid
// distributions are emitted.
std::vector<ProbVec> gen_offset_mesh(int d, std::int64_t N, const Rational& delta);

// Zoom candidates for one distribution: every entry except the one holding
// the largest center value ranges over {entry - r*step, ..., entry + r*step}
// clipped to [0,1]; the largest entry absorbs the renormalization.
std::vector<ProbVec> zoom_candidates(const ProbVec& center, int radius_steps,
                                     const Rational& step);

// Full zoom stream over a protocol: Cartesian product of the four
// distributions' candidate lists.
void enumerate_zoom(const ProtocolParams& center, int radius_steps, const Rational& step,
                    const std::function<void(const ProtocolParams&)>& fn);

FunnelReport run_search(const SearchConfig& config);

// Survivor counts for a prefix of {F1, F2} on the four-round mesh, computed
// as products of per-side pass counts without enumerating the full product.
// Refuses stages that depend on all four distributions.
long long funnel_factored_count(int d, std::int64_t N,
                                const std::vector<StrategyCode>& prefix,
                                double threshold = 0.7499);

void write_report(const FunnelReport& report, std::ostream& out);

} // namespace coinsearch
