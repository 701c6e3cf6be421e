#include "coinsearch/filter.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace coinsearch {

namespace {

using Vec = std::vector<double>;
using Span = std::span<const double>;

// eta = sum of b0 over coordinates where b0 >= b1 (ties count toward the
// first argument), tau = sum of b1 over the rest.
std::pair<double, double> eta_tau(Span b0, Span b1) {
    double eta = 0, tau = 0;
    for (std::size_t i = 0; i < b0.size(); ++i) {
        if (b0[i] >= b1[i])
            eta += b0[i];
        else
            tau += b1[i];
    }
    return {eta, tau};
}

double f1_ignoring(Span b0, Span b1) { return 0.5 + 0.5 * std::sqrt(fidelity(b0, b1)); }

double f2_measuring(Span a0, Span a1) { return 0.5 + 0.5 * trace_distance(a0, a1); }

double f3_three_round(Span a0, Span a1, Span b0, Span b1) {
    return (0.5 + 0.5 * std::sqrt(fidelity(a0, a1))) * (0.5 + 0.5 * trace_distance(b0, b1));
}

double f4_returning(Span a0, Span a1, Span b0, Span b1) {
    return 0.5 * (fidelity(a0, b0) + fidelity(a1, b1));
}

double f6_eigen(Span a0, Span a1, Span b0, Span b1) {
    auto [eta, tau] = eta_tau(b0, b1);
    return 0.5 * rank2_lambda_max(eta, tau, a0, a1);
}

double f7_eigen_lb(Span a0, Span a1, Span b0, Span b1) {
    double acc = 0;
    for (std::size_t x = 0; x < a0.size(); ++x)
        acc += rank2_lambda_max(a0[x], a1[x], b0, b1);
    return 0.5 * acc;
}

double f8_eigenstrategy(Span a0, Span a1, Span b0, Span b1) {
    Vec m0(b0.size(), 0.0), m1(b0.size(), 0.0);
    for (std::size_t x = 0; x < a0.size(); ++x) {
        if (a0[x] == 0 && a1[x] == 0) continue;
        const Vec vx = rank2_argmax(a0[x], a1[x], b0, b1);
        for (std::size_t y = 0; y < b0.size(); ++y) {
            m0[y] += a0[x] * vx[y];
            m1[y] += a1[x] * vx[y];
        }
    }
    return 0.5 * (fidelity(m0, b0) + fidelity(m1, b1));
}

double f10_improved_eigen(Span a0, Span a1, Span b0, Span b1) {
    auto [eta, tau] = eta_tau(b0, b1);
    const Vec v = rank2_argmax(eta, tau, a0, a1);
    double acc = 0;
    for (std::size_t y = 0; y < b0.size(); ++y)
        acc += hull_two_fidelities(0.5 * b0[y], a0, 0.5 * b1[y], a1, v);
    return acc;
}

double g3_eigen_lb(Span a0, Span a1, const Vec& mb0, const Vec& mb1) {
    auto [kappa, zeta] = eta_tau(a0, a1);
    return 0.5 * rank2_lambda_max(kappa, zeta, mb0, mb1);
}

double g7_eigenstrategy(Span a0, Span a1, Span b0, Span b1, const Vec& mb0, const Vec& mb1,
                        int b2) {
    auto [kappa, zeta] = eta_tau(a0, a1);
    const Vec c = rank2_argmax(kappa, zeta, mb0, mb1);
    const std::size_t b1dim = mb0.size();
    Vec m0(b0.size(), 0.0), m1(b0.size(), 0.0);
    for (std::size_t x = 0; x < a0.size(); ++x) {
        if (a0[x] == 0 && a1[x] == 0) continue;
        const bool g_is_0 = a0[x] >= a1[x];
        const Span bg = g_is_0 ? b0 : b1;
        const Vec& mbg = g_is_0 ? mb0 : mb1;
        for (std::size_t y1 = 0; y1 < b1dim; ++y1)
            for (int y2 = 0; y2 < b2; ++y2) {
                const std::size_t y = y1 * b2 + y2;
                const double p = mbg[y1] > 0 ? c[y1] * bg[y] / mbg[y1] : c[y1] / b2;
                m0[y] += a0[x] * p;
                m1[y] += a1[x] * p;
            }
    }
    return 0.5 * (fidelity(m0, b0) + fidelity(m1, b1));
}

} // namespace

const std::vector<StageInfo>& strategy_catalog() {
    using SC = StrategyCode;
    static const std::vector<StageInfo> table = {
        {SC::F1, "F1", "B1", Party::Bob, 0, 4, false},
        {SC::F2, "F2", "B2", Party::Bob, 0, 4, false},
        {SC::F3, "F3", "A3", Party::Alice, 0, 4, false},
        {SC::F4, "F4", "B8", Party::Bob, 0, 4, false},
        {SC::F5, "F5", "B8", Party::Bob, 1, 4, false},
        {SC::F6, "F6", "A2", Party::Alice, 0, 4, false},
        {SC::F7, "F7", "B4", Party::Bob, 0, 4, false},
        {SC::F8, "F8", "B3", Party::Bob, 0, 4, false},
        {SC::F9, "F9", "B3", Party::Bob, 1, 4, false},
        {SC::F10, "F10", "A1", Party::Alice, 0, 4, false},
        {SC::F11, "F11", "A1", Party::Alice, 1, 4, false},
        {SC::F12, "F12", "kitaev", Party::Bob, 0, 4, true},
        {SC::F13, "F13", "kitaev", Party::Bob, 1, 4, true},
        {SC::SDPA0, "SDPA0", "exact", Party::Alice, 0, 0, true},
        {SC::SDPA1, "SDPA1", "exact", Party::Alice, 1, 0, true},
        {SC::SDPB0, "SDPB0", "exact", Party::Bob, 0, 0, true},
        {SC::SDPB1, "SDPB1", "exact", Party::Bob, 1, 0, true},
        {SC::G1, "G1", "B1", Party::Bob, 0, 6, false},
        {SC::G2, "G2", "B2", Party::Bob, 0, 6, false},
        {SC::G3, "G3", "B6", Party::Bob, 0, 6, false},
        {SC::G4, "G4", "A5", Party::Alice, 0, 6, false},
        {SC::G5, "G5", "A2", Party::Alice, 0, 6, false},
        {SC::G6, "G6", "A4", Party::Alice, 0, 6, false},
        {SC::G7, "G7", "B5", Party::Bob, 0, 6, false},
        {SC::G8, "G8", "B5", Party::Bob, 1, 6, false},
        {SC::G9, "G9", "A1", Party::Alice, 0, 6, false},
        {SC::G10, "G10", "A1", Party::Alice, 1, 6, false},
        {SC::G11, "G11", "kitaev", Party::Alice, 0, 6, true},
        {SC::G12, "G12", "kitaev", Party::Alice, 1, 6, true},
    };
    return table;
}

const StageInfo& stage_info(StrategyCode code) {
    for (const auto& s : strategy_catalog())
        if (s.code == code) return s;
    throw std::invalid_argument("unknown strategy code");
}

StrategyCode parse_strategy_code(const std::string& name) {
    for (const auto& s : strategy_catalog())
        if (name == s.name) return s.code;
    throw std::invalid_argument("unknown strategy code: " + name);
}

std::vector<StrategyCode> default_filter_order(int rounds) {
    using SC = StrategyCode;
    if (rounds == 4)
        return {SC::F1, SC::F2, SC::F3, SC::F4, SC::F5, SC::F6, SC::F7, SC::F8, SC::F9,
                SC::F10, SC::F11, SC::SDPA0, SC::F12, SC::SDPB0, SC::SDPA1, SC::F13,
                SC::SDPB1};
    if (rounds == 6)
        return {SC::G1, SC::G2, SC::G3, SC::G4, SC::G5, SC::G6, SC::G7, SC::G8, SC::G9,
                SC::G10, SC::SDPB0, SC::G11, SC::SDPA0, SC::SDPB1, SC::G12, SC::SDPA1};
    throw std::invalid_argument("default_filter_order: rounds must be 4 or 6");
}

double eval_strategy(const ProtocolParams& params, StrategyCode code,
                     std::optional<double> solver_value) {
    using SC = StrategyCode;
    const StageInfo& info = stage_info(code);
    const int rounds = 2 * params.spec.n + 2;
    if (info.family != 0 && info.family != rounds)
        throw std::invalid_argument(std::string("strategy ") + info.name +
                                    " does not apply to a " + std::to_string(rounds) +
                                    "-round protocol");

    const Span a0 = params.alpha0.floats(), a1 = params.alpha1.floats();
    const Span b0 = params.beta0.floats(), b1 = params.beta1.floats();

    switch (code) {
        case SC::F1: return f1_ignoring(b0, b1);
        case SC::F2: return f2_measuring(a0, a1);
        case SC::F3: return f3_three_round(a0, a1, b0, b1);
        case SC::F4:
        case SC::F5:
            if (a0.size() != b0.size())
                throw std::invalid_argument("returning strategy needs |A| = |B|");
            return code == SC::F4 ? f4_returning(a0, a1, b0, b1)
                                  : f4_returning(a0, a1, b1, b0);
        case SC::F6: return f6_eigen(a0, a1, b0, b1);
        case SC::F7: return f7_eigen_lb(a0, a1, b0, b1);
        case SC::F8: return f8_eigenstrategy(a0, a1, b0, b1);
        case SC::F9: return f8_eigenstrategy(a0, a1, b1, b0);
        case SC::F10: return f10_improved_eigen(a0, a1, b0, b1);
        case SC::F11: return f10_improved_eigen(a0, a1, b1, b0);
        case SC::F12:
        case SC::F13:
        case SC::G11:
        case SC::G12:
            if (!solver_value)
                throw std::invalid_argument("Kitaev-implied strategy needs the solver value");
            return 1.0 / (2.0 * *solver_value);
        case SC::SDPA0:
        case SC::SDPA1:
        case SC::SDPB0:
        case SC::SDPB1:
            if (!solver_value)
                throw std::invalid_argument("SDP stage needs the solver value");
            return *solver_value;
        default: break;
    }

    // six-round codes: marginals over the second message space
    const Vec ma0 = marginal(a0, params.spec.a_dims, {2});
    const Vec ma1 = marginal(a1, params.spec.a_dims, {2});
    const Vec mb0 = marginal(b0, params.spec.b_dims, {2});
    const Vec mb1 = marginal(b1, params.spec.b_dims, {2});
    const int b2 = params.spec.b_dims.dims[1];

    switch (code) {
        case SC::G1: return f1_ignoring(b0, b1);
        case SC::G2: return f2_measuring(ma0, ma1);
        case SC::G3: return g3_eigen_lb(a0, a1, mb0, mb1);
        case SC::G4: return f3_three_round(ma0, ma1, mb0, mb1);
        case SC::G5: return f6_eigen(a0, a1, b0, b1);
        case SC::G6: {
            auto [ep, tp] = eta_tau(mb0, mb1);
            return 0.5 * rank2_lambda_max(ep, tp, ma0, ma1);
        }
        case SC::G7: return g7_eigenstrategy(a0, a1, b0, b1, mb0, mb1, b2);
        case SC::G8: return g7_eigenstrategy(a0, a1, b1, b0, mb1, mb0, b2);
        case SC::G9: return f10_improved_eigen(a0, a1, b0, b1);
        case SC::G10: return f10_improved_eigen(a0, a1, b1, b0);
        default: throw std::invalid_argument("unhandled strategy code");
    }
}

SolverHook default_solver_hook(const ProtocolParams& params, double tol, int max_iter) {
    return [&params, tol, max_iter](Party party, int c) {
        return solve_cheating(params, party, c, tol, max_iter).upper;
    };
}

FilterOutcome run_filter(const ProtocolParams& params,
                         const std::vector<StrategyCode>& order, double threshold,
                         const SolverHook& solver_hook) {
    using SC = StrategyCode;
    FilterOutcome out;
    std::map<std::pair<Party, int>, double> solved;
    auto solver_value = [&](Party p, int c) {
        auto key = std::make_pair(p, c);
        auto it = solved.find(key);
        if (it == solved.end()) it = solved.emplace(key, solver_hook(p, c)).first;
        return it->second;
    };

    for (StrategyCode code : order) {
        const StageInfo& info = stage_info(code);
        if ((code == SC::F4 || code == SC::F5) &&
            params.spec.a_total() != params.spec.b_total())
            continue; // returning strategies need matching message dimensions
        double value;
        if (code == SC::SDPA0 || code == SC::SDPA1 || code == SC::SDPB0 ||
            code == SC::SDPB1) {
            value = solver_value(info.party, info.outcome);
        } else if (code == SC::F12 || code == SC::F13) {
            value = eval_strategy(params, code, solver_value(Party::Alice, info.outcome));
        } else if (code == SC::G11 || code == SC::G12) {
            value = eval_strategy(params, code, solver_value(Party::Bob, info.outcome));
        } else {
            value = eval_strategy(params, code);
        }
        out.values.emplace_back(code, value);
        if (value > threshold) {
            out.rejected_at = code;
            out.passed = false;
            return out;
        }
    }
    out.passed = true;
    return out;
}

FilterOutcome run_filter(const ProtocolParams& params, double threshold, double solver_tol) {
    return run_filter(params, default_filter_order(2 * params.spec.n + 2), threshold,
                      default_solver_hook(params, solver_tol));
}

} // namespace coinsearch
