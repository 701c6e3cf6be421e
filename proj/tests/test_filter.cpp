#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coinsearch/filter.hpp"

#include <cmath>
#include <random>

using namespace coinsearch;

namespace {

std::mt19937_64 rng(90210);

ProbVec random_probvec(int n) {
    std::uniform_int_distribution<int> u(1, 9973);
    std::vector<Rational> v(n);
    Rational s = 0;
    for (auto& x : v) s += (x = Rational(u(rng)));
    for (auto& x : v) x /= s;
    return ProbVec(v);
}

ProtocolParams embedded() {
    return ProtocolParams(
        RoundSpec({3}, {2}),
        ProbVec({Rational(1, 2), Rational(0), Rational(1, 2)}),
        ProbVec({Rational(0), Rational(1, 2), Rational(1, 2)}),
        ProbVec({Rational(1), Rational(0)}), ProbVec({Rational(0), Rational(1)}));
}

ProtocolParams random_protocol(int da, int db, int n) {
    std::vector<int> ad(n, da), bd(n, db);
    int at = 1, bt = 1;
    for (int i = 0; i < n; ++i) at *= da, bt *= db;
    return ProtocolParams(RoundSpec(ad, bd), random_probvec(at), random_probvec(at),
                          random_probvec(bt), random_probvec(bt));
}

ProtocolParams swap_betas(const ProtocolParams& p) {
    return ProtocolParams(p.spec, p.alpha0, p.alpha1, p.beta1, p.beta0);
}

ProtocolParams swap_both(const ProtocolParams& p) {
    return ProtocolParams(p.spec, p.alpha1, p.alpha0, p.beta1, p.beta0);
}

ProtocolParams sixround_quarter() {
    return ProtocolParams(
        RoundSpec({2, 2}, {2, 2}),
        ProbVec({Rational(0), Rational(1, 3), Rational(1, 3), Rational(1, 3)}),
        ProbVec({Rational(1, 3), Rational(1, 3), Rational(0), Rational(1, 3)}),
        ProbVec({Rational(0), Rational(1, 4), Rational(0), Rational(3, 4)}),
        ProbVec({Rational(0), Rational(1, 4), Rational(3, 4), Rational(0)}));
}

} // namespace

TEST_CASE("eval_strategy: embedded protocol pinned values") {
    const auto p = embedded();
    CHECK(eval_strategy(p, StrategyCode::F1) == doctest::Approx(0.5));
    CHECK(eval_strategy(p, StrategyCode::F2) == doctest::Approx(0.75));
    CHECK(eval_strategy(p, StrategyCode::F6) == doctest::Approx(0.75));
    CHECK(eval_strategy(p, StrategyCode::F7) == doctest::Approx(0.75));
    CHECK(eval_strategy(p, StrategyCode::F12, 0.75) == doctest::Approx(2.0 / 3));
    SUBCASE("family mismatch and missing solver values are rejected") {
        CHECK_THROWS_AS((void)eval_strategy(p, StrategyCode::G1), std::invalid_argument);
        CHECK_THROWS_AS((void)eval_strategy(p, StrategyCode::F12), std::invalid_argument);
        CHECK_THROWS_AS((void)eval_strategy(p, StrategyCode::F4), std::invalid_argument);
    }
}

TEST_CASE("eval_strategy: G7 with identical alphas collapses to the known form") {
    const auto b0 = random_probvec(4), b1 = random_probvec(4);
    const auto a = random_probvec(4);
    ProtocolParams p(RoundSpec({2, 2}, {2, 2}), a, a, b0, b1);
    const double want = 0.5 * (1 + fidelity(b0.floats(), b1.floats()));
    CHECK(eval_strategy(p, StrategyCode::G7) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("filter chain inequalities on random protocols") {
    for (int trial = 0; trial < 60; ++trial) {
        const auto p = random_protocol(3, 3, 1);
        const double f1 = eval_strategy(p, StrategyCode::F1);
        const double f2 = eval_strategy(p, StrategyCode::F2);
        const double f3 = eval_strategy(p, StrategyCode::F3);
        const double f6 = eval_strategy(p, StrategyCode::F6);
        const double f7 = eval_strategy(p, StrategyCode::F7);
        const double f8 = eval_strategy(p, StrategyCode::F8);
        const double f10 = eval_strategy(p, StrategyCode::F10);
        CHECK(f10 >= f6 - 1e-9);
        CHECK(f6 >= f3 - 1e-9);
        CHECK(f8 >= f7 - 1e-9);
        CHECK(f7 >= std::max(f1, f2) - 1e-9);
    }
    for (int trial = 0; trial < 40; ++trial) {
        const auto p = random_protocol(2, 2, 2);
        const double g7 = eval_strategy(p, StrategyCode::G7);
        const double g3 = eval_strategy(p, StrategyCode::G3);
        // Bob's six-round three-round bound (the chain's last member)
        const auto mb0 = marginal(std::span<const double>(p.beta0.floats()),
                                  p.spec.b_dims, {2});
        const auto mb1 = marginal(std::span<const double>(p.beta1.floats()),
                                  p.spec.b_dims, {2});
        const double b7 =
            (0.5 + 0.5 * std::sqrt(fidelity(mb0, mb1))) *
            (0.5 + 0.5 * trace_distance(p.alpha0.floats(), p.alpha1.floats()));
        CHECK(g7 >= g3 - 1e-9);
        CHECK(g3 >= b7 - 1e-9);
    }
}

TEST_CASE("swap symmetries") {
    using SC = StrategyCode;
    for (int trial = 0; trial < 30; ++trial) {
        const auto p = random_protocol(3, 3, 1);
        const auto both = swap_both(p);
        for (SC code : {SC::F1, SC::F2, SC::F3, SC::F4, SC::F6, SC::F7, SC::F8, SC::F10})
            CHECK(eval_strategy(p, code) ==
                  doctest::Approx(eval_strategy(both, code)).epsilon(1e-12));
        const auto bswap = swap_betas(p);
        CHECK(eval_strategy(p, SC::F4) ==
              doctest::Approx(eval_strategy(bswap, SC::F5)).epsilon(1e-12));
        CHECK(eval_strategy(p, SC::F8) ==
              doctest::Approx(eval_strategy(bswap, SC::F9)).epsilon(1e-12));
        CHECK(eval_strategy(p, SC::F10) ==
              doctest::Approx(eval_strategy(bswap, SC::F11)).epsilon(1e-12));
    }
    for (int trial = 0; trial < 15; ++trial) {
        const auto p = random_protocol(2, 2, 2);
        const auto both = swap_both(p);
        for (SC code : {SC::G1, SC::G2, SC::G3, SC::G4, SC::G5, SC::G6, SC::G7, SC::G9})
            CHECK(eval_strategy(p, code) ==
                  doctest::Approx(eval_strategy(both, code)).epsilon(1e-12));
        const auto bswap = swap_betas(p);
        CHECK(eval_strategy(p, SC::G7) ==
              doctest::Approx(eval_strategy(bswap, SC::G8)).epsilon(1e-12));
        CHECK(eval_strategy(p, SC::G9) ==
              doctest::Approx(eval_strategy(bswap, SC::G10)).epsilon(1e-12));
    }
}

TEST_CASE("eta/tau tie convention: coinciding betas count toward eta") {
    const auto b = random_probvec(3);
    ProtocolParams p(RoundSpec({3}, {3}), random_probvec(3), random_probvec(3), b, b);
    // eta = 1, tau = 0, so the eigen bound is lambda_max of a single projector
    CHECK(eval_strategy(p, StrategyCode::F6) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("lower-bound soundness against solver uppers") {
    using SC = StrategyCode;
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = random_protocol(2, 2, 1);
        std::array<double, 4> upper{}; // A0 A1 B0 B1
        upper[0] = solve_cheating(p, Party::Alice, 0).upper;
        upper[1] = solve_cheating(p, Party::Alice, 1).upper;
        upper[2] = solve_cheating(p, Party::Bob, 0).upper;
        upper[3] = solve_cheating(p, Party::Bob, 1).upper;
        for (SC code : {SC::F1, SC::F2, SC::F3, SC::F4, SC::F5, SC::F6, SC::F7, SC::F8,
                        SC::F9, SC::F10, SC::F11}) {
            const auto& info = stage_info(code);
            const double bound = eval_strategy(p, code);
            const int slot = (info.party == Party::Alice ? 0 : 2) + info.outcome;
            CHECK(bound <= upper[slot] + 1e-6);
        }
        // Kitaev-implied bounds check against the opposite party
        CHECK(eval_strategy(p, SC::F12, upper[0]) <= upper[2] + 1e-6);
        CHECK(eval_strategy(p, SC::F13, upper[1]) <= upper[3] + 1e-6);
    }
}

TEST_CASE("run_filter: rejection bookkeeping") {
    SUBCASE("embedded protocol rejected at F2") {
        const auto p = embedded();
        const auto out = run_filter(p);
        REQUIRE(out.rejected_at.has_value());
        CHECK(*out.rejected_at == StrategyCode::F2);
        CHECK(!out.passed);
        REQUIRE(out.values.size() == 2);
        CHECK(out.values[0].second == doctest::Approx(0.5));
        CHECK(out.values[1].second == doctest::Approx(0.75));
    }
    SUBCASE("identical betas rejected immediately at F1 with value 1") {
        const auto b = random_probvec(2);
        ProtocolParams p(RoundSpec({2}, {2}), random_probvec(2), random_probvec(2), b, b);
        const auto out = run_filter(p);
        REQUIRE(out.rejected_at.has_value());
        CHECK(*out.rejected_at == StrategyCode::F1);
        CHECK(out.values[0].second == doctest::Approx(1.0));
    }
    SUBCASE("six-round bias-1/4 protocol passes at threshold 0.7501") {
        const auto p = sixround_quarter();
        const auto out = run_filter(p, 0.7501);
        CHECK(out.passed);
        for (const auto& [code, v] : out.values) {
            if (stage_info(code).formula_id != std::string("exact")) CHECK(v < 0.75);
        }
    }
    SUBCASE("values exactly at the threshold pass") {
        const auto p = embedded(); // F2 is exactly 0.75
        const auto out =
            run_filter(p, {StrategyCode::F1, StrategyCode::F2}, 0.75,
                       [](Party, int) -> double { throw std::logic_error("unused"); });
        CHECK(out.passed);
    }
}

TEST_CASE("strategy catalog is consistent") {
    CHECK(strategy_catalog().size() == 29);
    for (const auto& s : strategy_catalog()) {
        CHECK(parse_strategy_code(s.name) == s.code);
        CHECK((s.family == 0 || s.family == 4 || s.family == 6));
    }
    const auto order4 = default_filter_order(4);
    CHECK(order4.size() == 17);
    CHECK(order4.front() == StrategyCode::F1);
    CHECK(order4.back() == StrategyCode::SDPB1);
    const auto order6 = default_filter_order(6);
    CHECK(order6.size() == 16);
    CHECK(order6.front() == StrategyCode::G1);
    CHECK(order6.back() == StrategyCode::SDPA1);
    CHECK_THROWS_AS((void)default_filter_order(5), std::invalid_argument);
}
