#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coinsearch/search.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

using namespace coinsearch;

namespace {

long long stage_count(const FunnelReport& r, const std::string& name) {
    for (const auto& [k, v] : r.stage_counts)
        if (k == name) return v;
    return -1;
}

std::string report_string(const FunnelReport& r) {
    std::ostringstream os;
    write_report(r, os);
    return os.str();
}

ProtocolDraft zoom_center_4r() {
    ProtocolDraft d;
    d.rounds = 4;
    d.a_dims = {5};
    d.b_dims = {5};
    d.dists[0] = {Rational(0), Rational(0), Rational(0), Rational(1, 2), Rational(1, 2)};
    d.dists[1] = {Rational(0), Rational(0), Rational(1, 2), Rational(0), Rational(1, 2)};
    d.dists[2] = {Rational(0), Rational(0), Rational(0), Rational(0), Rational(1)};
    d.dists[3] = {Rational(0), Rational(0), Rational(0), Rational(1), Rational(0)};
    return d;
}

} // namespace

TEST_CASE("gen_offset_mesh: construction and exact sums") {
    const Rational delta(1, 10);
    const auto vs = gen_offset_mesh(2, 3, delta);
    REQUIRE(vs.size() == 3);
    CHECK(vs[0].rational(0) == Rational(1, 10));
    CHECK(vs[1].rational(0) == Rational(1, 10) + Rational(1, 3));
    CHECK(vs[2].rational(0) == Rational(1, 10) + Rational(2, 3));
    for (const auto& v : vs) {
        Rational s = 0;
        for (const auto& r : v.rationals()) s += r;
        CHECK(s == 1);
    }
    CHECK_THROWS_AS((void)gen_offset_mesh(2, 3, Rational(1, 4)), std::invalid_argument);
    CHECK_THROWS_AS((void)gen_offset_mesh(2, 3, Rational(0)), std::invalid_argument);

    const auto d4 = gen_offset_mesh(4, 5, draw_offset_delta(99, 5));
    for (const auto& v : d4) {
        Rational s = 0;
        for (const auto& r : v.rationals()) s += r;
        CHECK(s == 1);
        for (const auto& r : v.rationals()) CHECK(r >= 0);
    }
}

TEST_CASE("draw_offset_delta: deterministic and in range") {
    const auto d1 = draw_offset_delta(12345, 100);
    const auto d2 = draw_offset_delta(12345, 100);
    CHECK(d1 == d2);
    CHECK(d1 > 0);
    CHECK(d1 < Rational(1, 200));
    CHECK(draw_offset_delta(54321, 100) != d1);
}

TEST_CASE("zoom_candidates: radius, clipping and absorption") {
    const ProbVec center({Rational(1, 2), Rational(1, 2)});
    SUBCASE("radius 0 returns only the center") {
        const auto c = zoom_candidates(center, 0, Rational(1, 10));
        REQUIRE(c.size() == 1);
        CHECK(c[0] == center);
    }
    SUBCASE("d=2 center (1/2,1/2) with radius 2 steps of 1/10 gives 5 vectors") {
        const auto c = zoom_candidates(center, 2, Rational(1, 10));
        CHECK(c.size() == 5);
        for (const auto& v : c) {
            Rational s = 0;
            for (const auto& r : v.rationals()) s += r;
            CHECK(s == 1);
        }
    }
    SUBCASE("per-distribution candidate count is bounded by 5^d") {
        const ProbVec c3({Rational(1, 3), Rational(1, 3), Rational(1, 3)});
        const auto c = zoom_candidates(c3, 2, Rational(1, 100));
        CHECK(c.size() <= 125);
    }
    SUBCASE("the first near-optimal zoning-in center yields 135/135/81/81") {
        const auto center4 = finalize(zoom_center_4r());
        const Rational step(1, 10000000000LL);
        CHECK(zoom_candidates(center4.alpha0, 2, step).size() == 135);
        CHECK(zoom_candidates(center4.alpha1, 2, step).size() == 135);
        CHECK(zoom_candidates(center4.beta0, 2, step).size() == 81);
        CHECK(zoom_candidates(center4.beta1, 2, step).size() == 81);
    }
}

TEST_CASE("funnel_factored_count: d=2 nu=1/500 rows") {
    using SC = StrategyCode;
    CHECK(funnel_factored_count(2, 500, {}) == 3969126001LL);
    CHECK(funnel_factored_count(2, 500, {SC::F1}) == 96706535LL);
    CHECK(funnel_factored_count(2, 500, {SC::F1, SC::F2}) == 72336875LL);
    CHECK_THROWS_AS((void)funnel_factored_count(2, 10, {SC::F3}), std::invalid_argument);
}

TEST_CASE("funnel_factored_count: d=2 nu=1/1000 rows and the F3 pass") {
    using SC = StrategyCode;
    CHECK(funnel_factored_count(2, 1000, {}) == 251001LL * 251001LL);
    CHECK(funnel_factored_count(2, 1000, {SC::F1}) == 1499479974LL);
    CHECK(funnel_factored_count(2, 1000, {SC::F1, SC::F2}) == 1123112000LL);
    const auto pairs = canonical_mesh_pairs(IndexShape({2}), 1, 1000);
    std::vector<double> aside, bside;
    for (const auto& [v0, v1] : pairs) {
        const double f = fidelity(v0.floats(), v1.floats());
        const double td = trace_distance(v0.floats(), v1.floats());
        if (0.5 + 0.5 * td <= 0.7499) aside.push_back(0.5 + 0.5 * std::sqrt(f));
        if (0.5 + 0.5 * std::sqrt(f) <= 0.7499) bside.push_back(0.5 + 0.5 * td);
    }
    std::sort(bside.begin(), bside.end());
    long long f3 = 0;
    for (const double a : aside)
        f3 += std::partition_point(bside.begin(), bside.end(),
                                   [&](double b) { return a * b <= 0.7499; }) -
              bside.begin();
    CHECK(f3 == 27);
}

TEST_CASE("enumerate_zoom covers the candidate product") {
    ProtocolDraft d;
    d.rounds = 4;
    d.a_dims = {2};
    d.b_dims = {2};
    d.dists[0] = {Rational(1, 4), Rational(3, 4)};
    d.dists[1] = {Rational(1, 2), Rational(1, 2)};
    d.dists[2] = {Rational(0), Rational(1)};
    d.dists[3] = {Rational(1), Rational(0)};
    const auto center = finalize(d);
    const Rational step(1, 10);
    std::size_t want = 1;
    for (const ProbVec* v : {&center.alpha0, &center.alpha1, &center.beta0, &center.beta1})
        want *= zoom_candidates(*v, 1, step).size();
    std::size_t got = 0;
    enumerate_zoom(center, 1, step, [&](const ProtocolParams& p) {
        ++got;
        CHECK(validate(to_draft(p)).empty());
    });
    CHECK(got == want);
    CHECK(got > 1);
}

TEST_CASE("run_search: four-round d=3 nu=1/10 funnel (pinned counts)") {
    SearchConfig cfg;
    cfg.rounds = 4;
    cfg.d_a = cfg.d_b = 3;
    cfg.N = 10;
    const auto r = run_search(cfg);
    CHECK(stage_count(r, "Symmetry") == 272484);
    CHECK(stage_count(r, "F1") == 37584);
    CHECK(stage_count(r, "F2") == 19656);
    CHECK(stage_count(r, "F3") == 470);
    CHECK(stage_count(r, "F4") == 261);
    CHECK(stage_count(r, "F5") == 258);
    CHECK(stage_count(r, "F6") == 241);
    CHECK(stage_count(r, "F7") == 3);
    CHECK(stage_count(r, "F8") == 0);
    CHECK(r.survivors.empty());
}

TEST_CASE("run_search: six-round d=2 nu=1/4 funnel (pinned counts)") {
    SearchConfig cfg;
    cfg.rounds = 6;
    cfg.d_a = cfg.d_b = 2;
    cfg.N = 4;
    const auto r = run_search(cfg);
    CHECK(stage_count(r, "Symmetry") == 59049);
    CHECK(stage_count(r, "G1") == 20412);
    CHECK(stage_count(r, "G2") == 12516);
    CHECK(stage_count(r, "G3") == 9627);
    CHECK(stage_count(r, "G4") == 4206);
    CHECK(stage_count(r, "G5") == 684);
    CHECK(stage_count(r, "G6") == 684);
    CHECK(stage_count(r, "G7") == 48);
    CHECK(stage_count(r, "G8") == 0);
    CHECK(r.survivors.empty());
}

TEST_CASE("run_search: six-round d=2 nu=1/6 funnel reaches the solver (pinned counts)") {
    SearchConfig cfg;
    cfg.rounds = 6;
    cfg.d_a = cfg.d_b = 2;
    cfg.N = 6;
    const auto r = run_search(cfg);
    CHECK(stage_count(r, "Symmetry") == 1517824);
    CHECK(stage_count(r, "G1") == 389312);
    CHECK(stage_count(r, "G2") == 272392);
    CHECK(stage_count(r, "G3") == 223034);
    CHECK(stage_count(r, "G4") == 105050);
    CHECK(stage_count(r, "G5") == 20373);
    CHECK(stage_count(r, "G6") == 20373);
    CHECK(stage_count(r, "G7") == 1865);
    CHECK(stage_count(r, "G8") == 164);
    CHECK(stage_count(r, "G9") == 164);
    CHECK(stage_count(r, "G10") == 164);
    CHECK(stage_count(r, "SDPB0") == 0); // the solver rejects the last 164
    CHECK(r.survivors.empty());
}

TEST_CASE("run_search: four-round d=3 nu=1/5 funnel (pinned counts)") {
    SearchConfig cfg;
    cfg.rounds = 4;
    cfg.d_a = cfg.d_b = 3;
    cfg.N = 5;
    const auto r = run_search(cfg);
    CHECK(stage_count(r, "Protocols") == 194481);
    CHECK(stage_count(r, "Symmetry") == 4356);
    CHECK(stage_count(r, "F1") == 1254);
    CHECK(stage_count(r, "F2") == 665);
    CHECK(stage_count(r, "F3") == 49);
    CHECK(stage_count(r, "F4") == 29);
    CHECK(stage_count(r, "F5") == 28);
    CHECK(stage_count(r, "F6") == 28);
    CHECK(stage_count(r, "F7") == 0);
    CHECK(r.survivors.empty());
    CHECK(r.complete);
}

TEST_CASE("run_search: six-round d=2 nu=1/3 funnel (pinned counts)") {
    SearchConfig cfg;
    cfg.rounds = 6;
    cfg.d_a = cfg.d_b = 2;
    cfg.N = 3;
    const auto r = run_search(cfg);
    CHECK(stage_count(r, "Symmetry") == 6400);
    CHECK(stage_count(r, "G1") == 3200);
    CHECK(stage_count(r, "G2") == 2320);
    CHECK(stage_count(r, "G3") == 1725);
    CHECK(stage_count(r, "G4") == 714);
    CHECK(stage_count(r, "G5") == 210);
    CHECK(stage_count(r, "G6") == 210);
    CHECK(stage_count(r, "G7") == 30);
    CHECK(stage_count(r, "G8") == 0);
    CHECK(r.survivors.empty());
}

TEST_CASE("run_search: funnel counts are nonincreasing") {
    SearchConfig cfg;
    cfg.rounds = 4;
    cfg.d_a = cfg.d_b = 2;
    cfg.N = 7;
    const auto r = run_search(cfg);
    for (std::size_t i = 2; i + 1 < r.stage_counts.size(); ++i)
        CHECK(r.stage_counts[i + 1].second <= r.stage_counts[i].second);
}

TEST_CASE("run_search: deterministic across runs and shard counts") {
    SearchConfig cfg;
    cfg.rounds = 4;
    cfg.d_a = cfg.d_b = 2;
    cfg.N = 6;
    const auto r1 = run_search(cfg);
    const auto r2 = run_search(cfg);
    CHECK(report_string(r1) == report_string(r2));
    cfg.shards = 3;
    const auto r3 = run_search(cfg);
    CHECK(report_string(r1) == report_string(r3));

    SearchConfig off;
    off.rounds = 4;
    off.d_a = off.d_b = 2;
    off.N = 4;
    off.mode = SearchMode::Offset;
    off.offset_seed = 7;
    const auto o1 = run_search(off);
    off.shards = 2;
    const auto o2 = run_search(off);
    CHECK(report_string(o1) == report_string(o2));
}

TEST_CASE("run_search: checkpointed run resumes to the identical report") {
    namespace fs = std::filesystem;
    const std::string base = (fs::temp_directory_path() / "coinsearch_ckpt_test").string();
    for (int s = 0; s < 2; ++s) std::remove((base + ".shard" + std::to_string(s)).c_str());

    SearchConfig cfg;
    cfg.rounds = 4;
    cfg.d_a = cfg.d_b = 2;
    cfg.N = 5;
    cfg.shards = 2;
    const auto full = run_search(cfg);

    cfg.checkpoint_path = base;
    cfg.max_alpha_steps = 3; // stop mid-shard
    const auto partial = run_search(cfg);
    CHECK(!partial.complete);

    cfg.max_alpha_steps = -1; // resume to completion
    const auto resumed = run_search(cfg);
    CHECK(resumed.complete);

    cfg.checkpoint_path.clear();
    CHECK(report_string(resumed) == report_string(full));
    for (int s = 0; s < 2; ++s) std::remove((base + ".shard" + std::to_string(s)).c_str());
}

TEST_CASE("run_search: offset mode keeps the swap symmetry only") {
    SearchConfig cfg;
    cfg.rounds = 4;
    cfg.d_a = cfg.d_b = 2;
    cfg.N = 3;
    cfg.mode = SearchMode::Offset;
    cfg.offset_seed = 11;
    const auto r = run_search(cfg);
    // 3 offset vectors per side; pairs keep max(v1) <= max(v0): the grid has
    // distinct maxima so exactly half the off-diagonal pairs survive
    CHECK(stage_count(r, "Protocols") == 81);
    CHECK(stage_count(r, "Symmetry") == 36); // 6^2: 6 = 3 diagonal + 3 ordered
    bool found_delta = false;
    for (const auto& [k, v] : r.metadata) found_delta |= (k == "offset_delta");
    CHECK(found_delta);
}

TEST_CASE("every generated candidate validates as a protocol") {
    auto check_all = [](const std::vector<ProbVec>& vs, int rounds, std::vector<int> dims) {
        for (const auto& v : vs) {
            ProtocolDraft d;
            d.rounds = rounds;
            d.a_dims = dims;
            d.b_dims = dims;
            d.dists = {v.rationals(), v.rationals(), v.rationals(), v.rationals()};
            CHECK(validate(d).empty());
        }
    };
    check_all(gen_mesh(3, 4), 4, {3});
    check_all(gen_mesh(4, 3), 6, {2, 2});
    check_all(gen_offset_mesh(3, 4, draw_offset_delta(5, 4)), 4, {3});
    const ProbVec center({Rational(1, 4), Rational(3, 4)});
    check_all(zoom_candidates(center, 2, Rational(1, 8)), 4, {2});
}

TEST_CASE("report format: stage table then survivor section") {
    SearchConfig cfg;
    cfg.rounds = 4;
    cfg.d_a = cfg.d_b = 2;
    cfg.N = 2;
    const auto r = run_search(cfg);
    const std::string s = report_string(r);
    CHECK(s.find("stage,count\n") != std::string::npos);
    CHECK(s.find("survivors\n") != std::string::npos);
    CHECK(s.find("alpha0,alpha1,beta0,beta1,PA0,PA1,PB0,PB1,bias\n") != std::string::npos);
}

TEST_CASE("zoom search: the alpha-degenerate near-optimal center has no better neighbour") {
    // every perturbation of this bias-1/4 protocol is rejected, the last
    // borderline ones by the solver itself
    SearchConfig cfg;
    cfg.mode = SearchMode::Zoom;
    ProtocolDraft center;
    center.rounds = 4;
    center.a_dims = {5};
    center.b_dims = {5};
    center.dists[0] = {Rational(0), Rational(0), Rational(0), Rational(0), Rational(1)};
    center.dists[1] = center.dists[0];
    center.dists[2] = {Rational(0), Rational(0), Rational(0), Rational(1, 2), Rational(1, 2)};
    center.dists[3] = {Rational(0), Rational(0), Rational(1, 2), Rational(0), Rational(1, 2)};
    cfg.zoom_center = center;
    cfg.zoom_step = Rational(1, 10000000000LL);
    cfg.zoom_radius_steps = 2;
    cfg.threshold = 0.75;
    cfg.shards = 2;
    const auto r = run_search(cfg);
    CHECK(stage_count(r, "Protocols") == 119574225LL);
    CHECK(stage_count(r, "F11") == 1672);
    CHECK(stage_count(r, "SDPA0") == 0);
    CHECK(r.survivors.empty());
}

TEST_CASE("zoom search: radius-0 ball contains only the center") {
    SearchConfig cfg;
    cfg.rounds = 4;
    cfg.mode = SearchMode::Zoom;
    cfg.zoom_center = zoom_center_4r();
    cfg.zoom_radius_steps = 0;
    cfg.zoom_step = Rational(1, 10);
    cfg.threshold = 0.76; // the center itself survives at this threshold
    const auto r = run_search(cfg);
    CHECK(stage_count(r, "Protocols") == 1);
    REQUIRE(r.survivors.size() == 1);
    CHECK(r.survivors[0].bias == doctest::Approx(0.25).epsilon(1e-4));
    CHECK(!r.survivors[0].undecided);
}
