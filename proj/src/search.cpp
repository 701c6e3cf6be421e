#include "coinsearch/search.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace coinsearch {

namespace {

using Vec = std::vector<double>;

double lmax2_scalar(double eta, double tau, double fid_pair) {
    const double disc = (eta - tau) * (eta - tau) + 4 * eta * tau * fid_pair;
    return 0.5 * (eta + tau + std::sqrt(disc));
}

// Everything about one (v0, v1) pair that the cheap filter stages need.
struct SideMemo {
    const ProbVec* v0 = nullptr;
    const ProbVec* v1 = nullptr;
    double f_pair = 0;  // F(v0, v1)
    double td_pair = 0; // Delta(v0, v1)
    double eta = 0, tau = 0;
    Vec m0, m1; // marginals over the second axis (n = 2 only)
    double f_marg = 0, td_marg = 0;
    double eta_m = 0, tau_m = 0;
    double kappa = 0, zeta = 0; // eta/tau in the alpha role
};

std::pair<double, double> eta_tau_of(std::span<const double> b0, std::span<const double> b1) {
    double eta = 0, tau = 0;
    for (std::size_t i = 0; i < b0.size(); ++i) {
        if (b0[i] >= b1[i])
            eta += b0[i];
        else
            tau += b1[i];
    }
    return {eta, tau};
}

SideMemo make_memo(const ProbVec& v0, const ProbVec& v1, const IndexShape& dims, int n) {
    SideMemo m;
    m.v0 = &v0;
    m.v1 = &v1;
    m.f_pair = fidelity(v0.floats(), v1.floats());
    m.td_pair = trace_distance(v0.floats(), v1.floats());
    std::tie(m.eta, m.tau) = eta_tau_of(v0.floats(), v1.floats());
    m.kappa = m.eta;
    m.zeta = m.tau;
    if (n == 2) {
        m.m0 = marginal(std::span<const double>(v0.floats()), dims, {2});
        m.m1 = marginal(std::span<const double>(v1.floats()), dims, {2});
        m.f_marg = fidelity(m.m0, m.m1);
        m.td_marg = trace_distance(m.m0, m.m1);
        std::tie(m.eta_m, m.tau_m) = eta_tau_of(m.m0, m.m1);
    }
    return m;
}

struct PipelineContext {
    SearchConfig cfg;
    RoundSpec spec;
    std::vector<StrategyCode> order;
    std::vector<std::pair<ProbVec, ProbVec>> apairs, bpairs;
    std::vector<SideMemo> amemos, bmemos;
    long long protocols_row = 0;
};

// Per-protocol scratch: lazily built full params plus the solver cache.
struct JointEval {
    const PipelineContext& ctx;
    const SideMemo& A;
    const SideMemo& B;
    std::optional<ProtocolParams> params;
    std::array<double, 4> solved{}; // A0, A1, B0, B1 uppers
    std::array<bool, 4> have{};
    bool solver_failed = false;

    JointEval(const PipelineContext& c, const SideMemo& a, const SideMemo& b)
        : ctx(c), A(a), B(b) {}

    const ProtocolParams& full_params() {
        if (!params)
            params.emplace(ctx.spec, *A.v0, *A.v1, *B.v0, *B.v1);
        return *params;
    }

    double solver_upper(Party party, int c) {
        const int slot = (party == Party::Alice ? 0 : 2) + c;
        if (!have[slot]) {
            solved[slot] = solve_cheating(full_params(), party, c, ctx.cfg.solver_tol,
                                          ctx.cfg.solver_max_iter)
                               .upper;
            have[slot] = true;
        }
        return solved[slot];
    }

    // value of one stage; std::nullopt means "stage skipped" (F4/F5 with
    // mismatched dimensions)
    std::optional<double> stage(StrategyCode code) {
        using SC = StrategyCode;
        switch (code) {
            case SC::F1:
            case SC::G1: return 0.5 + 0.5 * std::sqrt(B.f_pair);
            case SC::F2: return 0.5 + 0.5 * A.td_pair;
            case SC::F3:
                return (0.5 + 0.5 * std::sqrt(A.f_pair)) * (0.5 + 0.5 * B.td_pair);
            case SC::F4:
            case SC::F5:
                if (A.v0->size() != B.v0->size()) return std::nullopt;
                return eval_strategy(full_params(), code);
            case SC::F6:
            case SC::G5: return 0.5 * lmax2_scalar(B.eta, B.tau, A.f_pair);
            case SC::F7: {
                double acc = 0;
                for (std::size_t x = 0; x < A.v0->size(); ++x)
                    acc += lmax2_scalar(A.v0->fl(x), A.v1->fl(x), B.f_pair);
                return 0.5 * acc;
            }
            case SC::G2: return 0.5 + 0.5 * A.td_marg;
            case SC::G3: return 0.5 * lmax2_scalar(A.kappa, A.zeta, B.f_marg);
            case SC::G4:
                return (0.5 + 0.5 * std::sqrt(A.f_marg)) * (0.5 + 0.5 * B.td_marg);
            case SC::G6: return 0.5 * lmax2_scalar(B.eta_m, B.tau_m, A.f_marg);
            case SC::SDPA0: return solver_upper(Party::Alice, 0);
            case SC::SDPA1: return solver_upper(Party::Alice, 1);
            case SC::SDPB0: return solver_upper(Party::Bob, 0);
            case SC::SDPB1: return solver_upper(Party::Bob, 1);
            case SC::F12: return 1.0 / (2.0 * solver_upper(Party::Alice, 0));
            case SC::F13: return 1.0 / (2.0 * solver_upper(Party::Alice, 1));
            case SC::G11: return 1.0 / (2.0 * solver_upper(Party::Bob, 0));
            case SC::G12: return 1.0 / (2.0 * solver_upper(Party::Bob, 1));
            default: return eval_strategy(full_params(), code);
        }
    }

    // number of stages passed; order.size() means survivor. Solver failures
    // mark the protocol undecided and keep it (conservatively) to the end.
    std::size_t walk(double threshold) {
        for (std::size_t i = 0; i < ctx.order.size(); ++i) {
            std::optional<double> v;
            try {
                v = stage(ctx.order[i]);
            } catch (const std::exception&) {
                solver_failed = true;
                return ctx.order.size();
            }
            if (v && *v > threshold) return i;
        }
        return ctx.order.size();
    }

    FilterOutcome record(double threshold) {
        FilterOutcome out;
        for (StrategyCode code : ctx.order) {
            std::optional<double> v;
            try {
                v = stage(code);
            } catch (const std::exception&) {
                solver_failed = true;
                break;
            }
            if (!v) continue;
            out.values.emplace_back(code, *v);
            if (*v > threshold) {
                out.rejected_at = code;
                return out;
            }
        }
        out.passed = true;
        return out;
    }
};

struct ShardState {
    std::int64_t next_alpha = 0;
    std::vector<long long> pass;
    std::vector<SurvivorRecord> survivors;
};

nlohmann::json draft_to_json(const ProtocolDraft& d) {
    nlohmann::json j;
    j["rounds"] = d.rounds;
    j["a_dims"] = d.a_dims;
    j["b_dims"] = d.b_dims;
    const char* names[4] = {"alpha0", "alpha1", "beta0", "beta1"};
    for (int k = 0; k < 4; ++k) {
        std::vector<std::string> s;
        for (const auto& r : d.dists[k]) s.push_back(to_fraction_string(r));
        j[names[k]] = s;
    }
    return j;
}

ProtocolDraft draft_from_json(const nlohmann::json& j) {
    ProtocolDraft d;
    d.rounds = j.at("rounds").get<int>();
    d.a_dims = j.at("a_dims").get<std::vector<int>>();
    d.b_dims = j.at("b_dims").get<std::vector<int>>();
    const char* names[4] = {"alpha0", "alpha1", "beta0", "beta1"};
    for (int k = 0; k < 4; ++k)
        for (const auto& s : j.at(names[k]).get<std::vector<std::string>>())
            d.dists[k].push_back(parse_rational(s));
    return d;
}

nlohmann::json survivor_to_json(const SurvivorRecord& s) {
    nlohmann::json j;
    j["protocol"] = draft_to_json(s.protocol);
    nlohmann::json vals = nlohmann::json::array();
    for (const auto& [code, v] : s.outcome.values)
        vals.push_back({stage_info(code).name, v});
    j["values"] = vals;
    if (s.outcome.rejected_at) j["rejected_at"] = stage_info(*s.outcome.rejected_at).name;
    j["passed"] = s.outcome.passed;
    j["probs"] = s.probs;
    j["solved"] = s.solved;
    j["bias"] = s.bias;
    j["undecided"] = s.undecided;
    return j;
}

SurvivorRecord survivor_from_json(const nlohmann::json& j) {
    SurvivorRecord s;
    s.protocol = draft_from_json(j.at("protocol"));
    for (const auto& item : j.at("values"))
        s.outcome.values.emplace_back(parse_strategy_code(item.at(0).get<std::string>()),
                                      item.at(1).get<double>());
    if (j.contains("rejected_at"))
        s.outcome.rejected_at = parse_strategy_code(j.at("rejected_at").get<std::string>());
    s.outcome.passed = j.at("passed").get<bool>();
    const auto probs = j.at("probs").get<std::vector<double>>();
    const auto solved = j.at("solved").get<std::vector<bool>>();
    for (int k = 0; k < 4; ++k) {
        s.probs[k] = probs[k];
        s.solved[k] = solved[k];
    }
    s.bias = j.at("bias").get<double>();
    s.undecided = j.at("undecided").get<bool>();
    return s;
}

std::string config_key(const SearchConfig& cfg, const PipelineContext& ctx) {
    std::ostringstream os;
    os << cfg.rounds << "|" << cfg.d_a << "|" << cfg.d_b << "|" << cfg.N << "|"
       << cfg.threshold << "|" << static_cast<int>(cfg.mode) << "|" << cfg.offset_seed
       << "|" << to_fraction_string(cfg.zoom_step) << "|" << cfg.zoom_radius_steps << "|"
       << cfg.shards << "|" << ctx.apairs.size() << "x" << ctx.bpairs.size() << "|";
    for (auto c : ctx.order) os << stage_info(c).name << ",";
    return os.str();
}

std::string shard_checkpoint_path(const std::string& base, int shard) {
    return base + ".shard" + std::to_string(shard);
}

void save_shard(const std::string& base, const std::string& key, int shard,
                const ShardState& st) {
    nlohmann::json j;
    j["config_key"] = key;
    j["next_alpha"] = st.next_alpha;
    j["pass"] = st.pass;
    nlohmann::json sv = nlohmann::json::array();
    for (const auto& s : st.survivors) sv.push_back(survivor_to_json(s));
    j["survivors"] = sv;
    const std::string path = shard_checkpoint_path(base, shard);
    std::ofstream out(path + ".tmp");
    out << j.dump();
    out.close();
    std::rename((path + ".tmp").c_str(), path.c_str());
}

bool load_shard(const std::string& base, const std::string& key, int shard,
                ShardState& st) {
    std::ifstream in(shard_checkpoint_path(base, shard));
    if (!in) return false;
    nlohmann::json j;
    try {
        in >> j;
        if (j.at("config_key").get<std::string>() != key) return false;
        st.next_alpha = j.at("next_alpha").get<std::int64_t>();
        st.pass = j.at("pass").get<std::vector<long long>>();
        st.survivors.clear();
        for (const auto& item : j.at("survivors")) st.survivors.push_back(survivor_from_json(item));
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

void run_range(const PipelineContext& ctx, std::int64_t alpha_hi, ShardState& st,
               const std::string& ckpt_base, const std::string& key, int shard,
               std::int64_t max_steps) {
    const std::int64_t nb = static_cast<std::int64_t>(ctx.bpairs.size());
    std::int64_t steps = 0;
    for (std::int64_t ai = st.next_alpha; ai < alpha_hi; ++ai) {
        if (max_steps >= 0 && steps >= max_steps) break;
        const SideMemo& A = ctx.amemos[ai];
        for (std::int64_t bi = 0; bi < nb; ++bi) {
            JointEval ev(ctx, A, ctx.bmemos[bi]);
            const std::size_t reached = ev.walk(ctx.cfg.threshold);
            for (std::size_t k = 0; k < reached; ++k) st.pass[k]++;
            if (reached == ctx.order.size()) {
                SurvivorRecord rec;
                rec.undecided = ev.solver_failed;
                rec.outcome = ev.record(ctx.cfg.threshold);
                if (!ev.solver_failed) {
                    // complete the certificate picture for reported survivors
                    try {
                        for (int slot = 0; slot < 4; ++slot)
                            ev.solver_upper(slot < 2 ? Party::Alice : Party::Bob, slot % 2);
                    } catch (const std::exception&) {
                        rec.undecided = true;
                    }
                }
                rec.probs = ev.solved;
                rec.solved = ev.have;
                double mx = 0;
                for (int k = 0; k < 4; ++k)
                    if (ev.have[k]) mx = std::max(mx, ev.solved[k]);
                rec.bias = mx - 0.5;
                rec.protocol = to_draft(ev.full_params());
                st.survivors.push_back(std::move(rec));
            }
        }
        st.next_alpha = ai + 1;
        ++steps;
        if (!ckpt_base.empty() && (steps % 64 == 0)) save_shard(ckpt_base, key, shard, st);
    }
    if (!ckpt_base.empty()) save_shard(ckpt_base, key, shard, st);
}

std::string survivor_sort_key(const SurvivorRecord& s) {
    std::string key;
    for (const auto& dist : s.protocol.dists)
        for (const auto& r : dist) key += to_fraction_string(r) + " ";
    return key;
}

} // namespace

Rational draw_offset_delta(std::uint64_t seed, std::int64_t N) {
    std::mt19937_64 gen(seed);
    std::uint64_t k = 0;
    while (k == 0) k = gen() >> 11; // 53 random bits, excluding 0 (open interval)
    const BigInt two53 = BigInt(1) << 53;
    return Rational(BigInt(k), two53 * 2 * N);
}

std::vector<ProbVec> gen_offset_mesh(int d, std::int64_t N, const Rational& delta) {
    if (d < 1 || N < 1) throw std::invalid_argument("gen_offset_mesh: d, N must be >= 1");
    if (!(delta > 0) || !(delta < Rational(1, 2 * N)))
        throw std::invalid_argument("gen_offset_mesh: delta must lie in (0, 1/(2N))");
    std::vector<ProbVec> out;
    if (d == 1) {
        out.emplace_back(std::vector<Rational>{Rational(1)});
        return out;
    }
    std::vector<Rational> grid;
    for (std::int64_t j = 0; j < N; ++j) grid.push_back(delta + Rational(j, N));
    std::vector<Rational> buf;
    Rational sum = 0;
    std::function<void(int)> rec = [&](int pos) {
        if (pos == d - 1) {
            const Rational last = 1 - sum;
            if (last >= 0) {
                buf.push_back(last);
                out.emplace_back(buf);
                buf.pop_back();
            }
            return;
        }
        for (const Rational& g : grid) {
            if (sum + g > 1) break; // grid is increasing
            buf.push_back(g);
            sum += g;
            rec(pos + 1);
            sum -= g;
            buf.pop_back();
        }
    };
    rec(0);
    return out;
}

std::vector<ProbVec> zoom_candidates(const ProbVec& center, int radius_steps,
                                     const Rational& step) {
    if (radius_steps < 0 || radius_steps > 2)
        throw std::invalid_argument("zoom_candidates: radius must be 0, 1 or 2 steps");
    if (step <= 0) throw std::invalid_argument("zoom_candidates: step must be positive");
    const int d = static_cast<int>(center.size());
    if (radius_steps == 0) return {center};

    // the largest center entry absorbs the renormalization
    int absorb = 0;
    for (int i = 0; i < d; ++i)
        if (center.rational(i) >= center.rational(absorb)) absorb = i;

    std::vector<std::vector<Rational>> cands(d);
    for (int i = 0; i < d; ++i) {
        if (i == absorb) continue;
        for (int k = -radius_steps; k <= radius_steps; ++k) {
            Rational v = center.rational(i) + k * step;
            if (v < 0) v = 0;
            if (v > 1) v = 1;
            if (std::find(cands[i].begin(), cands[i].end(), v) == cands[i].end())
                cands[i].push_back(v);
        }
        std::sort(cands[i].begin(), cands[i].end());
    }

    std::vector<ProbVec> out;
    std::vector<Rational> buf(d);
    std::function<void(int, Rational)> rec = [&](int pos, Rational sum) {
        if (pos == d) {
            const Rational last = 1 - sum;
            if (last >= 0 && last <= 1) {
                buf[absorb] = last;
                out.emplace_back(buf);
            }
            return;
        }
        if (pos == absorb) {
            rec(pos + 1, sum);
            return;
        }
        for (const Rational& v : cands[pos]) {
            buf[pos] = v;
            rec(pos + 1, sum + v);
        }
    };
    rec(0, Rational(0));
    return out;
}

void enumerate_zoom(const ProtocolParams& center, int radius_steps, const Rational& step,
                    const std::function<void(const ProtocolParams&)>& fn) {
    const auto a0 = zoom_candidates(center.alpha0, radius_steps, step);
    const auto a1 = zoom_candidates(center.alpha1, radius_steps, step);
    const auto b0 = zoom_candidates(center.beta0, radius_steps, step);
    const auto b1 = zoom_candidates(center.beta1, radius_steps, step);
    for (const auto& va0 : a0)
        for (const auto& va1 : a1)
            for (const auto& vb0 : b0)
                for (const auto& vb1 : b1)
                    fn(ProtocolParams(center.spec, va0, va1, vb0, vb1));
}

FunnelReport run_search(const SearchConfig& config) {
    PipelineContext ctx;
    ctx.cfg = config;
    if (config.mode == SearchMode::Zoom && config.zoom_center)
        ctx.cfg.rounds = config.zoom_center->rounds; // the center defines the family
    const SearchConfig& cfg = ctx.cfg;
    const int n = cfg.rounds == 4 ? 1 : cfg.rounds == 6 ? 2 : 0;
    if (n == 0) throw std::invalid_argument("run_search: rounds must be 4 or 6");
    if (config.N < 1) throw std::invalid_argument("run_search: N must be >= 1");
    if (!(config.threshold > 0 && config.threshold < 1))
        throw std::invalid_argument("run_search: threshold must lie in (0, 1)");
    ctx.order = config.order.empty() ? default_filter_order(cfg.rounds) : config.order;
    for (StrategyCode code : ctx.order) {
        const auto& info = stage_info(code);
        if (info.family != 0 && info.family != cfg.rounds)
            throw std::invalid_argument(std::string("run_search: stage ") + info.name +
                                        " does not apply to this round count");
    }

    FunnelReport report;
    auto meta = [&](const std::string& k, const std::string& v) {
        report.metadata.emplace_back(k, v);
    };
    meta("mode", config.mode == SearchMode::Mesh     ? "mesh"
                 : config.mode == SearchMode::Offset ? "offset"
                                                     : "zoom");
    meta("rounds", std::to_string(cfg.rounds));
    meta("threshold", [&] {
        std::ostringstream os;
        os.precision(12);
        os << config.threshold;
        return os.str();
    }());

    if (config.mode == SearchMode::Zoom) {
        if (!config.zoom_center) throw std::invalid_argument("zoom mode needs a center");
        const ProtocolParams center = finalize(*config.zoom_center);
        ctx.spec = center.spec;
        const auto a0 = zoom_candidates(center.alpha0, config.zoom_radius_steps, config.zoom_step);
        const auto a1 = zoom_candidates(center.alpha1, config.zoom_radius_steps, config.zoom_step);
        const auto b0 = zoom_candidates(center.beta0, config.zoom_radius_steps, config.zoom_step);
        const auto b1 = zoom_candidates(center.beta1, config.zoom_radius_steps, config.zoom_step);
        for (const auto& va : a0)
            for (const auto& vb : a1) ctx.apairs.emplace_back(va, vb);
        for (const auto& va : b0)
            for (const auto& vb : b1) ctx.bpairs.emplace_back(va, vb);
        ctx.protocols_row = static_cast<long long>(a0.size()) * a1.size() * b0.size() *
                            b1.size();
        meta("zoom_step", to_fraction_string(config.zoom_step));
        meta("zoom_radius_steps", std::to_string(config.zoom_radius_steps));
    } else {
        std::vector<int> advec(n, config.d_a), bdvec(n, config.d_b);
        ctx.spec = RoundSpec(advec, bdvec);
        if (config.mode == SearchMode::Mesh) {
            ctx.apairs = canonical_mesh_pairs(ctx.spec.a_dims, n, config.N);
            ctx.bpairs = config.d_a == config.d_b
                             ? ctx.apairs
                             : canonical_mesh_pairs(ctx.spec.b_dims, n, config.N);
            const auto ma = mesh_size(static_cast<int>(ctx.spec.a_total()), config.N);
            const auto mb = mesh_size(static_cast<int>(ctx.spec.b_total()), config.N);
            ctx.protocols_row = ma * ma * mb * mb;
        } else {
            const Rational delta = draw_offset_delta(config.offset_seed, config.N);
            meta("offset_seed", std::to_string(config.offset_seed));
            meta("offset_delta", to_fraction_string(delta));
            const auto va = gen_offset_mesh(static_cast<int>(ctx.spec.a_total()), config.N, delta);
            const auto vb = config.d_a == config.d_b
                                ? va
                                : gen_offset_mesh(static_cast<int>(ctx.spec.b_total()),
                                                  config.N, delta);
            // offset grids break index symmetry; the pair swap survives
            auto swap_pairs = [](const std::vector<ProbVec>& vs) {
                std::vector<std::pair<ProbVec, ProbVec>> out;
                for (const auto& v0 : vs)
                    for (const auto& v1 : vs) {
                        const Rational m0 =
                            *std::max_element(v0.rationals().begin(), v0.rationals().end());
                        const Rational m1 =
                            *std::max_element(v1.rationals().begin(), v1.rationals().end());
                        if (m1 <= m0) out.emplace_back(v0, v1);
                    }
                return out;
            };
            ctx.apairs = swap_pairs(va);
            ctx.bpairs = config.d_a == config.d_b ? ctx.apairs : swap_pairs(vb);
            ctx.protocols_row = static_cast<long long>(va.size()) * va.size() * vb.size() *
                                vb.size();
        }
        meta("d_a", std::to_string(config.d_a));
        meta("d_b", std::to_string(config.d_b));
        meta("N", std::to_string(config.N));
    }

    ctx.amemos.reserve(ctx.apairs.size());
    for (const auto& [v0, v1] : ctx.apairs)
        ctx.amemos.push_back(make_memo(v0, v1, ctx.spec.a_dims, n));
    ctx.bmemos.reserve(ctx.bpairs.size());
    for (const auto& [v0, v1] : ctx.bpairs)
        ctx.bmemos.push_back(make_memo(v0, v1, ctx.spec.b_dims, n));

    const std::string key = config_key(cfg, ctx);
    const int shards = std::max(config.shards, 1);
    const std::int64_t na = static_cast<std::int64_t>(ctx.apairs.size());
    const std::int64_t chunk = (na + shards - 1) / std::max<std::int64_t>(shards, 1);

    std::vector<ShardState> states(shards);
    for (int s = 0; s < shards; ++s) {
        states[s].next_alpha = std::min<std::int64_t>(s * chunk, na);
        states[s].pass.assign(ctx.order.size(), 0);
        if (!config.checkpoint_path.empty())
            load_shard(config.checkpoint_path, key, s, states[s]);
    }

    auto work = [&](int s) {
        const std::int64_t hi = std::min<std::int64_t>((s + 1) * chunk, na);
        run_range(ctx, hi, states[s], config.checkpoint_path, key, s, config.max_alpha_steps);
    };
    if (shards == 1) {
        work(0);
    } else {
        std::vector<std::thread> threads;
        for (int s = 0; s < shards; ++s) threads.emplace_back(work, s);
        for (auto& t : threads) t.join();
    }

    // deterministic reduction: sum counters, merge survivor lists, sort
    std::vector<long long> pass(ctx.order.size(), 0);
    for (int s = 0; s < shards; ++s) {
        for (std::size_t k = 0; k < pass.size(); ++k) pass[k] += states[s].pass[k];
        for (auto& sv : states[s].survivors) report.survivors.push_back(std::move(sv));
        const std::int64_t hi = std::min<std::int64_t>((s + 1) * chunk, na);
        if (states[s].next_alpha < hi) report.complete = false;
    }
    std::stable_sort(report.survivors.begin(), report.survivors.end(),
                     [](const SurvivorRecord& x, const SurvivorRecord& y) {
                         return survivor_sort_key(x) < survivor_sort_key(y);
                     });

    report.stage_counts.emplace_back("Protocols", ctx.protocols_row);
    report.stage_counts.emplace_back(
        "Symmetry", static_cast<long long>(ctx.apairs.size()) *
                        static_cast<long long>(ctx.bpairs.size()));
    for (std::size_t k = 0; k < ctx.order.size(); ++k)
        report.stage_counts.emplace_back(stage_info(ctx.order[k]).name, pass[k]);
    return report;
}

long long funnel_factored_count(int d, std::int64_t N,
                                const std::vector<StrategyCode>& prefix, double threshold) {
    for (StrategyCode c : prefix)
        if (c != StrategyCode::F1 && c != StrategyCode::F2)
            throw std::invalid_argument(
                "funnel_factored_count: only the single-side stages F1 and F2 factor");
    const IndexShape dims({d});
    const auto pairs = canonical_mesh_pairs(dims, 1, N);
    const long long total = static_cast<long long>(pairs.size());
    bool use_f1 = false, use_f2 = false;
    for (StrategyCode c : prefix) {
        use_f1 |= c == StrategyCode::F1;
        use_f2 |= c == StrategyCode::F2;
    }
    long long pass_f1 = 0, pass_f2 = 0;
    for (const auto& [v0, v1] : pairs) {
        if (use_f1 &&
            0.5 + 0.5 * std::sqrt(fidelity(v0.floats(), v1.floats())) <= threshold)
            ++pass_f1;
        if (use_f2 && 0.5 + 0.5 * trace_distance(v0.floats(), v1.floats()) <= threshold)
            ++pass_f2;
    }
    const long long aside = use_f2 ? pass_f2 : total;
    const long long bside = use_f1 ? pass_f1 : total;
    return aside * bside;
}

void write_report(const FunnelReport& report, std::ostream& out) {
    for (const auto& [k, v] : report.metadata) out << "# " << k << "," << v << "\n";
    if (!report.complete) out << "# incomplete,true\n";
    out << "stage,count\n";
    for (const auto& [name, count] : report.stage_counts) out << name << "," << count << "\n";
    out << "survivors\n";
    out << "alpha0,alpha1,beta0,beta1,PA0,PA1,PB0,PB1,bias\n";
    char buf[64];
    auto fmt = [&](double v, bool have) {
        if (!have) return std::string("nan");
        std::snprintf(buf, sizeof buf, "%.12g", v);
        return std::string(buf);
    };
    for (const auto& s : report.survivors) {
        for (int k = 0; k < 4; ++k) {
            std::string cell;
            for (const auto& r : s.protocol.dists[k]) {
                if (!cell.empty()) cell += " ";
                cell += to_fraction_string(r);
            }
            out << cell << ",";
        }
        out << fmt(s.probs[0], s.solved[0]) << "," << fmt(s.probs[1], s.solved[1]) << ","
            << fmt(s.probs[2], s.solved[2]) << "," << fmt(s.probs[3], s.solved[3]) << ",";
        std::snprintf(buf, sizeof buf, "%.12g", s.bias);
        out << buf;
        if (s.undecided) out << ",undecided";
        out << "\n";
    }
}

} // namespace coinsearch
