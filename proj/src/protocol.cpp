#include "coinsearch/protocol.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace coinsearch {

RoundSpec::RoundSpec(std::vector<int> a, std::vector<int> b)
    : n(static_cast<int>(a.size())), a_dims(std::move(a)), b_dims(std::move(b)) {
    if (a_dims.axes() != b_dims.axes())
        throw std::invalid_argument("RoundSpec: a_dims and b_dims need the same round count");
}

ProtocolParams::ProtocolParams(RoundSpec s, ProbVec a0, ProbVec a1, ProbVec b0, ProbVec b1)
    : spec(std::move(s)), alpha0(std::move(a0)), alpha1(std::move(a1)),
      beta0(std::move(b0)), beta1(std::move(b1)) {
    if (static_cast<std::int64_t>(alpha0.size()) != spec.a_total() ||
        static_cast<std::int64_t>(alpha1.size()) != spec.a_total() ||
        static_cast<std::int64_t>(beta0.size()) != spec.b_total() ||
        static_cast<std::int64_t>(beta1.size()) != spec.b_total())
        throw std::invalid_argument("ProtocolParams: distribution length does not match dims");
}

std::vector<std::string> validate(const ProtocolDraft& draft) {
    std::vector<std::string> errors;
    const int n = static_cast<int>(draft.a_dims.size());
    if (draft.rounds != 2 * n + 2)
        errors.push_back("rounds must equal 2*n+2 for n commitment exchanges");
    if (draft.a_dims.empty()) errors.push_back("a_dims is empty");
    if (draft.b_dims.size() != draft.a_dims.size())
        errors.push_back("a_dims and b_dims must have the same number of rounds");
    for (int d : draft.a_dims)
        if (d < 1) errors.push_back("a_dims entries must be >= 1");
    for (int d : draft.b_dims)
        if (d < 1) errors.push_back("b_dims entries must be >= 1");

    std::int64_t at = 1, bt = 1;
    for (int d : draft.a_dims) at *= std::max(d, 1);
    for (int d : draft.b_dims) bt *= std::max(d, 1);

    static const char* names[4] = {"alpha0", "alpha1", "beta0", "beta1"};
    for (int k = 0; k < 4; ++k) {
        const auto& v = draft.dists[k];
        const std::int64_t want = k < 2 ? at : bt;
        if (static_cast<std::int64_t>(v.size()) != want) {
            errors.push_back(std::string(names[k]) + " has wrong length");
            continue;
        }
        Rational sum = 0;
        bool neg = false;
        for (const Rational& e : v) {
            if (e < 0) neg = true;
            sum += e;
        }
        if (neg) errors.push_back(std::string(names[k]) + " has a negative entry");
        if (sum != 1)
            errors.push_back(std::string(names[k]) + " sums to " + to_fraction_string(sum) +
                             ", not 1");
    }
    return errors;
}

ProtocolParams finalize(const ProtocolDraft& draft) {
    auto errors = validate(draft);
    if (!errors.empty()) {
        std::string msg = "invalid protocol:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw std::invalid_argument(msg);
    }
    RoundSpec spec(draft.a_dims, draft.b_dims);
    return ProtocolParams(spec, ProbVec(draft.dists[0]), ProbVec(draft.dists[1]),
                          ProbVec(draft.dists[2]), ProbVec(draft.dists[3]));
}

ProtocolDraft to_draft(const ProtocolParams& p) {
    ProtocolDraft d;
    d.rounds = 2 * p.spec.n + 2;
    d.a_dims = p.spec.a_dims.dims;
    d.b_dims = p.spec.b_dims.dims;
    d.dists = {p.alpha0.rationals(), p.alpha1.rationals(), p.beta0.rationals(),
               p.beta1.rationals()};
    return d;
}

namespace {

std::vector<Rational> parse_dist(const nlohmann::json& arr, const char* name) {
    if (!arr.is_array()) throw std::invalid_argument(std::string(name) + " must be an array");
    std::vector<Rational> out;
    out.reserve(arr.size());
    for (const auto& item : arr) {
        if (item.is_string())
            out.push_back(parse_rational(item.get<std::string>()));
        else if (item.is_number_integer())
            out.push_back(Rational(item.get<long long>()));
        else
            throw std::invalid_argument(std::string(name) +
                                        " entries must be fraction or decimal strings");
    }
    return out;
}

} // namespace

ProtocolDraft load_protocol(std::istream& in) {
    nlohmann::json j;
    in >> j;
    ProtocolDraft d;
    d.rounds = j.at("rounds").get<int>();
    d.a_dims = j.at("a_dims").get<std::vector<int>>();
    d.b_dims = j.at("b_dims").get<std::vector<int>>();
    d.dists[0] = parse_dist(j.at("alpha0"), "alpha0");
    d.dists[1] = parse_dist(j.at("alpha1"), "alpha1");
    d.dists[2] = parse_dist(j.at("beta0"), "beta0");
    d.dists[3] = parse_dist(j.at("beta1"), "beta1");
    return d;
}

ProtocolDraft load_protocol_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open protocol file: " + path);
    return load_protocol(in);
}

void save_protocol(const ProtocolParams& params, std::ostream& out) {
    nlohmann::json j;
    j["rounds"] = 2 * params.spec.n + 2;
    j["a_dims"] = params.spec.a_dims.dims;
    j["b_dims"] = params.spec.b_dims.dims;
    auto dump = [](const ProbVec& v) {
        std::vector<std::string> s;
        s.reserve(v.size());
        for (const Rational& r : v.rationals()) s.push_back(to_fraction_string(r));
        return s;
    };
    j["alpha0"] = dump(params.alpha0);
    j["alpha1"] = dump(params.alpha1);
    j["beta0"] = dump(params.beta0);
    j["beta1"] = dump(params.beta1);
    out << j.dump(2) << "\n";
}

BoundReport mesh_gap_bound(std::int64_t D, std::int64_t N) {
    if (D < 1 || N < 1) throw std::invalid_argument("mesh_gap_bound: D, N must be >= 1");
    BoundReport r;
    r.mesh_gap = 2 * std::sqrt(static_cast<double>(D) / static_cast<double>(N));
    // Smallest N with 0.2499 - 2*sqrt(D/N) >= Kitaev bound 0.2071:
    // N >= 4D / 0.0428^2, i.e. N >= 2184 * D after rounding the per-unit factor up.
    const Rational gap(428, 10000); // 0.2499 - 0.2071
    const Rational per_d = Rational(4) / (gap * gap);
    BigInt num = numerator(per_d), den = denominator(per_d);
    BigInt factor = num / den + (num % den != 0 ? 1 : 0);
    r.min_N_for_claim = factor.convert_to<std::int64_t>() * D;
    std::ostringstream ctx;
    ctx << "D=" << D << " N=" << N << ": |bias - mesh bias| <= " << r.mesh_gap;
    r.context = ctx.str();
    return r;
}

double qubit_lower_bound(bool alice_is_qubit, bool bob_is_qubit) {
    if (!alice_is_qubit && !bob_is_qubit)
        throw std::invalid_argument("qubit_lower_bound: at least one side must be 2-dimensional");
    // Bob's ignoring/measuring bounds give F(beta) <= (2P-1)^2 and
    // Delta(alpha) <= 2P-1 in terms of P = P_B0*. The Fuchs - van de Graaf
    // inequality (strengthened form on a qubit side) turns these into lower
    // bounds on Delta(beta) and sqrt(F(alpha)), which feed Alice's
    // three-round bound. g(P) below is that bound; it decreases in P, so
    // minimax = crossing point of g(P) = P.
    auto g = [&](double P) {
        const double sf = alice_is_qubit ? std::sqrt(std::max(0.0, 2 - 2 * P)) : (2 - 2 * P);
        const double dl = bob_is_qubit ? 4 * P * (1 - P) : (2 - 2 * P);
        return 0.25 * (1 + sf) * (1 + dl);
    };
    // coarse grid, then bisection
    double lo = 0.5, hi = 1.0;
    const int kGrid = 1000000;
    for (int i = 0; i < kGrid; ++i) {
        const double P = 0.5 + 0.5 * (static_cast<double>(i) / kGrid);
        if (g(P) <= P) {
            hi = P;
            lo = std::max(0.5, P - 0.5 / kGrid);
            break;
        }
    }
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) > mid)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace coinsearch
