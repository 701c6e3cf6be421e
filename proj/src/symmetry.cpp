#include "coinsearch/symmetry.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>

namespace coinsearch {

namespace {

using RVec = std::vector<Rational>;

Rational max_entry(const RVec& v) { return *std::max_element(v.begin(), v.end()); }

// applies per-axis permutations (new[i] = old[perm[i]]) to a flat vector
RVec permute_axes(const RVec& v, const IndexShape& shape,
                  const std::vector<std::vector<int>>& perms) {
    std::vector<std::int64_t> stride(shape.dims.size());
    std::int64_t acc = 1;
    for (int ax = shape.axes() - 1; ax >= 0; --ax) {
        stride[ax] = acc;
        acc *= shape.dims[ax];
    }
    RVec out(v.size());
    for (std::int64_t idx = 0; idx < static_cast<std::int64_t>(v.size()); ++idx) {
        std::int64_t src = 0;
        for (int ax = 0; ax < shape.axes(); ++ax) {
            const std::int64_t coord = (idx / stride[ax]) % shape.dims[ax];
            src += stride[ax] * perms[ax][coord];
        }
        out[idx] = v[src];
    }
    return out;
}

std::vector<int> identity_perm(int n) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    return p;
}

// canonical sort of one side; returns per-axis permutations
std::vector<std::vector<int>> side_perms(const RVec& v0, const IndexShape& dims, int n) {
    if (n == 1) {
        std::vector<int> perm = identity_perm(dims.dims[0]);
        std::stable_sort(perm.begin(), perm.end(),
                         [&](int i, int j) { return v0[i] < v0[j]; });
        return {perm};
    }
    if (n == 2) {
        const int d1 = dims.dims[0], d2 = dims.dims[1];
        const Rational m = max_entry(v0);
        // slice holding the global max; the largest such index keeps the
        // procedure idempotent once that slice is moved last
        int xt = 0;
        for (int r = 0; r < d1; ++r)
            for (int c = 0; c < d2; ++c)
                if (v0[r * d2 + c] == m) xt = r;
        std::vector<int> cperm = identity_perm(d2);
        std::stable_sort(cperm.begin(), cperm.end(), [&](int i, int j) {
            return v0[xt * d2 + i] < v0[xt * d2 + j];
        });
        std::vector<int> rperm = identity_perm(d1);
        auto row_key = [&](int r) {
            return std::make_pair(v0[r * d2 + cperm[d2 - 1]], r == xt ? 1 : 0);
        };
        std::stable_sort(rperm.begin(), rperm.end(),
                         [&](int i, int j) { return row_key(i) < row_key(j); });
        return {rperm, cperm};
    }
    throw std::invalid_argument("canonicalize: only 1 or 2 commitment exchanges supported");
}

} // namespace

CanonicalForm canonicalize(const ProtocolParams& params) {
    AppliedMoves moves;
    RVec a0 = params.alpha0.rationals(), a1 = params.alpha1.rationals();
    RVec b0 = params.beta0.rationals(), b1 = params.beta1.rationals();
    if (max_entry(a1) > max_entry(a0)) {
        std::swap(a0, a1);
        moves.swapped_alpha = true;
    }
    if (max_entry(b1) > max_entry(b0)) {
        std::swap(b0, b1);
        moves.swapped_beta = true;
    }
    const int n = params.spec.n;
    moves.a_perms = side_perms(a0, params.spec.a_dims, n);
    moves.b_perms = side_perms(b0, params.spec.b_dims, n);
    a0 = permute_axes(a0, params.spec.a_dims, moves.a_perms);
    a1 = permute_axes(a1, params.spec.a_dims, moves.a_perms);
    b0 = permute_axes(b0, params.spec.b_dims, moves.b_perms);
    b1 = permute_axes(b1, params.spec.b_dims, moves.b_perms);
    return CanonicalForm{ProtocolParams(params.spec, ProbVec(a0), ProbVec(a1), ProbVec(b0),
                                        ProbVec(b1)),
                         moves};
}

bool is_search_canonical_pair(const RVec& v0, const RVec& v1, const IndexShape& dims,
                              int n) {
    if (max_entry(v1) > max_entry(v0)) return false;
    if (n == 1) {
        for (std::size_t i = 0; i + 1 < v0.size(); ++i)
            if (v0[i] > v0[i + 1]) return false;
        return true;
    }
    if (n == 2) {
        const int d1 = dims.dims[0], d2 = dims.dims[1];
        const Rational m = max_entry(v0);
        // the last slice holds the global max and is nondecreasing
        bool holds_max = false;
        for (int c = 0; c < d2; ++c) {
            if (v0[(d1 - 1) * d2 + c] == m) holds_max = true;
            if (c + 1 < d2 && v0[(d1 - 1) * d2 + c] > v0[(d1 - 1) * d2 + c + 1]) return false;
        }
        if (!holds_max) return false;
        for (int r = 0; r + 1 < d1; ++r)
            if (v0[r * d2 + d2 - 1] > v0[(r + 1) * d2 + d2 - 1]) return false;
        return true;
    }
    throw std::invalid_argument("is_search_canonical_pair: n must be 1 or 2");
}

std::pair<RVec, RVec> orbit_min_pair(RVec v0, RVec v1, const IndexShape& dims) {
    auto better = [](const std::pair<RVec, RVec>& a, const std::pair<RVec, RVec>& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    };
    std::pair<RVec, RVec> best(v0, v1);
    bool have = false;
    auto consider = [&](const RVec& c0, const RVec& c1) {
        std::pair<RVec, RVec> cand(c0, c1);
        if (!have || better(cand, best)) {
            best = std::move(cand);
            have = true;
        }
    };
    std::vector<std::vector<int>> perms(dims.axes());
    std::function<void(int)> rec = [&](int ax) {
        if (ax == dims.axes()) {
            const RVec p0 = permute_axes(v0, dims, perms);
            const RVec p1 = permute_axes(v1, dims, perms);
            consider(p0, p1);
            consider(p1, p0); // pair swap
            return;
        }
        std::vector<int> p = identity_perm(dims.dims[ax]);
        std::sort(p.begin(), p.end());
        do {
            perms[ax] = p;
            rec(ax + 1);
        } while (std::next_permutation(p.begin(), p.end()));
    };
    std::int64_t orbit = 2;
    for (int ax = 0; ax < dims.axes(); ++ax) {
        std::int64_t f = 1;
        for (int k = 2; k <= dims.dims[ax]; ++k) f *= k;
        orbit *= f;
    }
    if (orbit > 2'000'000)
        throw std::invalid_argument("equivalent: orbit too large to enumerate");
    rec(0);
    return best;
}

bool equivalent(const ProtocolParams& p1, const ProtocolParams& p2) {
    if (!(p1.spec == p2.spec))
        throw std::invalid_argument("equivalent: protocols have different round structure");
    const auto a = orbit_min_pair(p1.alpha0.rationals(), p1.alpha1.rationals(), p1.spec.a_dims);
    const auto b = orbit_min_pair(p2.alpha0.rationals(), p2.alpha1.rationals(), p2.spec.a_dims);
    if (a != b) return false;
    const auto c = orbit_min_pair(p1.beta0.rationals(), p1.beta1.rationals(), p1.spec.b_dims);
    const auto d = orbit_min_pair(p2.beta0.rationals(), p2.beta1.rationals(), p2.spec.b_dims);
    return c == d;
}

namespace {

void for_each_composition(std::int64_t total, int parts, std::vector<Rational>& buf,
                          std::int64_t N, const std::function<void()>& fn) {
    if (parts == 1) {
        buf.emplace_back(total, N);
        fn();
        buf.pop_back();
        return;
    }
    for (std::int64_t first = 0; first <= total; ++first) {
        buf.emplace_back(first, N);
        for_each_composition(total - first, parts - 1, buf, N, fn);
        buf.pop_back();
    }
}

} // namespace

std::vector<ProbVec> gen_mesh(int dim, std::int64_t N) {
    if (dim < 1 || N < 1) throw std::invalid_argument("gen_mesh: d, N must be >= 1");
    std::vector<ProbVec> out;
    std::vector<Rational> buf;
    for_each_composition(N, dim, buf, N, [&]() { out.emplace_back(buf); });
    return out;
}

std::int64_t mesh_size(int dim, std::int64_t N) {
    if (dim < 1 || N < 1) throw std::invalid_argument("mesh_size: d, N must be >= 1");
    BigInt binom = 1;
    for (int k = 1; k < dim; ++k) {
        binom *= N + k;
        binom /= k;
    }
    return binom.convert_to<std::int64_t>();
}

std::int64_t count_canonical_pairs(int d, std::int64_t N, int rounds) {
    const int n = rounds == 4 ? 1 : rounds == 6 ? 2 : 0;
    if (n == 0) throw std::invalid_argument("count_canonical_pairs: rounds must be 4 or 6");
    std::vector<int> dvec(n, d);
    const IndexShape dims(dvec);
    const auto mesh = gen_mesh(static_cast<int>(dims.total()), N);

    // count = sum over shape-canonical v0 of #{v1 : max(v1) <= max(v0)}
    std::map<Rational, std::int64_t> max_hist;
    for (const auto& v : mesh) max_hist[max_entry(v.rationals())]++;
    std::map<Rational, std::int64_t> cum; // #vectors with max <= key
    std::int64_t running = 0;
    for (const auto& [m, cnt] : max_hist) {
        running += cnt;
        cum[m] = running;
    }
    // v1 only enters the predicate through max(v1) <= max(v0), so checking
    // v0 against a zero peer isolates the shape conditions
    std::int64_t total = 0;
    for (const auto& v : mesh) {
        RVec zeros(v.size(), Rational(0));
        if (!is_search_canonical_pair(v.rationals(), zeros, dims, n)) continue;
        total += cum[max_entry(v.rationals())];
    }
    return total;
}

std::vector<std::pair<ProbVec, ProbVec>> canonical_mesh_pairs(const IndexShape& dims, int n,
                                                              std::int64_t N) {
    const auto mesh = gen_mesh(static_cast<int>(dims.total()), N);
    std::vector<std::pair<ProbVec, ProbVec>> out;
    for (const auto& v0 : mesh)
        for (const auto& v1 : mesh)
            if (is_search_canonical_pair(v0.rationals(), v1.rationals(), dims, n))
                out.emplace_back(v0, v1);
    return out;
}

} // namespace coinsearch
