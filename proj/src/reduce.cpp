#include "coinsearch/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>

namespace coinsearch {

namespace {

constexpr double kFeasTol = 1e-6;
constexpr double kDropTol = 1e-12;

double clamped_sqrt_ratio(double ref, double var) {
    // sqrt(ref/var) with the zero-coordinate clamp
    if (ref <= 0) return 0;
    if (var <= 0) return kGradClamp;
    return std::min(std::sqrt(ref / var), kGradClamp);
}

double fid_root(std::span<const double> p, std::span<const double> q) {
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        s += std::sqrt(std::max(p[i], 0.0) * q[i]);
    return s;
}

// Index bookkeeping between the (x, y) matrix layout used by the objective
// and the interleaved chain layout (x1,y1,...,xn,yn) used by strategies.
struct Layout {
    std::vector<int> ad, bd;
    int n;
    std::int64_t At = 1, Bt = 1;
    std::vector<std::int64_t> xstride, ystride; // strides of x_j / y_j in chain space

    explicit Layout(const RoundSpec& spec)
        : ad(spec.a_dims.dims), bd(spec.b_dims.dims), n(spec.n) {
        for (int d : ad) At *= d;
        for (int d : bd) Bt *= d;
        xstride.resize(n);
        ystride.resize(n);
        std::int64_t acc = 1;
        for (int j = n - 1; j >= 0; --j) {
            ystride[j] = acc;
            acc *= bd[j];
            xstride[j] = acc;
            acc *= ad[j];
        }
    }

    std::int64_t chain_index(std::int64_t x, std::int64_t y) const {
        std::int64_t idx = 0, xr = x, yr = y;
        for (int j = n - 1; j >= 0; --j) {
            idx += (xr % ad[j]) * xstride[j];
            xr /= ad[j];
            idx += (yr % bd[j]) * ystride[j];
            yr /= bd[j];
        }
        return idx;
    }
};

std::vector<double> matrix_to_chain(const Layout& L, std::span<const double> P) {
    std::vector<double> out(L.At * L.Bt);
    for (std::int64_t x = 0; x < L.At; ++x)
        for (std::int64_t y = 0; y < L.Bt; ++y)
            out[L.chain_index(x, y)] = P[x * L.Bt + y];
    return out;
}

std::vector<double> chain_to_matrix(const Layout& L, std::span<const double> p) {
    std::vector<double> out(L.At * L.Bt);
    for (std::int64_t x = 0; x < L.At; ++x)
        for (std::int64_t y = 0; y < L.Bt; ++y)
            out[x * L.Bt + y] = p[L.chain_index(x, y)];
    return out;
}

// --- Bob ------------------------------------------------------------------

// Builds p_1..p_{n-1} from p_n by marginalizing over the tail, averaging
// over the later x's (they carry no information in a feasible strategy).
std::vector<std::vector<double>> bob_chain_from_pn(const Layout& L, std::vector<double> pn) {
    std::vector<std::vector<double>> chain(L.n);
    chain[L.n - 1] = std::move(pn);
    for (int j = L.n - 1; j >= 1; --j) {
        const auto& cur = chain[j];
        // cur lives on A_1 x B_1 x ... x A_{j+1} x B_{j+1}
        std::int64_t prefix = 1;
        for (int i = 0; i < j; ++i) prefix *= static_cast<std::int64_t>(L.ad[i]) * L.bd[i];
        const std::int64_t aj = L.ad[j], bj = L.bd[j];
        std::vector<double> prev(prefix, 0.0);
        for (std::int64_t h = 0; h < prefix; ++h) {
            double acc = 0;
            for (std::int64_t xa = 0; xa < aj; ++xa)
                for (std::int64_t yb = 0; yb < bj; ++yb)
                    acc += cur[(h * aj + xa) * bj + yb];
            prev[h] = acc / static_cast<double>(aj);
        }
        chain[j - 1] = std::move(prev);
    }
    return chain;
}

struct BobProblem {
    const ProtocolParams& P;
    Layout L;
    std::array<std::span<const double>, 2> alpha;
    std::array<std::span<const double>, 2> btil;
    std::size_t size;

    BobProblem(const ProtocolParams& params, int c) : P(params), L(params.spec) {
        alpha = {std::span<const double>(P.alpha0.floats()),
                 std::span<const double>(P.alpha1.floats())};
        btil = {std::span<const double>(P.beta(c).floats()),
                std::span<const double>(P.beta(1 - c).floats())};
        size = static_cast<std::size_t>(L.At * L.Bt);
    }

    std::vector<double> start() const {
        return std::vector<double>(size, 1.0 / static_cast<double>(L.Bt));
    }

    void mixtures(std::span<const double> x, std::vector<double>& q0,
                  std::vector<double>& q1) const {
        q0.assign(L.Bt, 0.0);
        q1.assign(L.Bt, 0.0);
        for (std::int64_t xi = 0; xi < L.At; ++xi) {
            const double a0 = alpha[0][xi], a1 = alpha[1][xi];
            if (a0 == 0 && a1 == 0) continue;
            const double* row = x.data() + xi * L.Bt;
            for (std::int64_t y = 0; y < L.Bt; ++y) {
                q0[y] += a0 * row[y];
                q1[y] += a1 * row[y];
            }
        }
    }

    double value(std::span<const double> x) const {
        std::vector<double> q0, q1;
        mixtures(x, q0, q1);
        const double r0 = fid_root(q0, btil[0]);
        const double r1 = fid_root(q1, btil[1]);
        return 0.5 * (r0 * r0 + r1 * r1);
    }

    void grad(std::span<const double> x, std::vector<double>& g) const {
        std::vector<double> q0, q1;
        mixtures(x, q0, q1);
        std::array<std::vector<double>, 2> gq;
        const std::array<const std::vector<double>*, 2> qs = {&q0, &q1};
        for (int a = 0; a < 2; ++a) {
            const double root = fid_root(*qs[a], btil[a]);
            gq[a].resize(L.Bt);
            for (std::int64_t y = 0; y < L.Bt; ++y)
                gq[a][y] = std::min(root * clamped_sqrt_ratio(btil[a][y], (*qs[a])[y]), kGradClamp);
        }
        g.assign(size, 0.0);
        for (std::int64_t xi = 0; xi < L.At; ++xi)
            for (std::int64_t y = 0; y < L.Bt; ++y)
                g[xi * L.Bt + y] =
                    0.5 * (alpha[0][xi] * gq[0][y] + alpha[1][xi] * gq[1][y]);
    }

    // backward induction value of the subtree below (xs, ys); see lmo()
    double tree_x(std::span<const double> g, std::vector<int>& xs, std::vector<int>& ys,
                  int* pick = nullptr) const {
        const int j = static_cast<int>(ys.size()); // choosing y_{j+1}
        double best = 0;
        int arg = 0;
        for (int y = 0; y < L.bd[j]; ++y) {
            ys.push_back(y);
            const double v = tree_y(g, xs, ys);
            ys.pop_back();
            if (y == 0 || v > best) {
                best = v;
                arg = y;
            }
        }
        if (pick) *pick = arg;
        return best;
    }

    double tree_y(std::span<const double> g, std::vector<int>& xs, std::vector<int>& ys) const {
        const int j = static_cast<int>(ys.size());
        if (j == L.n) {
            std::int64_t x = 0, y = 0;
            for (int i = 0; i < L.n; ++i) x = x * L.ad[i] + xs[i];
            for (int i = 0; i < L.n; ++i) y = y * L.bd[i] + ys[i];
            return g[x * L.Bt + y];
        }
        double acc = 0;
        for (int xn = 0; xn < L.ad[j]; ++xn) {
            xs.push_back(xn);
            acc += tree_x(g, xs, ys);
            xs.pop_back();
        }
        return acc;
    }

    // matrix-layout vertex maximizing <g, p_n> over the cheating polytope
    std::vector<double> lmo(std::span<const double> g) const {
        std::vector<double> vert(size, 0.0);
        // walk every full x, reconstructing the y-choices level by level
        std::vector<int> xc(L.n);
        for (std::int64_t x = 0; x < L.At; ++x) {
            std::int64_t xr = x;
            for (int i = L.n - 1; i >= 0; --i) {
                xc[i] = static_cast<int>(xr % L.ad[i]);
                xr /= L.ad[i];
            }
            std::vector<int> xs, ys;
            for (int j = 0; j < L.n; ++j) {
                xs.push_back(xc[j]);
                int pick = 0;
                tree_x(g, xs, ys, &pick);
                ys.push_back(pick);
            }
            std::int64_t y = 0;
            for (int i = 0; i < L.n; ++i) y = y * L.bd[i] + ys[i];
            vert[x * L.Bt + y] = 1.0;
        }
        return vert;
    }
};

// --- Alice ----------------------------------------------------------------

struct AliceProblem {
    const ProtocolParams& P;
    Layout L;
    std::array<std::span<const double>, 2> alpha;
    std::array<std::span<const double>, 2> btil;
    std::size_t size;

    AliceProblem(const ProtocolParams& params, int c) : P(params), L(params.spec) {
        alpha = {std::span<const double>(P.alpha0.floats()),
                 std::span<const double>(P.alpha1.floats())};
        btil = {std::span<const double>(P.beta(c).floats()),
                std::span<const double>(P.beta(1 - c).floats())};
        size = static_cast<std::size_t>(2 * L.At * L.Bt);
    }

    std::vector<double> start() const {
        return std::vector<double>(size, 1.0 / static_cast<double>(2 * L.At));
    }

    double value(std::span<const double> s) const {
        double acc = 0;
        for (int a = 0; a < 2; ++a) {
            for (std::int64_t y = 0; y < L.Bt; ++y) {
                const double w = btil[a][y];
                if (w == 0) continue;
                double root = 0;
                const double* col = s.data() + a * L.At * L.Bt + y;
                for (std::int64_t x = 0; x < L.At; ++x)
                    root += std::sqrt(std::max(col[x * L.Bt], 0.0) * alpha[a][x]);
                acc += w * root * root;
            }
        }
        return 0.5 * acc;
    }

    void grad(std::span<const double> s, std::vector<double>& g) const {
        g.assign(size, 0.0);
        for (int a = 0; a < 2; ++a) {
            for (std::int64_t y = 0; y < L.Bt; ++y) {
                const double w = btil[a][y];
                if (w == 0) continue;
                const double* col = s.data() + a * L.At * L.Bt + y;
                double root = 0;
                for (std::int64_t x = 0; x < L.At; ++x)
                    root += std::sqrt(std::max(col[x * L.Bt], 0.0) * alpha[a][x]);
                double* gcol = g.data() + a * L.At * L.Bt + y;
                for (std::int64_t x = 0; x < L.At; ++x)
                    gcol[x * L.Bt] = std::min(
                        0.5 * w * root * clamped_sqrt_ratio(alpha[a][x], col[x * L.Bt]),
                        kGradClamp);
            }
        }
    }

    // subtree value: at level j we are about to pick x_{j+1} given history
    double tree_x(std::span<const double> m, std::vector<int>& xs, std::vector<int>& ys,
                  int* pick = nullptr) const {
        const int j = static_cast<int>(xs.size());
        double best = 0;
        int arg = 0;
        for (int xn = 0; xn < L.ad[j]; ++xn) {
            xs.push_back(xn);
            const double v = tree_y(m, xs, ys);
            xs.pop_back();
            if (xn == 0 || v > best) {
                best = v;
                arg = xn;
            }
        }
        if (pick) *pick = arg;
        return best;
    }

    double tree_y(std::span<const double> m, std::vector<int>& xs, std::vector<int>& ys) const {
        const int j = static_cast<int>(ys.size());
        if (j == L.n - 1 && static_cast<int>(xs.size()) == L.n) {
            // innermost: sum the best-bit envelope over y_n
            std::int64_t x = 0;
            for (int i = 0; i < L.n; ++i) x = x * L.ad[i] + xs[i];
            std::int64_t ybase = 0;
            for (int i = 0; i < L.n - 1; ++i) ybase = ybase * L.bd[i] + ys[i];
            ybase *= L.bd[L.n - 1];
            double acc = 0;
            for (int yn = 0; yn < L.bd[L.n - 1]; ++yn) acc += m[x * L.Bt + ybase + yn];
            return acc;
        }
        double acc = 0;
        for (int y = 0; y < L.bd[j]; ++y) {
            ys.push_back(y);
            acc += tree_x(m, xs, ys);
            ys.pop_back();
        }
        return acc;
    }

    std::vector<double> lmo(std::span<const double> g) const {
        // best-bit envelope with ties to a = 0
        std::vector<double> m(L.At * L.Bt);
        for (std::int64_t i = 0; i < L.At * L.Bt; ++i)
            m[i] = std::max(g[i], g[L.At * L.Bt + i]);

        std::vector<double> vert(size, 0.0);
        std::vector<int> yc(L.n);
        for (std::int64_t y = 0; y < L.Bt; ++y) {
            std::int64_t yr = y;
            for (int i = L.n - 1; i >= 0; --i) {
                yc[i] = static_cast<int>(yr % L.bd[i]);
                yr /= L.bd[i];
            }
            // x-path depends only on y_1..y_{n-1}
            std::vector<int> xs, ys;
            for (int j = 0; j < L.n; ++j) {
                int pick = 0;
                tree_x(m, xs, ys, &pick);
                xs.push_back(pick);
                if (j < L.n - 1) ys.push_back(yc[j]);
            }
            std::int64_t x = 0;
            for (int i = 0; i < L.n; ++i) x = x * L.ad[i] + xs[i];
            const std::int64_t i = x * L.Bt + y;
            const int abest = g[i] >= g[L.At * L.Bt + i] ? 0 : 1;
            vert[abest * L.At * L.Bt + i] = 1.0;
        }
        return vert;
    }
};

// --- shared pairwise Frank-Wolfe -------------------------------------------

struct FwResult {
    std::vector<double> x;
    double value = 0, gap = 0;
    int iterations = 0;
};

// Every evaluation point is mixed toward the uniform interior point: the
// fidelity gradients stay finite and honest there, so the Frank-Wolfe gap
// certifies optimality over the full polytope (up to the mixing slack,
// which is added to the reported gap).
constexpr double kInteriorMix = 1e-9;

template <typename Problem>
FwResult pairwise_frank_wolfe(const Problem& prob, double tol, int max_iter) {
    const std::size_t n = prob.size;
    const std::vector<double> interior = prob.start();
    std::vector<std::vector<double>> atoms{interior};
    std::vector<double> weights{1.0};
    std::vector<double> x = atoms[0];
    std::map<std::vector<double>, std::size_t> atom_index; // vertex dedupe
    atom_index[atoms[0]] = 0;

    const double golden = (std::sqrt(5.0) - 1) / 2;
    std::vector<double> g, trial(n), mixed(n), dir(n);
    double gap = std::numeric_limits<double>::infinity();
    int it = 0;

    auto value_mixed = [&](const std::vector<double>& z) {
        for (std::size_t i = 0; i < n; ++i)
            mixed[i] = (1 - kInteriorMix) * z[i] + kInteriorMix * interior[i];
        return prob.value(mixed);
    };
    auto grad_mixed = [&](const std::vector<double>& z) {
        for (std::size_t i = 0; i < n; ++i)
            mixed[i] = (1 - kInteriorMix) * z[i] + kInteriorMix * interior[i];
        prob.grad(mixed, g);
        for (double& v : g) v *= 1 - kInteriorMix;
    };
    auto dot = [&](std::span<const double> a, std::span<const double> b) {
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    auto line_search = [&](const std::vector<double>& base, const std::vector<double>& d,
                           double lo, double hi) {
        auto at = [&](double t) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = base[i] + t * d[i];
            return value_mixed(trial);
        };
        double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
        double f1 = at(x1), f2 = at(x2);
        for (int k = 0; k < 80; ++k) {
            if (f1 < f2) {
                lo = x1; x1 = x2; f1 = f2;
                x2 = lo + golden * (hi - lo); f2 = at(x2);
            } else {
                hi = x2; x2 = x1; f2 = f1;
                x1 = hi - golden * (hi - lo); f1 = at(x1);
            }
        }
        return 0.5 * (lo + hi);
    };
    auto resync = [&]() {
        double tot = 0;
        for (double w : weights) tot += w;
        std::fill(x.begin(), x.end(), 0.0);
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            const double w = weights[k] / tot;
            weights[k] = w;
            for (std::size_t i = 0; i < n; ++i) x[i] += w * atoms[k][i];
        }
    };

    for (it = 1; it <= max_iter; ++it) {
        grad_mixed(x);
        std::vector<double> s = prob.lmo(g);
        gap = dot(g, s) - dot(g, x) + kInteriorMix;
        if (gap <= tol) break;

        const double f_x = value_mixed(x);

        // away atom: worst live atom under the current gradient
        std::size_t ai = atoms.size();
        double worst = 0;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            if (weights[k] <= kDropTol) continue;
            const double sc = dot(g, atoms[k]);
            if (ai == atoms.size() || sc < worst) {
                ai = k;
                worst = sc;
            }
        }

        for (std::size_t i = 0; i < n; ++i) dir[i] = s[i] - atoms[ai][i];
        const double gmax = weights[ai];
        double t = line_search(x, dir, 0.0, gmax);
        auto value_at = [&](double tt) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + tt * dir[i];
            return value_mixed(trial);
        };
        double f_new = value_at(t);
        const double f_end = value_at(gmax);
        if (f_end >= f_new) {
            f_new = f_end;
            t = gmax; // drop step: the away atom leaves the active set
        }

        bool stepped = false;
        if (f_new > f_x + 1e-15) {
            for (std::size_t i = 0; i < n; ++i) x[i] += t * dir[i];
            weights[ai] -= t;
            stepped = true;
        } else {
            // fall back to a classic FW step from x itself
            for (std::size_t i = 0; i < n; ++i) dir[i] = s[i] - x[i];
            t = line_search(x, dir, 0.0, 1.0);
            f_new = value_at(t);
            if (f_new > f_x + 1e-15) {
                for (std::size_t i = 0; i < n; ++i) x[i] += t * dir[i];
                for (double& w : weights) w *= (1 - t);
                stepped = true;
            } else {
                break; // no ascent direction left at this precision
            }
        }

        if (stepped && t > 0) {
            auto [pos, inserted] = atom_index.try_emplace(s, atoms.size());
            if (inserted)
                atoms.push_back(std::move(s)), weights.push_back(t);
            else
                weights[pos->second] += t;
        }
        // prune dead atoms (keeping index map consistent)
        if (atoms.size() > 4 && it % 16 == 0) {
            std::vector<std::vector<double>> na;
            std::vector<double> nw;
            atom_index.clear();
            for (std::size_t k = 0; k < atoms.size(); ++k) {
                if (weights[k] > kDropTol) {
                    atom_index[atoms[k]] = na.size();
                    na.push_back(std::move(atoms[k]));
                    nw.push_back(weights[k]);
                }
            }
            atoms = std::move(na);
            weights = std::move(nw);
        }
        if (it % 128 == 0) resync();
    }

    resync();
    FwResult res;
    res.value = value_mixed(x);
    grad_mixed(x);
    const auto s_final = prob.lmo(g);
    res.gap = std::max(dot(g, s_final) - dot(g, x) + kInteriorMix, 0.0);
    // the emitted strategy is the mixed (strictly feasible) point
    for (std::size_t i = 0; i < n; ++i)
        x[i] = (1 - kInteriorMix) * x[i] + kInteriorMix * interior[i];
    res.x = std::move(x);
    res.iterations = std::min(it, max_iter);
    return res;
}

} // namespace

// --- public surface ---------------------------------------------------------

double bob_feasibility_error(const ProtocolParams& params, const BobStrategy& strat) {
    const Layout L(params.spec);
    if (static_cast<int>(strat.p.size()) != L.n)
        throw std::invalid_argument("BobStrategy: wrong chain length");
    double err = 0;
    for (int j = 0; j < L.n; ++j) {
        std::int64_t want = 1;
        for (int i = 0; i <= j; ++i) want *= static_cast<std::int64_t>(L.ad[i]) * L.bd[i];
        if (static_cast<std::int64_t>(strat.p[j].size()) != want)
            throw std::invalid_argument("BobStrategy: wrong p_j length");
        for (double v : strat.p[j]) err = std::max(err, -v);
    }
    // Tr_{B_j}(p_j) = p_{j-1} (x) ones(A_j), with p_0 = scalar 1 on A_1
    for (int j = 0; j < L.n; ++j) {
        std::int64_t prefix = 1;
        for (int i = 0; i < j; ++i) prefix *= static_cast<std::int64_t>(L.ad[i]) * L.bd[i];
        const std::int64_t aj = L.ad[j], bj = L.bd[j];
        for (std::int64_t h = 0; h < prefix; ++h) {
            const double target = j == 0 ? 1.0 : strat.p[j - 1][h];
            for (std::int64_t xa = 0; xa < aj; ++xa) {
                double acc = 0;
                for (std::int64_t yb = 0; yb < bj; ++yb)
                    acc += strat.p[j][(h * aj + xa) * bj + yb];
                err = std::max(err, std::abs(acc - target));
            }
        }
    }
    return err;
}

double alice_feasibility_error(const ProtocolParams& params, const AliceStrategy& strat) {
    const Layout L(params.spec);
    if (static_cast<int>(strat.s_chain.size()) != L.n)
        throw std::invalid_argument("AliceStrategy: wrong chain length");
    double err = 0;
    for (const auto& sj : strat.s_chain)
        for (double v : sj) err = std::max(err, -v);
    for (double v : strat.s_final) err = std::max(err, -v);

    // Tr_{A_1}(s_1) = 1
    double tot = 0;
    for (double v : strat.s_chain[0]) tot += v;
    err = std::max(err, std::abs(tot - 1.0));
    // Tr_{A_j}(s_j) = s_{j-1} (x) ones(B_{j-1})
    for (int j = 1; j < L.n; ++j) {
        std::int64_t prefix = 1; // A_1 B_1 ... A_{j-1} dims of s_{j-1} without its last axis
        for (int i = 0; i < j - 1; ++i) prefix *= static_cast<std::int64_t>(L.ad[i]) * L.bd[i];
        prefix *= L.ad[j - 1];
        const std::int64_t bjm = L.bd[j - 1], aj = L.ad[j];
        for (std::int64_t h = 0; h < prefix; ++h)
            for (std::int64_t yb = 0; yb < bjm; ++yb) {
                double acc = 0;
                for (std::int64_t xa = 0; xa < aj; ++xa)
                    acc += strat.s_chain[j][(h * bjm + yb) * aj + xa];
                err = std::max(err, std::abs(acc - strat.s_chain[j - 1][h]));
            }
    }
    // sum_a s^{(a,y)} = s_n slice, replicated over y_n
    const std::int64_t At = L.At, Bt = L.Bt;
    if (static_cast<std::int64_t>(strat.s_final.size()) != 2 * At * Bt)
        throw std::invalid_argument("AliceStrategy: wrong s length");
    for (std::int64_t x = 0; x < At; ++x) {
        // chain position of s_n at (x1, y1, .., y_{n-1}, x_n)
        std::vector<int> xc(L.n);
        std::int64_t xr = x;
        for (int i = L.n - 1; i >= 0; --i) {
            xc[i] = static_cast<int>(xr % L.ad[i]);
            xr /= L.ad[i];
        }
        for (std::int64_t y = 0; y < Bt; ++y) {
            std::vector<int> yc(L.n);
            std::int64_t yr = y;
            for (int i = L.n - 1; i >= 0; --i) {
                yc[i] = static_cast<int>(yr % L.bd[i]);
                yr /= L.bd[i];
            }
            // s_n layout is A_1 x B_1 x ... x B_{n-1} x A_n
            std::int64_t idx = 0;
            for (int i = 0; i < L.n; ++i) {
                idx = idx * L.ad[i] + xc[i];
                if (i < L.n - 1) idx = idx * L.bd[i] + yc[i];
            }
            const double target = strat.s_chain[L.n - 1][idx];
            const double got =
                strat.s_final[x * Bt + y] + strat.s_final[At * Bt + x * Bt + y];
            err = std::max(err, std::abs(got - target));
        }
    }
    return err;
}

double bob_objective(const ProtocolParams& params, int c, const BobStrategy& strat) {
    if (c != 0 && c != 1) throw std::invalid_argument("c must be 0 or 1");
    const double ferr = bob_feasibility_error(params, strat);
    if (ferr > kFeasTol)
        throw std::invalid_argument("bob_objective: strategy infeasible (violation " +
                                    std::to_string(ferr) + ")");
    BobProblem prob(params, c);
    return prob.value(chain_to_matrix(prob.L, strat.p.back()));
}

double alice_objective(const ProtocolParams& params, int c, const AliceStrategy& strat) {
    if (c != 0 && c != 1) throw std::invalid_argument("c must be 0 or 1");
    const double ferr = alice_feasibility_error(params, strat);
    if (ferr > kFeasTol)
        throw std::invalid_argument("alice_objective: strategy infeasible (violation " +
                                    std::to_string(ferr) + ")");
    AliceProblem prob(params, c);
    return prob.value(strat.s_final);
}

namespace {

BobStrategy bob_strategy_from_matrix(const Layout& L, std::span<const double> P) {
    BobStrategy s;
    s.p = bob_chain_from_pn(L, matrix_to_chain(L, P));
    return s;
}

AliceStrategy alice_strategy_from_flat(const Layout& L, std::span<const double> S) {
    AliceStrategy out;
    out.s_final.assign(S.begin(), S.end());
    // s_n over A_1 x B_1 x ... x B_{n-1} x A_n, averaged over y_n
    std::int64_t sn_size = 1;
    for (int i = 0; i < L.n; ++i) {
        sn_size *= L.ad[i];
        if (i < L.n - 1) sn_size *= L.bd[i];
    }
    std::vector<double> sn(sn_size, 0.0);
    std::vector<double> cnt(sn_size, 0.0);
    for (std::int64_t x = 0; x < L.At; ++x) {
        std::vector<int> xc(L.n);
        std::int64_t xr = x;
        for (int i = L.n - 1; i >= 0; --i) {
            xc[i] = static_cast<int>(xr % L.ad[i]);
            xr /= L.ad[i];
        }
        for (std::int64_t y = 0; y < L.Bt; ++y) {
            std::vector<int> yc(L.n);
            std::int64_t yr = y;
            for (int i = L.n - 1; i >= 0; --i) {
                yc[i] = static_cast<int>(yr % L.bd[i]);
                yr /= L.bd[i];
            }
            std::int64_t idx = 0;
            for (int i = 0; i < L.n; ++i) {
                idx = idx * L.ad[i] + xc[i];
                if (i < L.n - 1) idx = idx * L.bd[i] + yc[i];
            }
            sn[idx] += S[x * L.Bt + y] + S[L.At * L.Bt + x * L.Bt + y];
            cnt[idx] += 1;
        }
    }
    for (std::int64_t i = 0; i < sn_size; ++i) sn[i] /= std::max(cnt[i], 1.0);
    out.s_chain.resize(L.n);
    out.s_chain[L.n - 1] = std::move(sn);
    // earlier s_j by averaging marginals: Tr_{A_j}(s_j) = s_{j-1} (x) ones
    for (int j = L.n - 1; j >= 1; --j) {
        const auto& cur = out.s_chain[j];
        std::int64_t prefix = 1;
        for (int i = 0; i < j - 1; ++i) prefix *= static_cast<std::int64_t>(L.ad[i]) * L.bd[i];
        if (j >= 1) prefix *= L.ad[j - 1];
        const std::int64_t bjm = L.bd[j - 1], aj = L.ad[j];
        std::vector<double> prev(prefix, 0.0);
        for (std::int64_t h = 0; h < prefix; ++h) {
            double acc = 0;
            for (std::int64_t yb = 0; yb < bjm; ++yb)
                for (std::int64_t xa = 0; xa < aj; ++xa)
                    acc += cur[(h * bjm + yb) * aj + xa];
            prev[h] = acc / static_cast<double>(bjm);
        }
        out.s_chain[j - 1] = std::move(prev);
    }
    return out;
}

} // namespace

BobStrategy lmo_bob(const ProtocolParams& params, std::span<const double> gradient) {
    BobProblem prob(params, 0);
    if (gradient.size() != prob.size)
        throw std::invalid_argument("lmo_bob: gradient length mismatch");
    const auto vert = prob.lmo(chain_to_matrix(prob.L, gradient));
    return bob_strategy_from_matrix(prob.L, vert);
}

AliceStrategy lmo_alice(const ProtocolParams& params, std::span<const double> gradient) {
    AliceProblem prob(params, 0);
    if (gradient.size() != prob.size)
        throw std::invalid_argument("lmo_alice: gradient length mismatch");
    return alice_strategy_from_flat(prob.L, prob.lmo(gradient));
}

CheatCertificate solve_cheating(const ProtocolParams& params, Party party, int c, double tol,
                                int max_iter) {
    if (c != 0 && c != 1) throw std::invalid_argument("c must be 0 or 1");
    CheatCertificate cert;
    cert.party = party;
    cert.outcome = c;
    if (party == Party::Bob) {
        BobProblem prob(params, c);
        auto res = pairwise_frank_wolfe(prob, tol, max_iter);
        cert.value = res.value;
        cert.gap = std::max(res.gap, 0.0);
        cert.iterations = res.iterations;
        cert.bob = bob_strategy_from_matrix(prob.L, res.x);
    } else {
        AliceProblem prob(params, c);
        auto res = pairwise_frank_wolfe(prob, tol, max_iter);
        cert.value = res.value;
        cert.gap = std::max(res.gap, 0.0);
        cert.iterations = res.iterations;
        cert.alice = alice_strategy_from_flat(prob.L, res.x);
    }
    if (!std::isfinite(cert.value) || !std::isfinite(cert.gap))
        throw std::runtime_error("solve_cheating: non-finite objective");
    cert.upper = cert.value + cert.gap;
    return cert;
}

BiasResult solve_bias(const ProtocolParams& params, double tol, int max_iter) {
    BiasResult r{0.0,
                 {solve_cheating(params, Party::Alice, 0, tol, max_iter),
                  solve_cheating(params, Party::Alice, 1, tol, max_iter),
                  solve_cheating(params, Party::Bob, 0, tol, max_iter),
                  solve_cheating(params, Party::Bob, 1, tol, max_iter)}};
    double mx = 0;
    for (const auto& c : r.certs) mx = std::max(mx, c.value);
    r.bias = mx - 0.5;
    return r;
}

namespace {

// enumerate all length-k compositions of M (grid over a simplex)
void for_each_composition(int M, int k, std::vector<int>& buf,
                          const std::function<void()>& fn) {
    if (k == 1) {
        buf.push_back(M);
        fn();
        buf.pop_back();
        return;
    }
    for (int first = 0; first <= M; ++first) {
        buf.push_back(first);
        for_each_composition(M - first, k - 1, buf, fn);
        buf.pop_back();
    }
}

} // namespace

double brute_force_value(const ProtocolParams& params, Party party, int c, double grid_step) {
    if (grid_step <= 0 || grid_step > 1)
        throw std::invalid_argument("brute_force_value: bad grid step");
    const Layout L(params.spec);
    const int M = static_cast<int>(std::lround(1.0 / grid_step));

    if (party == Party::Bob) {
        std::int64_t free_dims = 0, states = 1;
        for (int j = 0; j < L.n; ++j) {
            std::int64_t conds = 1;
            for (int i = 0; i <= j; ++i) conds *= L.ad[i];
            for (int i = 0; i < j; ++i) conds *= L.bd[i];
            free_dims += conds * (L.bd[j] - 1);
            states *= conds;
        }
        if (free_dims > 6)
            throw std::invalid_argument("brute_force_value: polytope dimension " +
                                        std::to_string(free_dims) + " exceeds 6");
        if (L.n != 1)
            throw std::invalid_argument("brute_force_value: only one commitment exchange supported");
        BobProblem prob(params, c);
        std::vector<double> P(prob.size, 0.0);
        double best = 0;
        std::vector<int> buf; // shared across recursion levels: read the tail window
        std::function<void(std::int64_t)> rec = [&](std::int64_t x) {
            if (x == L.At) {
                best = std::max(best, prob.value(P));
                return;
            }
            for_each_composition(M, static_cast<int>(L.Bt), buf, [&]() {
                const std::size_t base = buf.size() - L.Bt;
                for (std::int64_t y = 0; y < L.Bt; ++y)
                    P[x * L.Bt + y] = static_cast<double>(buf[base + y]) / M;
                rec(x + 1);
            });
        };
        rec(0);
        return best;
    }

    // Alice: s_1 over the A-simplex, plus a split fraction per (x, y)
    const std::int64_t free_dims = (L.At - 1) + L.At * L.Bt;
    if (L.n != 1 || free_dims > 6)
        throw std::invalid_argument("brute_force_value: polytope dimension " +
                                    std::to_string(free_dims) + " exceeds 6");
    AliceProblem prob(params, c);
    std::vector<double> S(prob.size, 0.0);
    std::vector<double> s1(L.At);
    double best = 0;
    const std::int64_t cells = L.At * L.Bt;
    std::vector<int> tgrid(cells, 0);
    std::function<void(std::int64_t)> rec_t = [&](std::int64_t cell) {
        if (cell == cells) {
            for (std::int64_t x = 0; x < L.At; ++x)
                for (std::int64_t y = 0; y < L.Bt; ++y) {
                    const double t = static_cast<double>(tgrid[x * L.Bt + y]) / M;
                    S[x * L.Bt + y] = t * s1[x];
                    S[L.At * L.Bt + x * L.Bt + y] = (1 - t) * s1[x];
                }
            best = std::max(best, prob.value(S));
            return;
        }
        for (int t = 0; t <= M; ++t) {
            tgrid[cell] = t;
            rec_t(cell + 1);
        }
    };
    std::vector<int> buf;
    for_each_composition(M, static_cast<int>(L.At), buf, [&]() {
        for (std::int64_t x = 0; x < L.At; ++x) s1[x] = static_cast<double>(buf[x]) / M;
        rec_t(0);
    });
    return best;
}

} // namespace coinsearch
