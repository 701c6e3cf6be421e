#include "coinsearch/probvec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coinsearch {

IndexShape::IndexShape(std::vector<int> d) : dims(std::move(d)) {
    if (dims.empty()) throw std::invalid_argument("IndexShape: dims must be nonempty");
    for (int x : dims)
        if (x < 1) throw std::invalid_argument("IndexShape: dims must be positive");
}

std::int64_t IndexShape::total() const {
    std::int64_t t = 1;
    for (int x : dims) t *= x;
    return t;
}

ProbVec::ProbVec(std::vector<Rational> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw std::invalid_argument("ProbVec: empty");
    Rational sum = 0;
    for (const Rational& e : entries_) {
        if (e < 0) throw std::invalid_argument("ProbVec: negative entry");
        sum += e;
    }
    if (sum != 1) throw std::invalid_argument("ProbVec: entries sum to " + to_fraction_string(sum) + ", not 1");
    float_view_.reserve(entries_.size());
    for (const Rational& e : entries_) float_view_.push_back(to_double(e));
}

ProbVec uniform_probvec(int n) {
    return ProbVec(std::vector<Rational>(n, Rational(1, n)));
}

namespace {

void require_same_length(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("length mismatch");
}

void require_nonnegative(std::span<const double> v) {
    for (double x : v)
        if (x < 0) throw std::invalid_argument("negative entry");
}

} // namespace

double fidelity(std::span<const double> p, std::span<const double> q) {
    require_same_length(p, q);
    require_nonnegative(p);
    require_nonnegative(q);
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::sqrt(p[i] * q[i]);
    return s * s;
}

double trace_distance(std::span<const double> p, std::span<const double> q) {
    require_same_length(p, q);
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

namespace {

template <typename T>
std::vector<T> marginal_impl(std::span<const T> v, const IndexShape& shape,
                             const std::vector<int>& drop) {
    if (static_cast<std::int64_t>(v.size()) != shape.total())
        throw std::invalid_argument("marginal: vector length does not match shape");
    std::vector<bool> dropped(shape.dims.size(), false);
    for (int ax : drop) {
        if (ax < 1 || ax > shape.axes()) throw std::invalid_argument("marginal: bad axis");
        dropped[ax - 1] = true;
    }
    std::int64_t kept_total = 1;
    for (int ax = 0; ax < shape.axes(); ++ax)
        if (!dropped[ax]) kept_total *= shape.dims[ax];
    std::vector<T> out(kept_total, T(0));
    // row-major strides
    std::vector<std::int64_t> stride(shape.dims.size());
    std::int64_t acc = 1;
    for (int ax = shape.axes() - 1; ax >= 0; --ax) {
        stride[ax] = acc;
        acc *= shape.dims[ax];
    }
    for (std::int64_t idx = 0; idx < static_cast<std::int64_t>(v.size()); ++idx) {
        std::int64_t out_idx = 0;
        for (int ax = 0; ax < shape.axes(); ++ax) {
            if (dropped[ax]) continue;
            const std::int64_t coord = (idx / stride[ax]) % shape.dims[ax];
            out_idx = out_idx * shape.dims[ax] + coord;
        }
        out[out_idx] += v[idx];
    }
    return out;
}

} // namespace

std::vector<double> marginal(std::span<const double> v, const IndexShape& shape,
                             const std::vector<int>& drop) {
    return marginal_impl<double>(v, shape, drop);
}

std::vector<Rational> marginal(std::span<const Rational> v, const IndexShape& shape,
                               const std::vector<int>& drop) {
    return marginal_impl<Rational>(v, shape, drop);
}

double rank2_lambda_max(double eta, double tau, std::span<const double> p,
                        std::span<const double> q) {
    if (eta < 0 || tau < 0) throw std::invalid_argument("rank2_lambda_max: negative weight");
    const double f = fidelity(p, q);
    const double disc = (eta - tau) * (eta - tau) + 4 * eta * tau * f;
    return 0.5 * (eta + tau + std::sqrt(disc));
}

std::vector<double> rank2_argmax(double eta, double tau, std::span<const double> p,
                                 std::span<const double> q) {
    if (eta < 0 || tau < 0) throw std::invalid_argument("rank2_argmax: negative weight");
    if (eta == 0 && tau == 0) throw std::invalid_argument("rank2_argmax: eta = tau = 0");
    require_same_length(p, q);
    if (tau == 0) return {p.begin(), p.end()};
    if (eta == 0) return {q.begin(), q.end()};
    // canonical operand order: the matrix is symmetric in its two pieces, so
    // swapped calls produce bit-identical results
    const bool flip = eta < tau || (eta == tau && std::lexicographical_compare(
                                                      q.begin(), q.end(), p.begin(), p.end()));
    if (flip) return rank2_argmax(tau, eta, q, p);

    const double s = std::sqrt(fidelity(p, q));
    if (s == 0) return {p.begin(), p.end()}; // orthogonal supports, eta >= tau
    const double disc = std::sqrt((eta - tau) * (eta - tau) + 4 * eta * tau * s * s);
    // lam - eta = 2*eta*tau*s^2 / (disc + eta - tau), written to avoid the
    // cancellation when s is small
    const double c1 = (disc + (eta - tau)) / (2 * tau * s);
    std::vector<double> w(p.size());
    double norm2 = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        w[i] = c1 * std::sqrt(p[i]) + std::sqrt(q[i]);
        norm2 += w[i] * w[i];
    }
    for (double& x : w) x = x * x / norm2;
    return w;
}

namespace {

double hull_objective(double c0, std::span<const double> a0, double c1,
                      std::span<const double> a1, std::span<const double> v,
                      const std::vector<double>& s) {
    double f0 = 0, f1 = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        f0 += std::sqrt(std::max(s[i], 0.0) * a0[i]);
        f1 += std::sqrt(std::max(v[i] - s[i], 0.0) * a1[i]);
    }
    return c0 * f0 * f0 + c1 * f1 * f1;
}

} // namespace

double hull_two_fidelities(double c0, std::span<const double> a0, double c1,
                           std::span<const double> a1, std::span<const double> v) {
    if (c0 < 0 || c1 < 0) throw std::invalid_argument("hull_two_fidelities: negative weight");
    if (a0.size() != a1.size() || a0.size() != v.size())
        throw std::invalid_argument("length mismatch");
    require_nonnegative(v);
    // canonical orientation (the split mirror s <-> v - s leaves the value
    // unchanged), so piece-swapped calls agree exactly
    if (c1 < c0 || (c1 == c0 && std::lexicographical_compare(a1.begin(), a1.end(),
                                                             a0.begin(), a0.end())))
        return hull_two_fidelities(c1, a1, c0, a0, v);
    const std::size_t n = v.size();

    auto obj = [&](const std::vector<double>& s) { return hull_objective(c0, a0, c1, a1, v, s); };

    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = 0.5 * v[i];
    std::vector<double> end0(n, 0.0), end1(v.begin(), v.end());
    double best = std::max({obj(s), obj(end0), obj(end1)});

    // gradients are taken slightly inside the box so the split's square-root
    // singularities never produce a misleading zero/infinite direction
    const double mix = 1e-12;
    const double golden = (std::sqrt(5.0) - 1) / 2;
    std::vector<double> g(n), vert(n), trial(n), sm(n);
    auto coordinate_sweep = [&]() {
        for (std::size_t i = 0; i < n; ++i) {
            if (v[i] == 0) continue;
            double lo = 0, hi = v[i];
            auto at = [&](double t) {
                trial = s;
                trial[i] = t;
                return obj(trial);
            };
            double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
            double fx1 = at(x1), fx2 = at(x2);
            for (int k = 0; k < 80; ++k) {
                if (fx1 < fx2) {
                    lo = x1; x1 = x2; fx1 = fx2;
                    x2 = lo + golden * (hi - lo); fx2 = at(x2);
                } else {
                    hi = x2; x2 = x1; fx2 = fx1;
                    x1 = hi - golden * (hi - lo); fx1 = at(x1);
                }
            }
            const double t = 0.5 * (lo + hi);
            const double f_t = at(t);
            const double f_lo = at(0.0), f_hi = at(v[i]);
            if (f_hi >= f_t && f_hi >= f_lo)
                s[i] = v[i];
            else if (f_lo >= f_t)
                s[i] = 0;
            else
                s[i] = t;
        }
    };

    for (int iter = 0; iter < 5000; ++iter) {
        for (std::size_t i = 0; i < n; ++i)
            sm[i] = (1 - mix) * s[i] + mix * 0.5 * v[i];
        double f0 = 0, f1 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            f0 += std::sqrt(sm[i] * a0[i]);
            f1 += std::sqrt(std::max(v[i] - sm[i], 0.0) * a1[i]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double r = std::max(v[i] - sm[i], 0.0);
            double g0 = 0, g1 = 0;
            if (a0[i] > 0)
                g0 = sm[i] > 0 ? std::min(c0 * f0 * std::sqrt(a0[i] / sm[i]), kGradClamp)
                               : c0 * kGradClamp;
            if (a1[i] > 0)
                g1 = r > 0 ? std::min(c1 * f1 * std::sqrt(a1[i] / r), kGradClamp)
                           : c1 * kGradClamp;
            g[i] = g0 - g1;
            vert[i] = g[i] > 0 ? v[i] : 0.0;
        }
        double gap = mix * (c0 + c1);
        for (std::size_t i = 0; i < n; ++i) gap += g[i] * (vert[i] - s[i]);
        if (gap <= 1e-9) break;

        // conditional-gradient step toward the box vertex
        double lo = 0, hi = 1;
        double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
        auto at = [&](double t) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = s[i] + t * (vert[i] - s[i]);
            return obj(trial);
        };
        double fx1 = at(x1), fx2 = at(x2);
        for (int k = 0; k < 80; ++k) {
            if (fx1 < fx2) {
                lo = x1; x1 = x2; fx1 = fx2;
                x2 = lo + golden * (hi - lo); fx2 = at(x2);
            } else {
                hi = x2; x2 = x1; fx2 = fx1;
                x1 = hi - golden * (hi - lo); fx1 = at(x1);
            }
        }
        const double t = 0.5 * (lo + hi);
        for (std::size_t i = 0; i < n; ++i)
            s[i] = std::clamp(s[i] + t * (vert[i] - s[i]), 0.0, v[i]);
        // exact per-coordinate maximization (the box is separable)
        coordinate_sweep();
        best = std::max(best, obj(s));
    }
    return best;
}

FvdgBounds fvdg_check(const ProbVec& p, const ProbVec& q) {
    const double f = fidelity(p.floats(), q.floats());
    FvdgBounds b;
    b.lower = 1 - std::sqrt(f);
    b.delta = trace_distance(p.floats(), q.floats());
    b.upper = std::sqrt(std::max(0.0, 1 - f));
    if (!(b.lower <= b.delta + 1e-12 && b.delta <= b.upper + 1e-12))
        throw std::logic_error("fvdg_check: sandwich violated");
    return b;
}

} // namespace coinsearch
