// probvec.hpp
// Exact probability vectors, indexed product shapes, and the closed-form
// spectral quantities used by every cheating-strategy formula.

#pragma once

#include "coinsearch/rational.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace coinsearch {

// Shape of a Cartesian product index set A_1 x ... x A_n.
struct IndexShape {
    std::vector<int> dims;

    IndexShape() = default;
    explicit IndexShape(std::vector<int> d);

    int axes() const { return static_cast<int>(dims.size()); }
    std::int64_t total() const;
};

// Nonnegative rational vector with unit sum. The float view is cached at
// construction and is what all numerical routines consume.
class ProbVec {
  public:
    explicit ProbVec(std::vector<Rational> entries);

    std::size_t size() const { return entries_.size(); }
    const std::vector<Rational>& rationals() const { return entries_; }
    const Rational& rational(std::size_t i) const { return entries_[i]; }
    const std::vector<double>& floats() const { return float_view_; }
    double fl(std::size_t i) const { return float_view_[i]; }

    bool operator==(const ProbVec& other) const { return entries_ == other.entries_; }

  private:
    std::vector<Rational> entries_;
    std::vector<double> float_view_;
};

ProbVec uniform_probvec(int n);

// Gradient clamp used wherever a fidelity derivative hits a zero coordinate
// with positive reference mass.
inline constexpr double kGradClamp = 1e12;

// F(p,q) = (sum_x sqrt(p_x q_x))^2 for nonnegative vectors.
double fidelity(std::span<const double> p, std::span<const double> q);

// 1/2 * ||p - q||_1.
double trace_distance(std::span<const double> p, std::span<const double> q);

// Sums v over the dropped axes of the product shape; `drop` holds 1-based
// axis indices. Keeps the remaining axes in their original order.
std::vector<double> marginal(std::span<const double> v, const IndexShape& shape,
                             const std::vector<int>& drop);
std::vector<Rational> marginal(std::span<const Rational> v, const IndexShape& shape,
                               const std::vector<int>& drop);

// Largest eigenvalue of eta*sqrt(p)sqrt(p)^T + tau*sqrt(q)sqrt(q)^T:
// (eta + tau + sqrt((eta-tau)^2 + 4*eta*tau*F(p,q))) / 2.
double rank2_lambda_max(double eta, double tau, std::span<const double> p,
                        std::span<const double> q);

// Entry-wise square of the normalized principal eigenvector of the matrix
// above; the returned unit-sum vector v maximizes eta*F(v,p) + tau*F(v,q).
std::vector<double> rank2_argmax(double eta, double tau, std::span<const double> p,
                                 std::span<const double> q);

// Concave hull of the two scaled fidelities c0*F(.,a0) and c1*F(.,a1),
// evaluated at v: max { c0 F(s,a0) + c1 F(v-s,a1) : 0 <= s <= v }.
// Solved by conditional gradient on the split s over the box [0, v].
double hull_two_fidelities(double c0, std::span<const double> a0, double c1,
                           std::span<const double> a1, std::span<const double> v);

struct FvdgBounds {
    double lower; // 1 - sqrt(F)
    double delta; // trace distance
    double upper; // sqrt(1 - F)
};

// Fuchs - van de Graaf sandwich for a pair of probability vectors.
FvdgBounds fvdg_check(const ProbVec& p, const ProbVec& q);

} // namespace coinsearch
