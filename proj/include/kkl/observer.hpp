#ifndef KKL_OBSERVER_HPP
#define KKL_OBSERVER_HPP

#include <cmath>
#include <complex>
#include <string>

#include "kkl/errors.hpp"
#include "kkl/types.hpp"

namespace kkl {

template <typename Scalar = double>
struct DeepKKLParams {
    int order = 3;
    Scalar beta = Scalar(0.9);
    int truncation = 50;

    void validate() const {
        if (order < 1) throw ArgumentError("observer order must be positive");
        if (!(beta > Scalar(0) && beta < Scalar(1))) throw ArgumentError("observer beta must lie in (0, 1)");
        if (truncation < order) throw ArgumentError("truncation length must be at least the observer order");
    }

    // beta * (1 + (m - 1) / (ell - m)); +inf when ell == m and m > 1.
    Scalar beta_tilde() const {
        if (order == 1) return beta;
        if (truncation <= order) return std::numeric_limits<Scalar>::infinity();
        return beta * (Scalar(1) + Scalar(order - 1) / Scalar(truncation - order));
    }

    // beta~ < 1 rearranged as beta (ell - 1) < ell - m, which avoids rounding the ratio at the boundary.
    bool bound_valid() const {
        if (order == 1) return true;
        return truncation > order && beta * Scalar(truncation - 1) < Scalar(truncation - order);
    }

    // Smallest truncation length for which the tail bound applies.
    int min_valid_truncation() const {
        DeepKKLParams probe = *this;
        for (probe.truncation = order; !probe.bound_valid(); ++probe.truncation) {}
        return probe.truncation;
    }
};

template <typename Scalar = double>
struct ObserverMatrices {
    Mat<Scalar> A;
    Vec<Scalar> b;
};

template <typename Scalar>
ObserverMatrices<Scalar> build_matrices(const DeepKKLParams<Scalar>& params) {
    params.validate();
    const int m = params.order;
    ObserverMatrices<Scalar> out;
    out.A = Mat<Scalar>::Zero(m, m);
    out.A.diagonal().setConstant(params.beta);
    if (m > 1) out.A.diagonal(-1).setConstant(Scalar(1) - params.beta);
    out.b = Vec<Scalar>::Zero(m);
    out.b(0) = Scalar(1) - params.beta;
    return out;
}

// w_{k,t} = C(k+t, k) beta^t (1-beta)^(k+1) for t = 0..horizon.
template <typename Scalar>
Vec<Scalar> series_weights(int k, Scalar beta, int horizon) {
    if (k < 0 || horizon < 0) throw ArgumentError("series_weights: k and horizon must be non-negative");
    Vec<Scalar> w(horizon + 1);
    w(0) = std::pow(Scalar(1) - beta, k + 1);
    for (int t = 0; t < horizon; ++t) w(t + 1) = w(t) * beta * Scalar(k + t + 1) / Scalar(t + 1);
    return w;
}

// Row k holds w_{k,0..ell-m}.
template <typename Scalar>
Mat<Scalar> weight_table(const DeepKKLParams<Scalar>& params) {
    params.validate();
    const int horizon = params.truncation - params.order;
    Mat<Scalar> table(params.order, horizon + 1);
    for (int k = 0; k < params.order; ++k) table.row(k) = series_weights(k, params.beta, horizon).transpose();
    return table;
}

// Neumaier compensated accumulator.
template <typename Scalar>
class CompensatedSum {
public:
    void add(Scalar v) {
        const Scalar t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    Scalar value() const { return sum_ + comp_; }

private:
    Scalar sum_{};
    Scalar comp_{};
};

// back(j) holds the output y_{-(j+1)}, j = 0..ell-1.
template <typename Scalar, typename Derived>
Vec<Scalar> truncated_injection(const Eigen::MatrixBase<Derived>& back, const Mat<Scalar>& weights) {
    const int m = static_cast<int>(weights.rows());
    const int horizon = static_cast<int>(weights.cols()) - 1;
    if (back.size() < m + horizon)
        throw ArgumentError("truncated_injection: history of " + std::to_string(back.size()) +
                            " outputs is shorter than the truncation length " + std::to_string(m + horizon));
    Vec<Scalar> z(m);
    for (int k = 0; k < m; ++k) {
        CompensatedSum<Scalar> acc;
        for (int t = 0; t <= horizon; ++t) acc.add(weights(k, t) * back(k + t));
        z(k) = acc.value();
    }
    return z;
}

template <typename Scalar, typename Derived>
Vec<Scalar> truncated_injection(const Eigen::MatrixBase<Derived>& back, const DeepKKLParams<Scalar>& params) {
    return truncated_injection<Scalar>(back, weight_table(params));
}

// Tail bound C(ell-1, m-1) sqrt(m) sup|h| (1-beta)/(1-beta~) beta~ beta^(ell-m), in the log domain.
template <typename Scalar>
Scalar truncation_bound(const DeepKKLParams<Scalar>& params, Scalar output_bound) {
    params.validate();
    if (!params.bound_valid())
        throw PreconditionError("truncation_bound: beta~ >= 1; the smallest valid truncation length is " +
                                std::to_string(params.min_valid_truncation()));
    if (output_bound <= Scalar(0)) return Scalar(0);
    using std::lgamma;
    using std::log;
    const int m = params.order;
    const int ell = params.truncation;
    const Scalar bt = params.beta_tilde();
    const Scalar log_binom = lgamma(Scalar(ell)) - lgamma(Scalar(m)) - lgamma(Scalar(ell - m + 1));
    const Scalar log_bound = log_binom + Scalar(0.5) * log(Scalar(m)) + log(output_bound) +
                             log(Scalar(1) - params.beta) - log(Scalar(1) - bt) + log(bt) +
                             Scalar(ell - m) * log(params.beta);
    return std::exp(log_bound);
}

// Closed-form injection of the rotation by gamma with output 2 cos(theta), order 2.
template <typename Scalar>
Vec<Scalar> analytic_injection(Scalar theta, Scalar beta, Scalar gamma) {
    using C = std::complex<Scalar>;
    const C a = (Scalar(1) - beta) / (std::polar(Scalar(1), gamma) - beta);
    const C e = std::polar(Scalar(1), theta);
    Vec<Scalar> z(2);
    z << Scalar(2) * std::real(a * e), Scalar(2) * std::real(a * a * e);
    return z;
}

// Recovers (cos theta, sin theta) from the two injection values by solving for (e^{i theta}, e^{-i theta}).
template <typename Scalar, typename Derived>
Vec<Scalar> analytic_pseudo_inverse(const Eigen::MatrixBase<Derived>& z, Scalar beta, Scalar gamma) {
    using C = std::complex<Scalar>;
    if (z.size() != 2) throw ArgumentError("analytic_pseudo_inverse: expects a 2-vector");
    const C a = (Scalar(1) - beta) / (std::polar(Scalar(1), gamma) - beta);
    Eigen::Matrix<C, 2, 2> M;
    M << a, std::conj(a), a * a, std::conj(a * a);
    Eigen::Matrix<C, 2, 1> rhs(C(z(0)), C(z(1)));
    const Eigen::Matrix<C, 2, 1> sol = M.fullPivLu().solve(rhs);
    const C e = sol(0);
    const Scalar mag = std::abs(e);
    if (!(mag > Scalar(0)) || !std::isfinite(mag)) throw NumericError("analytic_pseudo_inverse: degenerate solution");
    Vec<Scalar> x(2);
    x << e.real() / mag, e.imag() / mag;
    return x;
}

// z_{t+1} = A z_t + b y_t and xhat_t = inverse(z_t); returns one estimate per row.
template <typename Scalar, typename Inverse, typename Derived>
Mat<Scalar> run_observer(const ObserverMatrices<Scalar>& matrices, const Inverse& inverse,
                         const Eigen::MatrixBase<Derived>& outputs, const Vec<Scalar>& z_init) {
    if (z_init.size() != matrices.A.rows()) throw ArgumentError("run_observer: initial state has wrong dimension");
    const Eigen::Index T = outputs.size();
    Mat<Scalar> estimates;
    Vec<Scalar> z = z_init;
    for (Eigen::Index t = 0; t < T; ++t) {
        if (!z.allFinite()) throw NumericError("run_observer: non-finite filter state at step " + std::to_string(t));
        const Vec<Scalar> xhat = inverse(z);
        if (t == 0) estimates.resize(T, xhat.size());
        estimates.row(t) = xhat.transpose();
        z = (matrices.A * z + matrices.b * outputs(t)).eval();
    }
    return estimates;
}

}  // namespace kkl

#endif
