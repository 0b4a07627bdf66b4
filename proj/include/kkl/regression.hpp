#ifndef KKL_REGRESSION_HPP
#define KKL_REGRESSION_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "kkl/errors.hpp"
#include "kkl/kernels.hpp"
#include "kkl/random.hpp"
#include "kkl/types.hpp"

namespace kkl {

// Cholesky of a symmetric matrix with a fallback to pivoted LDL^T; rejects numerically singular input.
template <typename Scalar>
class SymmetricSolver {
public:
    SymmetricSolver(const Mat<Scalar>& K, const std::string& context) {
        const Eigen::Index n = K.rows();
        const Scalar tiny = Scalar(n) * std::numeric_limits<Scalar>::epsilon();
        llt_.compute(K);
        if (llt_.info() == Eigen::Success) {
            const Vec<Scalar> piv = llt_.matrixLLT().diagonal().array().square();
            smallest_pivot_ = piv.minCoeff();
            if (smallest_pivot_ > tiny * piv.maxCoeff()) {
                use_llt_ = true;
                return;
            }
        }
        ldlt_.compute(K);
        const Vec<Scalar> piv = ldlt_.vectorD().cwiseAbs();
        smallest_pivot_ = piv.minCoeff();
        if (ldlt_.info() != Eigen::Success || !(smallest_pivot_ > tiny * piv.maxCoeff()))
            throw ConditioningError(context + ": matrix is numerically singular", static_cast<double>(smallest_pivot_));
    }

    template <typename Rhs>
    Mat<Scalar> solve(const Eigen::MatrixBase<Rhs>& rhs) const {
        return use_llt_ ? Mat<Scalar>(llt_.solve(rhs)) : Mat<Scalar>(ldlt_.solve(rhs));
    }

    bool used_cholesky() const { return use_llt_; }
    Scalar smallest_pivot() const { return smallest_pivot_; }

private:
    Eigen::LLT<Mat<Scalar>> llt_;
    Eigen::LDLT<Mat<Scalar>> ldlt_;
    bool use_llt_ = false;
    Scalar smallest_pivot_ = Scalar(0);
};

template <typename Scalar = double>
struct PseudoInverseModel {
    RadialKernel<Scalar> kernel;
    Points<Scalar> centers;    // n x m
    Mat<Scalar> coefficients;  // d_x x n, row k holds c_k
    Scalar alpha = Scalar(0);

    Eigen::Index input_dim() const { return centers.cols(); }
    Eigen::Index output_dim() const { return coefficients.rows(); }

    template <typename Derived>
    Vec<Scalar> operator()(const Eigen::MatrixBase<Derived>& z) const {
        if (z.size() != centers.cols()) throw ArgumentError("krr_predict: input has wrong dimension");
        return coefficients * kernel_column(kernel, centers, z);
    }

    // Batch prediction; one query per row in, one estimate per row out.
    template <typename Derived>
    Mat<Scalar> predict(const Eigen::MatrixBase<Derived>& Z) const {
        if (Z.cols() != centers.cols()) throw ArgumentError("krr_predict: input has wrong dimension");
        return gram(kernel, Z, centers) * coefficients.transpose();
    }
};

template <typename Scalar, typename DZ, typename DX>
PseudoInverseModel<Scalar> krr_fit(const Eigen::MatrixBase<DZ>& Z, const Eigen::MatrixBase<DX>& X,
                                   const RadialKernel<Scalar>& kernel, Scalar alpha) {
    if (Z.rows() < 1) throw ArgumentError("krr_fit: no samples");
    if (Z.rows() != X.rows()) throw ArgumentError("krr_fit: inputs and targets differ in sample count");
    if (alpha < Scalar(0)) throw ArgumentError("krr_fit: ridge must be non-negative");
    Mat<Scalar> K = gram(kernel, Z);
    K.diagonal().array() += alpha;
    const SymmetricSolver<Scalar> solver(K, "krr_fit");
    PseudoInverseModel<Scalar> model{kernel, Z, solver.solve(X).transpose(), alpha};
    return model;
}

template <typename Scalar = double>
struct InterpolantModel {
    RadialKernel<Scalar> kernel;
    Points<Scalar> centers;
    Vec<Scalar> coefficients;
    Scalar jitter = Scalar(0);

    template <typename Derived>
    Scalar operator()(const Eigen::MatrixBase<Derived>& x) const {
        return coefficients.dot(kernel_column(kernel, centers, x));
    }

    template <typename Derived>
    Vec<Scalar> predict(const Eigen::MatrixBase<Derived>& X) const {
        return gram(kernel, X, centers) * coefficients;
    }
};

// Solves G c = y, escalating a diagonal jitter from 1e-10 to 1e-6 times trace(G)/n on failure.
template <typename Scalar, typename DP, typename DY>
InterpolantModel<Scalar> kernel_interpolate(const Eigen::MatrixBase<DP>& points, const Eigen::MatrixBase<DY>& values,
                                            const RadialKernel<Scalar>& kernel) {
    if (points.rows() != values.size()) throw ArgumentError("kernel_interpolate: point and value counts differ");
    const Mat<Scalar> G = gram(kernel, points);
    const Scalar scale = G.trace() / Scalar(G.rows());
    Scalar jitter = Scalar(0);
    Scalar last_pivot = Scalar(0);
    for (int attempt = 0; attempt <= 5; ++attempt) {
        if (attempt > 0) jitter = scale * Scalar(1e-10) * std::pow(Scalar(10), attempt - 1);
        Mat<Scalar> K = G;
        K.diagonal().array() += jitter;
        try {
            const SymmetricSolver<Scalar> solver(K, "kernel_interpolate");
            return InterpolantModel<Scalar>{kernel, points, solver.solve(values), jitter};
        } catch (const ConditioningError& e) {
            last_pivot = static_cast<Scalar>(e.smallest_pivot());
        }
    }
    throw ConditioningError("kernel_interpolate: singular even with jitter " + std::to_string(double(jitter)),
                            static_cast<double>(last_pivot));
}

// Mean over rows of the squared Euclidean error.
template <typename DA, typename DB>
double mean_squared_error(const Eigen::MatrixBase<DA>& prediction, const Eigen::MatrixBase<DB>& truth) {
    if (prediction.rows() != truth.rows() || prediction.cols() != truth.cols())
        throw ArgumentError("mean_squared_error: shape mismatch");
    return static_cast<double>((prediction - truth).rowwise().squaredNorm().mean());
}

// Seeded Fisher-Yates permutation of 0..n-1.
inline std::vector<Eigen::Index> seeded_permutation(Eigen::Index n, std::uint64_t seed) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index(0));
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(uniform01(seed, static_cast<std::uint64_t>(i), 0x5eed) * double(i + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(std::min(j, i))]);
    }
    return perm;
}

// fold[i] in 0..folds-1: contiguous blocks of a seeded shuffle.
inline std::vector<int> fold_assignment(Eigen::Index n, int folds, std::uint64_t seed) {
    const auto perm = seeded_permutation(n, seed);
    std::vector<int> fold(static_cast<std::size_t>(n));
    Eigen::Index start = 0;
    for (int f = 0; f < folds; ++f) {
        const Eigen::Index size = n / folds + (f < n % folds ? 1 : 0);
        for (Eigen::Index i = start; i < start + size; ++i) fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = f;
        start += size;
    }
    return fold;
}

struct CvResult {
    std::vector<double> fold_mse;
    double mean_mse = 0.0;
};

namespace detail {

inline Eigen::MatrixXd select_rows(const Eigen::MatrixXd& M, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), M.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = M.row(rows[i]);
    return out;
}

inline Eigen::MatrixXd select_block(const Eigen::MatrixXd& M, const std::vector<Eigen::Index>& rows,
                                    const std::vector<Eigen::Index>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < rows.size(); ++i)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = M(rows[i], cols[j]);
    return out;
}

// Cross validation against a precomputed self Gram matrix of the inputs.
inline CvResult cross_validate_gram(const Eigen::MatrixXd& K, const Eigen::MatrixXd& X, double alpha,
                                    const std::vector<int>& fold, int folds) {
    CvResult out;
    for (int f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> train, valid;
        for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? valid : train).push_back(static_cast<Eigen::Index>(i));
        Eigen::MatrixXd Ktt = select_block(K, train, train);
        Ktt.diagonal().array() += alpha;
        const SymmetricSolver<double> solver(Ktt, "cross_validate fold " + std::to_string(f));
        const Eigen::MatrixXd coef = solver.solve(select_rows(X, train));
        const Eigen::MatrixXd pred = select_block(K, valid, train) * coef;
        out.fold_mse.push_back(mean_squared_error(pred, select_rows(X, valid)));
    }
    out.mean_mse = std::accumulate(out.fold_mse.begin(), out.fold_mse.end(), 0.0) / folds;
    return out;
}

}  // namespace detail

inline CvResult cross_validate(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X, const RadialKernel<double>& kernel,
                               double alpha, int folds, std::uint64_t seed) {
    if (folds < 2) throw ArgumentError("cross_validate: need at least two folds");
    if (Z.rows() < folds) throw ArgumentError("cross_validate: fewer samples than folds");
    if (Z.rows() != X.rows()) throw ArgumentError("cross_validate: inputs and targets differ in sample count");
    return detail::cross_validate_gram(gram(kernel, Z), X, alpha, fold_assignment(Z.rows(), folds, seed), folds);
}

struct GridCell {
    double sigma = 0.0;
    double alpha = 0.0;
    std::vector<double> fold_mse;
    double mean_mse = std::numeric_limits<double>::quiet_NaN();
    std::string failure;  // empty when the cell was evaluated

    bool ok() const { return failure.empty(); }
};

struct GridSearchResult {
    std::vector<GridCell> cells;  // sigma-major in input order
    double best_sigma = 0.0;
    double best_alpha = 0.0;
    double best_mse = std::numeric_limits<double>::infinity();
};

// Exhaustive search; ties in mean MSE go to the larger ridge, then the larger bandwidth.
inline GridSearchResult grid_search(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X,
                                    const RadialKernel<double>& family, const std::vector<double>& sigmas,
                                    const std::vector<double>& alphas, int folds, std::uint64_t seed) {
    if (sigmas.empty() || alphas.empty()) throw ArgumentError("grid_search: empty grid");
    if (folds < 2 || Z.rows() < folds) throw ArgumentError("grid_search: invalid fold count");
    const auto fold = fold_assignment(Z.rows(), folds, seed);
    GridSearchResult out;
    bool found = false;
    for (double sigma : sigmas) {
        const Eigen::MatrixXd K = gram(family.with_bandwidth(sigma), Z);
        for (double alpha : alphas) {
            GridCell cell;
            cell.sigma = sigma;
            cell.alpha = alpha;
            try {
                const CvResult cv = detail::cross_validate_gram(K, X, alpha, fold, folds);
                cell.fold_mse = cv.fold_mse;
                cell.mean_mse = cv.mean_mse;
            } catch (const NumericError& e) {
                cell.failure = e.what();
            }
            if (cell.ok() && std::isfinite(cell.mean_mse)) {
                const bool better = !found || cell.mean_mse < out.best_mse ||
                                    (cell.mean_mse == out.best_mse &&
                                     (alpha > out.best_alpha || (alpha == out.best_alpha && sigma > out.best_sigma)));
                if (better) {
                    found = true;
                    out.best_mse = cell.mean_mse;
                    out.best_alpha = alpha;
                    out.best_sigma = sigma;
                }
            }
            out.cells.push_back(std::move(cell));
        }
    }
    if (!found) throw NumericError("grid_search: every grid cell failed");
    return out;
}

// max over probes of the distance to the nearest sample.
template <typename DS, typename DP>
double fill_distance(const Eigen::MatrixBase<DS>& samples, const Eigen::MatrixBase<DP>& probes) {
    if (samples.rows() == 0 || probes.rows() == 0) throw ArgumentError("fill_distance: empty point set");
    if (samples.cols() != probes.cols()) throw ArgumentError("fill_distance: dimension mismatch");
    const Eigen::MatrixXd st = samples.transpose();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < probes.rows(); ++j) {
        const Eigen::VectorXd p = probes.row(j).transpose();
        worst = std::max(worst, std::sqrt((st.colwise() - p).colwise().squaredNorm().minCoeff()));
    }
    return worst;
}

}  // namespace kkl

#endif
