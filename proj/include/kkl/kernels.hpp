#ifndef KKL_KERNELS_HPP
#define KKL_KERNELS_HPP

#include <array>
#include <cmath>
#include <string>

#include "kkl/errors.hpp"
#include "kkl/types.hpp"

namespace kkl {

enum class KernelFamily { Wendland, Matern, Gaussian };

// Half-integer Matern orders with elementary closed forms.
enum class MaternOrder { Half, ThreeHalves, FiveHalves };

// Compactly supported piecewise polynomial (1 - r)_+^power * poly(r), poly(0) = 1.
template <typename Scalar>
struct WendlandProfile {
    int power = 0;
    std::array<Scalar, 4> poly{};  // ascending coefficients

    Scalar operator()(Scalar r) const {
        if (r >= Scalar(1)) return Scalar(0);
        Scalar p = poly[3];
        for (int i = 2; i >= 0; --i) p = p * r + poly[i];
        Scalar base = Scalar(1) - r;
        Scalar lead = Scalar(1);
        for (int i = 0; i < power; ++i) lead *= base;
        return lead * p;
    }
};

template <typename Scalar>
WendlandProfile<Scalar> wendland_profile(int dim, int k) {
    if (dim < 1) throw ArgumentError("wendland_profile: dimension must be positive");
    if (k < 0 || k > 3) throw ArgumentError("wendland_profile: smoothness k must be in 0..3");
    const Scalar l = Scalar(dim / 2 + k + 1);
    WendlandProfile<Scalar> w;
    w.power = dim / 2 + 2 * k + 1;
    switch (k) {
        case 0:
            w.poly = {1, 0, 0, 0};
            break;
        case 1:
            w.poly = {1, l + 1, 0, 0};
            break;
        case 2:
            w.poly = {3, 3 * l + 6, l * l + 4 * l + 3, 0};
            break;
        default:
            w.poly = {15, 15 * l + 45, 6 * l * l + 36 * l + 45, l * l * l + 9 * l * l + 23 * l + 15};
            break;
    }
    const Scalar c0 = w.poly[0];
    for (auto& c : w.poly) c /= c0;
    return w;
}

template <typename Scalar = double>
class RadialKernel {
public:
    static RadialKernel wendland(int dim, int k, Scalar sigma) {
        RadialKernel out(KernelFamily::Wendland, sigma);
        out.dim_ = dim;
        out.smoothness_ = k;
        out.wendland_ = wendland_profile<Scalar>(dim, k);
        return out;
    }

    static RadialKernel matern(MaternOrder order, Scalar sigma) {
        RadialKernel out(KernelFamily::Matern, sigma);
        out.order_ = order;
        return out;
    }

    static RadialKernel gaussian(Scalar sigma) { return RadialKernel(KernelFamily::Gaussian, sigma); }

    KernelFamily family() const { return family_; }
    Scalar bandwidth() const { return sigma_; }
    // Declared ambient dimension for Wendland kernels, 0 otherwise.
    int dim() const { return dim_; }
    int smoothness() const { return smoothness_; }
    MaternOrder matern_order() const { return order_; }

    RadialKernel with_bandwidth(Scalar sigma) const {
        RadialKernel out = *this;
        if (!(sigma > 0)) throw ArgumentError("kernel bandwidth must be positive");
        out.sigma_ = sigma;
        return out;
    }

    // Univariate profile at scaled distance r = |x - x'| / sigma.
    Scalar profile(Scalar r) const {
        using std::exp;
        using std::sqrt;
        switch (family_) {
            case KernelFamily::Wendland:
                return wendland_(r);
            case KernelFamily::Gaussian:
                return exp(-r * r);
            case KernelFamily::Matern:
                switch (order_) {
                    case MaternOrder::Half:
                        return exp(-r);
                    case MaternOrder::ThreeHalves: {
                        const Scalar s = sqrt(Scalar(3)) * r;
                        return (Scalar(1) + s) * exp(-s);
                    }
                    case MaternOrder::FiveHalves: {
                        const Scalar s = sqrt(Scalar(5)) * r;
                        return (Scalar(1) + s + s * s / Scalar(3)) * exp(-s);
                    }
                }
        }
        return Scalar(0);
    }

    Scalar from_distance(Scalar d) const { return profile(d / sigma_); }

    template <typename DA, typename DB>
    Scalar operator()(const Eigen::MatrixBase<DA>& x, const Eigen::MatrixBase<DB>& y) const {
        if (x.size() != y.size()) throw ArgumentError("kernel evaluation: dimension mismatch");
        check_dim(x.size());
        return from_distance((x - y).norm());
    }

    void check_dim(Eigen::Index d) const {
        if (family_ == KernelFamily::Wendland && d != dim_)
            throw ArgumentError("Wendland kernel declared for dimension " + std::to_string(dim_) +
                                " evaluated on dimension " + std::to_string(d));
    }

private:
    RadialKernel(KernelFamily family, Scalar sigma) : family_(family), sigma_(sigma) {
        if (!(sigma > 0)) throw ArgumentError("kernel bandwidth must be positive");
    }

    KernelFamily family_;
    Scalar sigma_;
    int dim_ = 0;
    int smoothness_ = 0;
    MaternOrder order_ = MaternOrder::Half;
    WendlandProfile<Scalar> wendland_{};
};

// Cross Gram matrix K(i, j) = kernel(P.row(i), Q.row(j)).
template <typename Scalar, typename DP, typename DQ>
Mat<Scalar> gram(const RadialKernel<Scalar>& kernel, const Eigen::MatrixBase<DP>& P,
                 const Eigen::MatrixBase<DQ>& Q) {
    if (P.rows() == 0 || Q.rows() == 0) throw ArgumentError("gram: empty point list");
    if (P.cols() != Q.cols()) throw ArgumentError("gram: point dimension mismatch");
    kernel.check_dim(P.cols());
    const Mat<Scalar> pt = P.transpose();
    const Mat<Scalar> qt = Q.transpose();
    Mat<Scalar> K(P.rows(), Q.rows());
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < qt.cols(); ++j)
        for (Eigen::Index i = 0; i < pt.cols(); ++i)
            K(i, j) = kernel.from_distance((pt.col(i) - qt.col(j)).norm());
    return K;
}

// Self Gram matrix; upper triangle is evaluated and mirrored so the result is exactly symmetric.
template <typename Scalar, typename DP>
Mat<Scalar> gram(const RadialKernel<Scalar>& kernel, const Eigen::MatrixBase<DP>& P) {
    if (P.rows() == 0) throw ArgumentError("gram: empty point list");
    kernel.check_dim(P.cols());
    const Mat<Scalar> pt = P.transpose();
    const Eigen::Index n = pt.cols();
    Mat<Scalar> K(n, n);
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
            K(i, j) = kernel.from_distance((pt.col(i) - pt.col(j)).norm());
            K(j, i) = K(i, j);
        }
        K(j, j) = kernel.profile(Scalar(0));
    }
    return K;
}

// Column of kernel sections k(i) = kernel(P.row(i), x).
template <typename Scalar, typename DP, typename DX>
Vec<Scalar> kernel_column(const RadialKernel<Scalar>& kernel, const Eigen::MatrixBase<DP>& P,
                          const Eigen::MatrixBase<DX>& x) {
    if (P.cols() != x.size()) throw ArgumentError("kernel_column: dimension mismatch");
    kernel.check_dim(x.size());
    const Vec<Scalar> xv = x;
    Vec<Scalar> k(P.rows());
    for (Eigen::Index i = 0; i < P.rows(); ++i) k(i) = kernel.from_distance((P.row(i).transpose() - xv).norm());
    return k;
}

// Text form, e.g. "wendland dim=3 k=1 sigma=10".
std::string kernel_spec(const RadialKernel<double>& kernel);
RadialKernel<double> parse_kernel_spec(const std::string& spec);

}  // namespace kkl

#endif
