#ifndef KKL_SPECTRAL_HPP
#define KKL_SPECTRAL_HPP

#include <cstdint>
#include <memory>
#include <optional>

#include "kkl/dynamics.hpp"
#include "kkl/kernels.hpp"
#include "kkl/observer.hpp"
#include "kkl/regression.hpp"
#include "kkl/types.hpp"

namespace kkl {

// G(i,j) = k(x_i, x_j), A(i,j) = k(xprev_i, x_j), R(i,j) = k(xprev_i, xprev_j).
struct SnapshotMatrices {
    Eigen::MatrixXd G;
    Eigen::MatrixXd A;
    Eigen::MatrixXd R;
};

SnapshotMatrices build_snapshot_matrices(const SnapshotSet& snapshots, const RadialKernel<double>& kernel);

// R - lambda A - conj(lambda) A^T + |lambda|^2 G.
Eigen::MatrixXcd residual_matrix(const SnapshotMatrices& matrices, cplx lambda);

struct CandidateGrid {
    Eigen::VectorXcd values;
    Eigen::VectorXd angles;  // in (0, 2 pi), ascending
    double mesh_size = 0.0;
};

// Midpoints of p equal arcs of the unit circle.
CandidateGrid candidate_grid(int p);

struct SpectralOptions {
    double gram_ridge = 1e-10;  // relative to trace(G) / n
    double psi_ridge = 1e-8;
    int max_rank = 300;  // 0 keeps the full kernel space
    int oversample = 100;
    int power_iterations = 4;
    int exact_below = 1500;  // dense eigendecomposition of G below this size
    std::uint64_t seed = 0;
};

struct CandidateSolution {
    Eigen::VectorXcd coefficients;  // reduced or lifted, depending on the caller
    double residual = 0.0;
    double eigenvalue = 0.0;
};

// Dominant eigenspace of G with a whitening W such that W^T (G + eps I) W = I; the per-candidate
// Hermitian problems are solved in this basis.
class SpectralBasis {
public:
    SpectralBasis(const SnapshotMatrices& matrices, const SpectralOptions& options);

    Eigen::Index size() const { return whitening_.rows(); }
    Eigen::Index rank() const { return whitening_.cols(); }
    double ridge() const { return ridge_; }
    bool full_rank() const { return rank() == size(); }

    const Eigen::MatrixXd& whitening() const { return whitening_; }
    const Eigen::MatrixXd& gram_whitening() const { return gram_whitening_; }  // G W
    const Eigen::MatrixXd& metric() const { return metric_; }                  // W^T G W

    // Smallest eigenpair of W^T M(lambda) W; coefficients are reduced (length rank()).
    CandidateSolution solve(cplx lambda) const;
    Eigen::VectorXcd lift(const Eigen::VectorXcd& reduced) const { return whitening_ * reduced; }

private:
    Eigen::MatrixXd whitening_;
    Eigen::MatrixXd gram_whitening_;
    Eigen::MatrixXd metric_;
    Eigen::MatrixXd shift_sum_;  // W^T (R + G) W
    Eigen::MatrixXd cross_;      // W^T A W
    double ridge_ = 0.0;
};

// Full generalized problem (M(lambda), G + eps I); v is normalized so that v^* (G + eps I) v = 1.
CandidateSolution solve_candidate(cplx lambda, const SnapshotMatrices& matrices, double gram_ridge);

struct SpectralScan {
    std::shared_ptr<const SpectralBasis> basis;
    Eigen::MatrixXd points;
    RadialKernel<double> kernel;
    Eigen::VectorXcd candidates;
    Eigen::VectorXd angles;
    Eigen::VectorXd residuals;
    Eigen::MatrixXcd reduced;  // rank x p
};

SpectralScan scan_candidates(std::shared_ptr<const SpectralBasis> basis, const Eigen::MatrixXd& points,
                             const RadialKernel<double>& kernel, const Eigen::VectorXcd& candidates);

class SpectralModel {
public:
    SpectralModel(const SpectralScan& scan, std::optional<double> threshold, double psi_ridge);

    Eigen::Index size() const { return candidates_.size(); }
    bool empty() const { return size() == 0; }
    const Eigen::VectorXcd& candidates() const { return candidates_; }
    const Eigen::VectorXd& angles() const { return angles_; }
    const Eigen::VectorXd& residuals() const { return residuals_; }
    const Eigen::MatrixXcd& reduced() const { return reduced_; }
    const Eigen::MatrixXd& points() const { return points_; }
    const RadialKernel<double>& kernel() const { return kernel_; }
    const SpectralBasis& basis() const { return *basis_; }
    double psi_ridge() const { return psi_ridge_; }

    // Coefficient vectors v_j as columns (n x p).
    Eigen::MatrixXcd coefficients() const { return basis_->lift(reduced_); }
    // V^* G V without the ridge.
    const Eigen::MatrixXcd& eigen_gram() const { return psi_; }

    // Solves (V^* G V + eps I) c = V^* rhs_reduced where rhs_reduced = W^T k for a kernel column k.
    Eigen::MatrixXcd project(const Eigen::MatrixXd& whitened_sections) const;

private:
    std::shared_ptr<const SpectralBasis> basis_;
    Eigen::MatrixXd points_;
    RadialKernel<double> kernel_;
    Eigen::VectorXcd candidates_;
    Eigen::VectorXd angles_;
    Eigen::VectorXd residuals_;
    Eigen::MatrixXcd reduced_;
    Eigen::MatrixXcd psi_;
    Eigen::LLT<Eigen::MatrixXcd> psi_factor_;
    double psi_ridge_;
};

SpectralModel fit_spectral_model(const SnapshotSet& snapshots, const RadialKernel<double>& kernel, int p,
                                 std::optional<double> threshold, const SpectralOptions& options = {});

// Least-squares coordinates of k(x, .) on the retained eigenfunctions.
Eigen::VectorXcd decompose_kernel_section(const Eigen::VectorXd& x, const SpectralModel& model);
// Coordinates for every snapshot point at once (p x n).
Eigen::MatrixXcd decompose_snapshot_sections(const SpectralModel& model);
// || k(x, .) - sum_j c_j psi_j || in the native norm.
double section_reconstruction_error(const Eigen::VectorXd& x, const SpectralModel& model, const Eigen::VectorXcd& coords);

class SpectralInjector {
public:
    SpectralInjector(const SpectralModel& model, const InterpolantModel<double>& output, const DeepKKLParams<double>& params);

    // Injection value from the eigen-coordinates of one kernel section.
    Eigen::VectorXd operator()(const Eigen::VectorXcd& coords) const;

    const Eigen::MatrixXcd& shift_sums() const { return shift_sums_; }      // m x p
    const Eigen::VectorXcd& output_coords() const { return output_coords_; }  // <h, psi_j>

private:
    Eigen::MatrixXcd shift_sums_;
    Eigen::VectorXcd output_coords_;
};

Eigen::VectorXd spectral_injection(const Eigen::VectorXd& x, const SpectralModel& model,
                                   const InterpolantModel<double>& output, const DeepKKLParams<double>& params);
// Injection at every snapshot point (n x m).
Eigen::MatrixXd spectral_injection_snapshots(const SpectralModel& model, const InterpolantModel<double>& output,
                                             const DeepKKLParams<double>& params);

}  // namespace kkl

#endif
