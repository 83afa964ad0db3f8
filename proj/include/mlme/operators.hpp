// Copyright 2026 The mlme Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MLME_OPERATORS_HPP
#define MLME_OPERATORS_HPP

/// Hermitian / positive-operator linear algebra: spectral decompositions,
/// regularized matrix logarithm, entropy, trace distance, fidelity, and
/// random-state generation. Everything here is a pure value type; all
/// randomness flows through an explicit generator passed by the caller.

#include <cmath>
#include <complex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace mlme {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using Rng = std::mt19937_64;

namespace detail {

inline void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

inline void require_square_finite(const ComplexMatrix& m, const char* what) {
    require(m.rows() > 0 && m.rows() == m.cols(),
            std::string(what) + ": matrix must be square and nonempty");
    require(m.allFinite(), std::string(what) + ": matrix has non-finite entries");
}

/// Re tr(a b) without forming the product: sum_ij a_ij b_ji.
inline double trace_product_real(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a.cwiseProduct(b.transpose()).sum().real();
}

}  // namespace detail

/// A Hermitian operator on a finite-dimensional space. Construction
/// symmetrizes the input, (m + m^dagger)/2, so the stored matrix equals its
/// own conjugate transpose exactly.
class HermitianOperator {
  public:
    explicit HermitianOperator(const ComplexMatrix& m) {
        detail::require_square_finite(m, "HermitianOperator");
        mat_ = 0.5 * (m + m.adjoint().eval());
    }

    Eigen::Index dim() const { return mat_.rows(); }
    const ComplexMatrix& matrix() const { return mat_; }

  private:
    ComplexMatrix mat_;
};

/// Result of diagonalizing a Hermitian operator. Eigenvalues are sorted in
/// descending order; eigenvector columns are orthonormal and match the
/// eigenvalue ordering, so reconstruct() reproduces the input.
struct SpectralDecomposition {
    RealVector eigenvalues;
    ComplexMatrix eigenvectors;

    ComplexMatrix reconstruct() const {
        return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.adjoint();
    }

    /// U f(diag) U^dagger for a scalar map applied to each eigenvalue.
    template <typename Fn>
    ComplexMatrix apply(Fn&& fn) const {
        RealVector mapped = eigenvalues;
        for (Eigen::Index i = 0; i < mapped.size(); ++i) mapped[i] = fn(mapped[i]);
        return eigenvectors * mapped.asDiagonal() * eigenvectors.adjoint();
    }
};

namespace detail {

inline SpectralDecomposition spectral_decompose_impl(const ComplexMatrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian);
    if (solver.info() != Eigen::Success) {
        std::ostringstream oss;
        oss << "eigensolver failed to converge (dim " << hermitian.rows()
            << ", Frobenius norm " << hermitian.norm() << ")";
        throw std::runtime_error(oss.str());
    }
    const Eigen::Index d = hermitian.rows();
    SpectralDecomposition out;
    out.eigenvalues = solver.eigenvalues().reverse();
    out.eigenvectors.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        out.eigenvectors.col(i) = solver.eigenvectors().col(d - 1 - i);
    }
    return out;
}

}  // namespace detail

/// A unit-trace positive-semidefinite operator: the estimand and the
/// estimator of every reconstruction in this library (quantum states and
/// classical-beam coherence operators alike).
class DensityMatrix {
  public:
    static constexpr double kTraceTolerance = 1e-10;
    static constexpr double kEigenvalueTolerance = 1e-10;

    /// Validating constructor: requires Hermitian-up-to-symmetrization input
    /// with trace 1 and spectrum bounded below by -1e-10.
    explicit DensityMatrix(const ComplexMatrix& m) : mat_(0.5 * (m + m.adjoint().eval())) {
        detail::require_square_finite(m, "DensityMatrix");
        const double trace = mat_.trace().real();
        detail::require(std::abs(trace - 1.0) <= kTraceTolerance,
                        "DensityMatrix: trace must be 1 within 1e-10, got " + std::to_string(trace));
        const auto spectral = detail::spectral_decompose_impl(mat_);
        const double min_eig = spectral.eigenvalues[spectral.eigenvalues.size() - 1];
        detail::require(min_eig >= -kEigenvalueTolerance,
                        "DensityMatrix: smallest eigenvalue " + std::to_string(min_eig) +
                            " below -1e-10");
    }

    /// Symmetrize and normalize the trace of a matrix the caller guarantees
    /// to be positive semidefinite (e.g. G G^dagger or a congruence of a
    /// state). Skips the spectral positivity check.
    static DensityMatrix normalized(const ComplexMatrix& m) {
        detail::require_square_finite(m, "DensityMatrix::normalized");
        ComplexMatrix h = 0.5 * (m + m.adjoint().eval());
        const double trace = h.trace().real();
        detail::require(trace > 0.0, "DensityMatrix::normalized: trace must be positive");
        return DensityMatrix(unchecked_tag{}, h / trace);
    }

    Eigen::Index dim() const { return mat_.rows(); }
    const ComplexMatrix& matrix() const { return mat_; }

    HermitianOperator as_hermitian() const { return HermitianOperator(mat_); }

  private:
    struct unchecked_tag {};
    DensityMatrix(unchecked_tag, ComplexMatrix m) : mat_(std::move(m)) {}

    ComplexMatrix mat_;
};

inline SpectralDecomposition spectral_decompose(const HermitianOperator& h) {
    return detail::spectral_decompose_impl(h.matrix());
}

inline SpectralDecomposition spectral_decompose(const DensityMatrix& rho) {
    return detail::spectral_decompose_impl(rho.matrix());
}

/// U diag(log max(eig, floor)) U^dagger. Equals the exact matrix logarithm
/// when every eigenvalue is at least `floor`; rank-deficient states are
/// clipped at the floor so downstream gradient operators stay finite.
inline HermitianOperator matrix_log_regularized(const DensityMatrix& rho, double floor) {
    detail::require(floor > 0.0 && floor <= 1.0 / static_cast<double>(rho.dim()),
                    "matrix_log_regularized: floor must lie in (0, 1/dim]");
    const auto spectral = spectral_decompose(rho);
    return HermitianOperator(
        spectral.apply([floor](double x) { return std::log(std::max(x, floor)); }));
}

/// S(rho) = -tr(rho log rho) in nats, with 0 log 0 taken as 0.
inline double von_neumann_entropy(const DensityMatrix& rho) {
    const auto spectral = spectral_decompose(rho);
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < spectral.eigenvalues.size(); ++i) {
        const double lam = spectral.eigenvalues[i];
        if (lam > 0.0) entropy -= lam * std::log(lam);
    }
    return std::max(entropy, 0.0);
}

/// Trace distance (1/2) tr |a - b|; the figure of merit for estimator error.
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    detail::require(a.dim() == b.dim(), "trace_distance: dimension mismatch");
    const auto spectral = detail::spectral_decompose_impl(a.matrix() - b.matrix());
    return 0.5 * spectral.eigenvalues.array().abs().sum();
}

namespace detail {

inline ComplexMatrix zero_pad(const ComplexMatrix& m, Eigen::Index dim) {
    if (m.rows() == dim) return m;
    ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
    out.topLeftCorner(m.rows(), m.cols()) = m;
    return out;
}

}  // namespace detail

/// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2. Reduces to <psi|a|psi>
/// for a pure b. Operators of different dimension are compared by
/// zero-padding the smaller one into the larger space.
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
    const Eigen::Index dim = std::max(a.dim(), b.dim());
    const ComplexMatrix am = detail::zero_pad(a.matrix(), dim);
    const ComplexMatrix bm = detail::zero_pad(b.matrix(), dim);
    const auto sa = detail::spectral_decompose_impl(am);
    const ComplexMatrix root_a =
        sa.eigenvectors *
        sa.eigenvalues.array().max(0.0).sqrt().matrix().asDiagonal() *
        sa.eigenvectors.adjoint();
    const auto inner = detail::spectral_decompose_impl(root_a * bm * root_a);
    const double sum_root = inner.eigenvalues.array().max(0.0).sqrt().sum();
    return std::clamp(sum_root * sum_root, 0.0, 1.0);
}

/// Draw a state from the Hilbert-Schmidt ensemble: rho = G G^dagger
/// normalized, with G a dim x dim matrix of independent standard complex
/// normals.
inline DensityMatrix random_hs_state(Eigen::Index dim, Rng& rng) {
    detail::require(dim >= 1, "random_hs_state: dim must be >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    ComplexMatrix g(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            g(r, c) = Complex(normal(rng), normal(rng));
        }
    }
    return DensityMatrix::normalized(g * g.adjoint());
}

/// Haar-random unitary via the phase-fixed QR of a complex Ginibre matrix.
inline ComplexMatrix random_unitary(Eigen::Index dim, Rng& rng) {
    detail::require(dim >= 1, "random_unitary: dim must be >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    ComplexMatrix g(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            g(r, c) = Complex(normal(rng), normal(rng));
        }
    }
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    ComplexMatrix q = qr.householderQ();
    ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < dim; ++i) {
        const Complex diag = r(i, i);
        const double mag = std::abs(diag);
        q.col(i) *= (mag > 0.0) ? diag / mag : Complex(1.0, 0.0);
    }
    return q;
}

/// Purity tr(rho^2).
inline double purity(const DensityMatrix& rho) {
    return detail::trace_product_real(rho.matrix(), rho.matrix());
}

}  // namespace mlme

#endif  // MLME_OPERATORS_HPP
