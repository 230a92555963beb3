#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace oqw {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using IntVector = Eigen::VectorXi;

// Numerical tolerances used across the library.
namespace tol {
inline constexpr double completeness = 1e-10;  // ||sum K'K - I||_max
inline constexpr double hermiticity = 1e-10;
inline constexpr double positivity = 1e-9;     // min eigenvalue >= -positivity
inline constexpr double trace = 1e-9;          // |tr - 1|
inline constexpr double rank_cutoff = 1e-9;    // relative singular value cutoff
}  // namespace tol

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Column stacking: stack(A)[i + D*j] = A(i, j).
inline Vector stack(const Matrix& a) {
    return Eigen::Map<const Vector>(a.data(), a.size());
}

inline Matrix unstack(const Vector& v, Eigen::Index dim) {
    if (v.size() != dim * dim) throw std::invalid_argument("unstack: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

// Positive, unit-trace operator on the internal space.
class DensityOperator {
public:
    explicit DensityOperator(Matrix m, bool validate = true) : mat_(std::move(m)) {
        if (mat_.rows() != mat_.cols() || mat_.rows() < 1)
            throw std::invalid_argument("DensityOperator: matrix must be square");
        if (validate) check();
        // Re-hermitize and renormalize; keeps long trajectories from drifting.
        mat_ = 0.5 * (mat_ + mat_.adjoint().eval());
        mat_ /= mat_.trace().real();
    }

    static DensityOperator maximally_mixed(Eigen::Index dim) {
        return DensityOperator(Matrix::Identity(dim, dim) / double(dim), false);
    }

    static DensityOperator pure(const Vector& psi) {
        return DensityOperator(psi * psi.adjoint() / psi.squaredNorm(), false);
    }

    const Matrix& mat() const { return mat_; }
    Eigen::Index dim() const { return mat_.rows(); }

private:
    void check() const {
        if (max_abs(mat_ - mat_.adjoint().eval()) > tol::hermiticity)
            throw std::invalid_argument("DensityOperator: not Hermitian");
        if (std::abs(mat_.trace().real() - 1.0) > tol::trace)
            throw std::invalid_argument("DensityOperator: trace not 1");
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (mat_ + mat_.adjoint().eval()),
                                                 Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol::positivity)
            throw std::invalid_argument("DensityOperator: negative eigenvalue");
    }

    Matrix mat_;
};

}  // namespace oqw
