#pragma once

#include <random>
#include <vector>

#include "oqw/analysis.hpp"
#include "oqw/types.hpp"
#include "oqw/vertex_class.hpp"

namespace oqw::test {

inline double max_abs_diff(const RealVector& a, const RealVector& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

// Element-wise channel application, independent of the library's Eigen
// product path. Used as the brute-force oracle.
inline Matrix naive_channel(const VertexClass& cls, const Matrix& rho) {
    const Eigen::Index d = rho.rows();
    Matrix out = Matrix::Zero(d, d);
    for (const auto& rule : cls.rules)
        for (const auto& k : rule.kraus)
            for (Eigen::Index i = 0; i < d; ++i)
                for (Eigen::Index j = 0; j < d; ++j) {
                    Complex acc(0, 0);
                    for (Eigen::Index p = 0; p < d; ++p)
                        for (Eigen::Index q = 0; q < d; ++q)
                            acc += k(i, p) * rho(p, q) * std::conj(k(j, q));
                    out(i, j) += acc;
                }
    return out;
}

inline Matrix naive_conjugate(const VertexClass& cls, const Matrix& b) {
    const Eigen::Index d = b.rows();
    Matrix out = Matrix::Zero(d, d);
    for (const auto& rule : cls.rules)
        for (const auto& k : rule.kraus)
            for (Eigen::Index i = 0; i < d; ++i)
                for (Eigen::Index j = 0; j < d; ++j) {
                    Complex acc(0, 0);
                    for (Eigen::Index p = 0; p < d; ++p)
                        for (Eigen::Index q = 0; q < d; ++q)
                            acc += std::conj(k(p, i)) * b(p, q) * k(q, j);
                    out(i, j) += acc;
                }
    return out;
}

inline Matrix random_matrix(std::mt19937_64& gen, Eigen::Index d) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = Complex(dist(gen), dist(gen));
    return m;
}

inline Matrix random_hermitian(std::mt19937_64& gen, Eigen::Index d) {
    Matrix m = random_matrix(gen, d);
    return 0.5 * (m + m.adjoint().eval());
}

inline DensityOperator random_density(std::mt19937_64& gen, Eigen::Index d) {
    Matrix g = random_matrix(gen, d);
    Matrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return DensityOperator(rho, false);
}

// Random valid d=1 vertex class: branches_per_direction Kraus operators on
// each of {+1, -1}, normalized so the completeness sum is the identity.
inline VertexClass random_class(std::mt19937_64& gen, Eigen::Index dim,
                                int branches_per_direction = 1) {
    std::vector<Matrix> raw;
    Matrix sum = Matrix::Zero(dim, dim);
    for (int i = 0; i < 2 * branches_per_direction; ++i) {
        raw.push_back(random_matrix(gen, dim));
        sum += raw.back().adjoint() * raw.back();
    }
    // K_i <- G_i sum^{-1/2}
    Eigen::SelfAdjointEigenSolver<Matrix> es(sum);
    Matrix inv_sqrt = es.eigenvectors() *
                      es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                      es.eigenvectors().adjoint();
    VertexClass cls;
    cls.label = "random";
    TransitionRule plus{{+1}, {}}, minus{{-1}, {}};
    for (int i = 0; i < branches_per_direction; ++i) {
        plus.kraus.push_back(raw[size_t(i)] * inv_sqrt);
        minus.kraus.push_back(raw[size_t(branches_per_direction + i)] * inv_sqrt);
    }
    cls.rules.push_back(std::move(plus));
    cls.rules.push_back(std::move(minus));
    return cls;
}

}  // namespace oqw::test
