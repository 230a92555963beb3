#pragma once

#include <string>
#include <vector>

#include "oqw/types.hpp"

namespace oqw {

// Lattice displacement in Z^d.
using Displacement = std::vector<int>;

// Direction index j in {1, ..., 2d}: j <= d maps to +e_j, j > d to -e_{j-d}.
inline Displacement direction_vector(int j, int d) {
    if (j < 1 || j > 2 * d) throw std::invalid_argument("direction index out of range");
    Displacement v(d, 0);
    if (j <= d) v[j - 1] = 1;
    else v[j - d - 1] = -1;
    return v;
}

struct TransitionRule {
    Displacement displacement;
    std::vector<Matrix> kraus;  // one or more operators per displacement
};

// A labeled set of transition rules sharing one internal dimension and
// satisfying the Kraus completeness sum.
struct VertexClass {
    std::string label;
    std::vector<TransitionRule> rules;

    Eigen::Index dim() const {
        if (rules.empty() || rules.front().kraus.empty())
            throw std::invalid_argument("VertexClass: no rules");
        return rules.front().kraus.front().rows();
    }

    int lattice_dim() const {
        if (rules.empty()) throw std::invalid_argument("VertexClass: no rules");
        return int(rules.front().displacement.size());
    }

    size_t branch_count() const {
        size_t n = 0;
        for (const auto& r : rules) n += r.kraus.size();
        return n;
    }
};

struct ValidationReport {
    bool pass = false;
    double completeness_deviation = 0.0;  // ||sum K'K - I||_max
    double hermiticity_deviation = 0.0;   // of sum K'K
    std::string message;
};

namespace detail {
inline void check_dimensions(const VertexClass& cls) {
    const Eigen::Index d = cls.dim();
    const size_t ld = cls.rules.front().displacement.size();
    for (const auto& rule : cls.rules) {
        if (rule.displacement.size() != ld)
            throw std::invalid_argument("VertexClass: inconsistent lattice dimension");
        if (rule.kraus.empty())
            throw std::invalid_argument("VertexClass: rule without Kraus operators");
        for (const auto& k : rule.kraus)
            if (k.rows() != d || k.cols() != d)
                throw std::invalid_argument("VertexClass: Kraus dimension mismatch");
    }
    for (size_t a = 0; a < cls.rules.size(); ++a)
        for (size_t b = a + 1; b < cls.rules.size(); ++b)
            if (cls.rules[a].displacement == cls.rules[b].displacement)
                throw std::invalid_argument("VertexClass: duplicate displacement");
}
}  // namespace detail

// Checks sum_{j,k} K'K = I.
inline ValidationReport validate_class(const VertexClass& cls, double tolerance = tol::completeness) {
    detail::check_dimensions(cls);
    const Eigen::Index d = cls.dim();
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& rule : cls.rules)
        for (const auto& k : rule.kraus) sum += k.adjoint() * k;
    ValidationReport rep;
    rep.completeness_deviation = max_abs(sum - Matrix::Identity(d, d));
    rep.hermiticity_deviation = max_abs(sum - sum.adjoint().eval());
    rep.pass = rep.completeness_deviation <= tolerance;
    rep.message = rep.pass ? "complete"
                           : "completeness sum deviates from identity by " +
                                 std::to_string(rep.completeness_deviation);
    return rep;
}

// rho -> sum_{j,k} K rho K'
inline DensityOperator apply_channel(const VertexClass& cls, const DensityOperator& rho) {
    if (rho.dim() != cls.dim()) throw std::invalid_argument("apply_channel: dimension mismatch");
    Matrix out = Matrix::Zero(rho.dim(), rho.dim());
    for (const auto& rule : cls.rules)
        for (const auto& k : rule.kraus) out += k * rho.mat() * k.adjoint();
    return DensityOperator(std::move(out), false);
}

// B -> sum_{j,k} K' B K  (adjoint under the trace inner product)
inline Matrix apply_conjugate(const VertexClass& cls, const Matrix& b) {
    if (b.rows() != cls.dim() || b.cols() != cls.dim())
        throw std::invalid_argument("apply_conjugate: dimension mismatch");
    Matrix out = Matrix::Zero(b.rows(), b.cols());
    for (const auto& rule : cls.rules)
        for (const auto& k : rule.kraus) out += k.adjoint() * b * k;
    return out;
}

// D^2 x D^2 matrix S with stack(Phi(rho)) = S stack(rho), built from
// stack(A rho B) = (B^T (x) A) stack(rho).
inline Matrix superop_matrix(const VertexClass& cls, bool conjugate = false) {
    detail::check_dimensions(cls);
    const Eigen::Index d = cls.dim();
    Matrix s = Matrix::Zero(d * d, d * d);
    for (const auto& rule : cls.rules)
        for (const auto& k : rule.kraus)
            for (Eigen::Index j = 0; j < d; ++j)
                for (Eigen::Index i = 0; i < d; ++i)
                    for (Eigen::Index q = 0; q < d; ++q)
                        for (Eigen::Index p = 0; p < d; ++p) {
                            if (conjugate) {
                                // (K' B K)_{ij} = sum_{pq} conj(K_{pi}) B_{pq} K_{qj}
                                s(i + d * j, p + d * q) += std::conj(k(p, i)) * k(q, j);
                            } else {
                                // (K rho K')_{ij} = sum_{pq} K_{ip} rho_{pq} conj(K_{jq})
                                s(i + d * j, p + d * q) += k(i, p) * std::conj(k(j, q));
                            }
                        }
    return s;
}

}  // namespace oqw
