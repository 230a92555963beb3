#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oqw/types.hpp"
#include "oqw/vertex_class.hpp"

namespace oqw {

struct InvariantReport {
    DensityOperator rho_inf;
    double fixed_point_residual = 0.0;      // ||Phi(rho) - rho||_max
    int eigenvalue_one_multiplicity = 0;    // singular values of S - I below cutoff
};

struct DriftVector {
    RealVector m;
    std::string warning;  // non-empty if the supplied state was not invariant
};

struct PoissonOperator {
    Matrix L;
    RealVector l;
    double residual = 0.0;  // ||(I - Phi')(L) - rhs||_max
};

struct SigmaEstimate {
    double value = 0.0;
    std::string method;  // "analytic" or "empirical"
    bool experimental = false;
};

struct KernelImageSplit {
    int kernel_dim = 0;
    int image_dim = 0;
    bool direct_sum_ok = false;
    double max_overlap = 0.0;  // largest |<kernel basis, image basis>|
};

// Fixed point of the class channel via the null space of S - I.
inline InvariantReport invariant_state(const VertexClass& cls, double tolerance = tol::completeness) {
    const Eigen::Index d = cls.dim();
    const Matrix s = superop_matrix(cls);
    const Matrix a = s - Matrix::Identity(d * d, d * d);
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = tol::rank_cutoff * std::max(sv(0), 1.0);
    int multiplicity = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) <= cutoff) ++multiplicity;
    if (multiplicity == 0)
        throw std::runtime_error("invariant_state: no null vector; channel is not trace preserving");

    Matrix rho = unstack(svd.matrixV().col(sv.size() - 1), d);
    rho = 0.5 * (rho + rho.adjoint().eval());
    const double tr = rho.trace().real();
    if (std::abs(tr) < 1e-14)
        throw std::runtime_error("invariant_state: null vector has vanishing trace");
    rho /= tr;

    InvariantReport rep{DensityOperator(rho, false), 0.0, multiplicity};
    const DensityOperator& ri = rep.rho_inf;
    rep.fixed_point_residual = max_abs(apply_channel(cls, ri).mat() - ri.mat());
    if (rep.fixed_point_residual > tolerance)
        throw std::runtime_error("invariant_state: fixed point residual above tolerance");
    return rep;
}

// Independent cross-check: repeated channel application from the maximally
// mixed state. Converges when the invariant state is unique and attracting.
inline DensityOperator invariant_state_power_iteration(const VertexClass& cls, int max_iters = 20000,
                                                       double eps = 1e-13) {
    DensityOperator rho = DensityOperator::maximally_mixed(cls.dim());
    for (int i = 0; i < max_iters; ++i) {
        DensityOperator next = apply_channel(cls, rho);
        if (max_abs(next.mat() - rho.mat()) < eps) return next;
        rho = next;
    }
    return rho;
}

inline RealVector displacement_as_real(const Displacement& dx) {
    RealVector v(dx.size());
    for (size_t i = 0; i < dx.size(); ++i) v(i) = dx[i];
    return v;
}

// m_C = sum_{j,k} Tr(K rho_inf K') * displacement_j
inline DriftVector mean_vector(const VertexClass& cls, const DensityOperator& rho_inf,
                               double tolerance = 1e-8) {
    DriftVector out;
    out.m = RealVector::Zero(cls.lattice_dim());
    for (const auto& rule : cls.rules) {
        double p = 0.0;
        for (const auto& k : rule.kraus) p += (k * rho_inf.mat() * k.adjoint()).trace().real();
        out.m += p * displacement_as_real(rule.displacement);
    }
    const double residual = max_abs(apply_channel(cls, rho_inf).mat() - rho_inf.mat());
    if (residual > tolerance)
        out.warning = "supplied state is not invariant (residual " + std::to_string(residual) + ")";
    return out;
}

// m = sum_C p_C m_C
inline DriftVector mixed_mean(const std::vector<std::pair<DriftVector, double>>& weighted) {
    if (weighted.empty()) throw std::invalid_argument("mixed_mean: empty input");
    double total = 0.0;
    for (const auto& [mv, p] : weighted) {
        if (p < 0.0) throw std::invalid_argument("mixed_mean: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mixed_mean: probabilities must sum to 1");
    DriftVector out;
    out.m = RealVector::Zero(weighted.front().first.m.size());
    for (const auto& [mv, p] : weighted) out.m += p * mv.m;
    return out;
}

namespace detail {
// sum_{j,k} K'K <j|l> - <m_C|l> I
inline Matrix poisson_rhs(const VertexClass& cls, const DensityOperator& rho_inf,
                          const RealVector& l) {
    const Eigen::Index d = cls.dim();
    Matrix rhs = Matrix::Zero(d, d);
    for (const auto& rule : cls.rules) {
        const double jl = displacement_as_real(rule.displacement).dot(l);
        for (const auto& k : rule.kraus) rhs += (k.adjoint() * k) * jl;
    }
    const double ml = mean_vector(cls, rho_inf).m.dot(l);
    rhs -= ml * Matrix::Identity(d, d);
    return rhs;
}
}  // namespace detail

// Solves (I - Phi')(L) = sum K'K <j|l> - <m_C|l> I for the minimal
// Frobenius norm L (pseudo-inverse of the column-stacked system).
inline PoissonOperator solve_poisson(const VertexClass& cls, const DensityOperator& rho_inf,
                                     const RealVector& l, double tolerance = 1e-9) {
    const Eigen::Index d = cls.dim();
    const Matrix a = Matrix::Identity(d * d, d * d) - superop_matrix(cls, /*conjugate=*/true);
    const Matrix rhs = detail::poisson_rhs(cls, rho_inf, l);

    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = tol::rank_cutoff * std::max(sv(0), 1.0);
    Vector y = svd.matrixU().adjoint() * stack(rhs);
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        y(i) = sv(i) > cutoff ? y(i) / sv(i) : Complex(0.0, 0.0);
    Matrix L = unstack((svd.matrixV() * y).eval(), d);

    PoissonOperator out{std::move(L), l, 0.0};
    out.residual = max_abs(unstack((a * stack(out.L)).eval(), d) - rhs);
    if (out.residual > tolerance)
        throw std::runtime_error(
            "solve_poisson: right-hand side outside Im(I - Phi'); invariant state may not be unique");
    return out;
}

// |(f_C - P_C f_C)(rho, x) - (<x|l> - <m_C|l>)| with
// f_C(rho, x) = Tr(rho L) + <x|l>.
inline double poisson_identity_check(const VertexClass& cls, const PoissonOperator& op,
                                     const DensityOperator& rho, const RealVector& x,
                                     const RealVector& l) {
    const double f = (rho.mat() * op.L).trace().real() + x.dot(l);
    double pf = 0.0;
    for (const auto& rule : cls.rules) {
        const double jl = displacement_as_real(rule.displacement).dot(l);
        for (const auto& k : rule.kraus) {
            const Matrix krk = k * rho.mat() * k.adjoint();
            const double p = krk.trace().real();
            if (p <= 1e-15) continue;  // zero-probability branch
            pf += p * ((krk / p * op.L).trace().real() + jl);
        }
    }
    const double ml = mean_vector(cls, invariant_state(cls).rho_inf).m.dot(l);
    return std::abs((f - pf) - (x.dot(l) - ml));
}

// Numerical check of L(X) = Ker(Phi) (+) Im(Phi') for the superoperator
// with matrix s (column-stacking basis is a trace-inner-product isometry,
// so Im(Phi') is the column space of s^H, i.e. the row space of s).
inline KernelImageSplit kernel_image_split(const Matrix& s) {
    Eigen::JacobiSVD<Matrix> svd(s, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = tol::rank_cutoff * std::max(sv(0), 1.0);
    KernelImageSplit out;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        (sv(i) > cutoff ? out.image_dim : out.kernel_dim)++;
    // Right singular vectors split into row-space (image of the adjoint) and
    // null-space bases; measure their mutual overlap explicitly.
    double overlap = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) <= cutoff) continue;
        for (Eigen::Index j = 0; j < sv.size(); ++j) {
            if (sv(j) > cutoff) continue;
            overlap = std::max(overlap,
                               std::abs(svd.matrixV().col(i).dot(svd.matrixV().col(j))));
        }
    }
    out.max_overlap = overlap;
    out.direct_sum_ok = (out.kernel_dim + out.image_dim == int(sv.size())) && overlap < 1e-8;
    return out;
}

// Asymptotic variance along l for a single class:
// sigma^2 = Tr(rho_inf sum K'K <j|l>^2) - <m|l>^2
//           + 2 sum Tr(K rho_inf K' L)(<j|l> - <m|l>)
inline SigmaEstimate analytic_sigma(const VertexClass& cls, const DensityOperator& rho_inf,
                                    const PoissonOperator& op, const RealVector& l) {
    const double ml = mean_vector(cls, rho_inf).m.dot(l);
    double quad = 0.0, cross = 0.0;
    for (const auto& rule : cls.rules) {
        const double jl = displacement_as_real(rule.displacement).dot(l);
        for (const auto& k : rule.kraus) {
            quad += ((k.adjoint() * k) * rho_inf.mat()).trace().real() * jl * jl;
            cross += ((k * rho_inf.mat() * k.adjoint()) * op.L).trace().real() * (jl - ml);
        }
    }
    SigmaEstimate out;
    out.value = std::max(0.0, quad - ml * ml + 2.0 * cross);
    out.method = "analytic";
    return out;
}

enum class MixedSigmaReading { additive, multiplicative };

struct WeightedClassAnalysis {
    VertexClass cls;
    double probability = 0.0;
    DensityOperator rho_inf;
    PoissonOperator poisson;
};

// Experimental: mixed-class variance. The heterogeneous weighting admits two
// readings of the trace-term grouping; both are exposed and neither is part
// of the acceptance gates. Empirical covariance is authoritative here.
inline SigmaEstimate analytic_sigma_mixed(const std::vector<WeightedClassAnalysis>& classes,
                                          const RealVector& l, const DensityOperator& rho_ref,
                                          MixedSigmaReading reading) {
    std::vector<double> ml(classes.size());
    for (size_t c = 0; c < classes.size(); ++c)
        ml[c] = mean_vector(classes[c].cls, classes[c].rho_inf).m.dot(l);

    double value = 0.0;
    // Xi = sum_c p_c Xi^c, each Xi^c assembled from the class-pair sums.
    for (size_t site = 0; site < classes.size(); ++site) {
        const auto& sc = classes[site];
        double xi_site = 0.0;
        for (size_t a = 0; a < classes.size(); ++a)
            for (size_t b = 0; b < classes.size(); ++b) {
                const double w = classes[a].probability * classes[b].probability;
                double term = 0.0;
                for (const auto& rule : sc.cls.rules) {
                    const double jl = displacement_as_real(rule.displacement).dot(l);
                    for (const auto& k : rule.kraus) {
                        const Matrix krk = k * rho_ref.mat() * k.adjoint();
                        const double p = krk.trace().real();
                        const double ta = (krk * classes[a].poisson.L).trace().real();
                        const double tb = (krk * classes[b].poisson.L).trace().real();
                        if (reading == MixedSigmaReading::additive) {
                            term += p * (jl - ml[a]) * (jl - ml[b]) + tb * (jl - ml[a]) +
                                    ta * (jl - ml[b]);
                        } else {
                            term += p * (jl - ml[a]) * (jl - ml[b]) +
                                    tb * (jl - ml[a]) * ta * (jl - ml[b]);
                        }
                    }
                }
                xi_site += w * term;
            }
        value += sc.probability * xi_site;
    }
    SigmaEstimate out;
    out.value = std::max(0.0, value);
    out.method = "analytic";
    out.experimental = true;
    return out;
}

}  // namespace oqw
