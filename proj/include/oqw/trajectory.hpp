#pragma once

#include <string>
#include <thread>
#include <vector>

#include "oqw/analysis.hpp"
#include "oqw/evolution.hpp"
#include "oqw/lattice.hpp"
#include "oqw/rng.hpp"
#include "oqw/stats.hpp"
#include "oqw/types.hpp"
#include "oqw/vertex_class.hpp"

namespace oqw {

struct WalkerState {
    DensityOperator rho;
    Site x;
    int step = 0;
};

struct SampledBranch {
    size_t rule_index = 0;
    size_t kraus_index = 0;
};

// One measured step of the trajectory Markov chain: branch (j, k) fires with
// probability Tr(K rho K'), the internal state collapses to K rho K'/p and
// the position advances by the rule displacement.
inline SampledBranch sample_step(WalkerState& state, const VertexClass& cls, RngStream& rng) {
    thread_local std::vector<double> probs;
    probs.clear();
    double total = 0.0;
    for (const auto& rule : cls.rules)
        for (const auto& k : rule.kraus) {
            // Tr(K rho K') = sum_{ij} (K rho)_{ij} conj(K_{ij})
            const double p = (k * state.rho.mat()).cwiseProduct(k.conjugate()).sum().real();
            probs.push_back(p);
            total += p;
        }
    if (std::abs(total - 1.0) > tol::trace)
        throw std::runtime_error("sample_step: branch probabilities sum to " + std::to_string(total));
    if (total <= 0.0) throw std::runtime_error("sample_step: all branch probabilities zero");

    // cumulative-sum inversion in fixed rule order; last bucket absorbs residue
    const double u = rng.next_double() * total;
    double cum = 0.0;
    size_t flat = 0;
    const size_t last = probs.size() - 1;
    for (; flat < last; ++flat) {
        cum += probs[flat];
        if (u < cum) break;
    }

    SampledBranch branch;
    size_t scan = 0;
    for (size_t r = 0; r < cls.rules.size(); ++r) {
        if (flat < scan + cls.rules[r].kraus.size()) {
            branch.rule_index = r;
            branch.kraus_index = flat - scan;
            break;
        }
        scan += cls.rules[r].kraus.size();
    }

    const auto& rule = cls.rules[branch.rule_index];
    const Matrix& k = rule.kraus[branch.kraus_index];
    state.rho = DensityOperator(k * state.rho.mat() * k.adjoint(), false);
    for (size_t i = 0; i < state.x.size(); ++i) state.x[i] += rule.displacement[i];
    ++state.step;
    return branch;
}

inline WalkerState run_trajectory(const ClassField& field, const ClassTable& classes,
                                  const DensityOperator& rho0, const Site& x0, int n,
                                  RngStream rng) {
    WalkerState state{rho0, x0, 0};
    for (int i = 0; i < n; ++i) {
        const VertexClass& cls = classes.at(field.class_at(state.x));
        sample_step(state, cls, rng);
    }
    return state;
}

struct TrajectoryStatistics {
    int trajectories = 0;  // N
    int steps = 0;         // n
    RealVector mean;       // sample mean of X_n
    RealMatrix covariance; // sample covariance of X_n
    std::vector<MomentSummary> component_moments;  // of (X_n - n m)/sqrt(n); affine-invariant parts
    std::vector<double> ks;                        // per component vs fitted Gaussian
    std::vector<Site> endpoints;                   // one per trajectory, index order
};

// N independent trajectories on counter-based substreams. Endpoints land in
// an index-addressed buffer, so the result is identical for any worker count.
inline TrajectoryStatistics monte_carlo(const ClassField& field, const ClassTable& classes,
                                        const DensityOperator& rho0, const Site& x0, int n, int N,
                                        uint64_t master_seed, int threads = 1) {
    if (N < 2) throw std::invalid_argument("monte_carlo: need at least 2 trajectories");
    const int d = int(x0.size());
    TrajectoryStatistics stats;
    stats.trajectories = N;
    stats.steps = n;
    stats.endpoints.resize(size_t(N));

    threads = std::max(1, threads);
    auto worker = [&](int first, int past) {
        for (int t = first; t < past; ++t)
            stats.endpoints[size_t(t)] =
                run_trajectory(field, classes, rho0, x0, n, RngStream(master_seed, uint64_t(t))).x;
    };
    if (threads == 1) {
        worker(0, N);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (N + threads - 1) / threads;
        for (int w = 0; w < threads; ++w)
            pool.emplace_back(worker, std::min(w * chunk, N), std::min((w + 1) * chunk, N));
        for (auto& th : pool) th.join();
    }

    stats.mean = RealVector::Zero(d);
    for (const Site& x : stats.endpoints)
        for (int i = 0; i < d; ++i) stats.mean(i) += x[i];
    stats.mean /= double(N);

    stats.covariance = RealMatrix::Zero(d, d);
    for (const Site& x : stats.endpoints)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                stats.covariance(i, j) += (x[i] - stats.mean(i)) * (x[j] - stats.mean(j));
    stats.covariance /= double(N - 1);

    for (int i = 0; i < d; ++i) {
        std::vector<double> comp(size_t(N), 0.0);
        for (int t = 0; t < N; ++t) comp[size_t(t)] = double(stats.endpoints[size_t(t)][i]);
        stats.component_moments.push_back(moment_summary(comp));
        stats.ks.push_back(ks_distance_fitted_normal(std::move(comp)));
    }
    return stats;
}

struct CltThresholds {
    double drift_z = 4.0;        // standard errors on the drift
    double skewness = 0.1;
    double excess_kurtosis = 0.2;
    double ks = 0.02;            // sized for N = 1e4
    double degenerate_variance = 1e-12;  // on the normalized variable
};

struct CltComponentReport {
    double drift_estimate = 0.0;   // mean(X_n)/n
    double drift_expected = 0.0;   // m
    double drift_error = 0.0;
    double drift_allowance = 0.0;  // z * sigma_hat / sqrt(N n)
    double normalized_variance = 0.0;  // var(X_n)/n
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double ks = 0.0;
    bool degenerate = false;  // zero-variance limit; normality vacuous
    bool drift_pass = false;
    bool normality_pass = false;
};

struct CltReport {
    std::vector<CltComponentReport> components;
    bool pass = false;
};

// Pass/fail against the Gaussian limit: drift within z standard errors, and
// moment/KS gates on the normalized variable (skipped when degenerate).
inline CltReport clt_report(const TrajectoryStatistics& stats, const RealVector& m,
                            const CltThresholds& thr = {}) {
    CltReport rep;
    rep.pass = true;
    const double n = double(stats.steps);
    const double N = double(stats.trajectories);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        CltComponentReport c;
        c.drift_estimate = stats.mean(i) / n;
        c.drift_expected = m(i);
        c.drift_error = std::abs(c.drift_estimate - c.drift_expected);
        c.normalized_variance = stats.covariance(i, i) / n;
        const double sigma_hat = std::sqrt(std::max(c.normalized_variance, 0.0));
        c.drift_allowance = thr.drift_z * sigma_hat / std::sqrt(N * n);
        c.degenerate = c.normalized_variance < thr.degenerate_variance;
        c.skewness = stats.component_moments[size_t(i)].skewness;
        c.excess_kurtosis = stats.component_moments[size_t(i)].excess_kurtosis;
        c.ks = stats.ks[size_t(i)];
        c.drift_pass = c.degenerate ? c.drift_error == 0.0 : c.drift_error <= c.drift_allowance;
        c.normality_pass = c.degenerate ||
                           (std::abs(c.skewness) <= thr.skewness &&
                            std::abs(c.excess_kurtosis) <= thr.excess_kurtosis && c.ks <= thr.ks);
        rep.pass = rep.pass && c.drift_pass && c.normality_pass;
        rep.components.push_back(c);
    }
    return rep;
}

}  // namespace oqw
