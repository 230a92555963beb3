#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "oqw/analysis.hpp"
#include "oqw/evolution.hpp"
#include "oqw/lattice.hpp"
#include "oqw/vertex_class.hpp"

namespace oqw {

struct ReducedOperator {
    Matrix op;                  // ordered product of the path's step operators
    Displacement displacement;  // net displacement of the path
    std::vector<std::string> visited_classes;
};

struct ReducedWalk {
    std::vector<ReducedOperator> operators;
    int path_length = 0;        // l
    std::string base_class;     // A
    int pruned = 0;             // underflowed path products dropped

    // Distinct paths stay distinct Kraus branches; grouping only collects
    // them under their shared net displacement.
    VertexClass as_vertex_class() const {
        VertexClass cls;
        cls.label = base_class + "-reduced";
        std::map<Displacement, std::vector<Matrix>> grouped;
        for (const auto& r : operators) grouped[r.displacement].push_back(r.op);
        for (auto& [disp, kraus] : grouped) cls.rules.push_back({disp, std::move(kraus)});
        return cls;
    }
};

namespace detail {
inline std::vector<Site> sites_of_class(const ClassField& field, const std::string& label) {
    if (field.kind() != ClassField::Kind::periodic)
        throw std::invalid_argument("reduction requires a periodic field");
    std::vector<Site> out;
    const auto& period = field.period();
    const int d = int(period.size());
    Site x(d, 0);
    while (true) {
        if (field.class_at(x) == label) out.push_back(x);
        int i = d - 1;
        while (i >= 0 && ++x[i] >= period[i]) x[i--] = 0;
        if (i < 0) break;
    }
    return out;
}
}  // namespace detail

// True iff every l-step path from every A-site of one period ends on an
// A-site. Only path geometry matters, so Kraus indices are not enumerated.
inline bool is_reducible(const ClassField& field, const ClassTable& classes,
                         const std::string& a_label, int l) {
    if (l < 1) throw std::invalid_argument("is_reducible: l must be >= 1");
    const auto starts = detail::sites_of_class(field, a_label);
    if (starts.empty()) return false;
    const int d = field.dimension();
    bool ok = true;
    std::function<void(const Site&, int)> walk = [&](const Site& x, int depth) {
        if (!ok) return;
        if (depth == l) {
            if (field.class_at(x) != a_label) ok = false;
            return;
        }
        const VertexClass& cls = classes.at(field.class_at(x));
        for (const auto& rule : cls.rules) {
            Site y(d);
            for (int i = 0; i < d; ++i) y[i] = x[i] + rule.displacement[i];
            walk(y, depth + 1);
        }
    };
    for (const auto& s : starts) walk(s, 0);
    return ok;
}

// Composes every (direction, kraus)^l sequence from the canonical A-site
// (lexicographically smallest in the period) into reduced Kraus operators.
inline ReducedWalk compose_paths(const ClassField& field, const ClassTable& classes,
                                 const std::string& a_label, int l,
                                 double completeness_tol = tol::completeness) {
    if (!is_reducible(field, classes, a_label, l))
        throw std::invalid_argument("compose_paths: walk is not reducible at (" + a_label + ", " +
                                    std::to_string(l) + ")");
    const auto starts = detail::sites_of_class(field, a_label);
    const Site origin = *std::min_element(starts.begin(), starts.end());
    const int d = field.dimension();

    ReducedWalk walk;
    walk.path_length = l;
    walk.base_class = a_label;

    std::function<void(const Site&, int, const Matrix&, std::vector<std::string>&)> recurse =
        [&](const Site& x, int depth, const Matrix& product, std::vector<std::string>& visited) {
            if (depth == l) {
                if (max_abs(product) < 1e-300) {  // underflowed; contributes nothing
                    ++walk.pruned;
                    return;
                }
                Displacement net(d);
                for (int i = 0; i < d; ++i) net[i] = x[i] - origin[i];
                walk.operators.push_back({product, net, visited});
                return;
            }
            const VertexClass& cls = classes.at(field.class_at(x));
            visited.push_back(cls.label);
            for (const auto& rule : cls.rules) {
                Site y(d);
                for (int i = 0; i < d; ++i) y[i] = x[i] + rule.displacement[i];
                for (const auto& k : rule.kraus)
                    recurse(y, depth + 1, (k * product).eval(), visited);  // first step rightmost
            }
            visited.pop_back();
        };

    const Eigen::Index dim = classes.at(field.class_at(origin)).dim();
    std::vector<std::string> visited;
    recurse(origin, 0, Matrix::Identity(dim, dim), visited);

    // sort by net displacement so equal-displacement operators are listed together
    std::stable_sort(walk.operators.begin(), walk.operators.end(),
                     [](const ReducedOperator& a, const ReducedOperator& b) {
                         return a.displacement < b.displacement;
                     });

    Matrix sum = Matrix::Zero(dim, dim);
    for (const auto& r : walk.operators) sum += r.op.adjoint() * r.op;
    if (max_abs(sum - Matrix::Identity(dim, dim)) > completeness_tol)
        throw std::runtime_error("compose_paths: composed operators violate completeness");
    return walk;
}

struct ReducedDrift {
    RealVector per_reduced_step;   // m_P
    RealVector per_original_step;  // m_P / l
    int multiplicity = 1;
};

inline ReducedDrift reduced_drift(const ReducedWalk& walk) {
    const VertexClass cls = walk.as_vertex_class();
    const InvariantReport inv = invariant_state(cls);
    if (inv.eigenvalue_one_multiplicity != 1)
        throw std::runtime_error("reduced_drift: reduced channel has non-unique invariant state");
    ReducedDrift out;
    out.per_reduced_step = mean_vector(cls, inv.rho_inf).m;
    out.per_original_step = out.per_reduced_step / double(walk.path_length);
    out.multiplicity = inv.eigenvalue_one_multiplicity;
    return out;
}

struct EquivalenceReport {
    bool pass = false;
    double max_deviation = 0.0;
    std::map<Displacement, double> original;  // exact l-step distribution
    std::map<Displacement, double> reduced;   // one-step distribution of the reduced walk
};

// Exact l-step displacement distribution of the original walk from the
// canonical A-site versus the reduced walk's one-step distribution.
inline EquivalenceReport equivalence_check(const ClassField& field, const ClassTable& classes,
                                           const ReducedWalk& walk, const DensityOperator& rho0,
                                           double tolerance = 1e-12) {
    const auto starts = detail::sites_of_class(field, walk.base_class);
    const Site origin = *std::min_element(starts.begin(), starts.end());
    const int d = field.dimension();

    EquivalenceReport rep;
    LatticeState state = init_delta(rho0, origin, Window::centered(origin, walk.path_length + 1));
    for (int s = 0; s < walk.path_length; ++s) state = evolve_step(state, field, classes);
    const ProbabilityField marg = marginal(state);
    for (size_t s = 0; s < marg.p.size(); ++s) {
        if (marg.p[s] <= 0.0) continue;
        const Site x = marg.window.site_of(s);
        Displacement net(d);
        for (int i = 0; i < d; ++i) net[i] = x[i] - origin[i];
        rep.original[net] += marg.p[s];
    }

    for (const auto& r : walk.operators)
        rep.reduced[r.displacement] += (r.op * rho0.mat() * r.op.adjoint()).trace().real();

    for (const auto& [disp, p] : rep.original)
        rep.max_deviation = std::max(rep.max_deviation,
                                     std::abs(p - (rep.reduced.count(disp) ? rep.reduced.at(disp) : 0.0)));
    for (const auto& [disp, p] : rep.reduced)
        if (!rep.original.count(disp)) rep.max_deviation = std::max(rep.max_deviation, p);
    rep.pass = rep.max_deviation <= tolerance;
    return rep;
}

}  // namespace oqw
