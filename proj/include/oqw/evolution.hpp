#pragma once

#include <map>
#include <string>
#include <vector>

#include "oqw/lattice.hpp"
#include "oqw/types.hpp"
#include "oqw/vertex_class.hpp"

namespace oqw {

using ClassTable = std::map<std::string, VertexClass>;

struct Window {
    Site lo;
    Site hi;  // inclusive

    int dimension() const { return int(lo.size()); }

    bool contains(const Site& x) const {
        for (size_t i = 0; i < lo.size(); ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }

    size_t site_count() const {
        size_t n = 1;
        for (size_t i = 0; i < lo.size(); ++i) n *= size_t(hi[i] - lo[i] + 1);
        return n;
    }

    size_t index_of(const Site& x) const {
        size_t idx = 0;
        for (size_t i = 0; i < lo.size(); ++i)
            idx = idx * size_t(hi[i] - lo[i] + 1) + size_t(x[i] - lo[i]);
        return idx;
    }

    Site site_of(size_t idx) const {
        Site x(lo.size());
        for (size_t i = lo.size(); i-- > 0;) {
            const size_t extent = size_t(hi[i] - lo[i] + 1);
            x[i] = lo[i] + int(idx % extent);
            idx /= extent;
        }
        return x;
    }

    static Window centered(const Site& center, int radius) {
        Window w;
        w.lo.resize(center.size());
        w.hi.resize(center.size());
        for (size_t i = 0; i < center.size(); ++i) {
            w.lo[i] = center[i] - radius;
            w.hi[i] = center[i] + radius;
        }
        return w;
    }
};

struct ProbabilityField {
    Window window;
    std::vector<double> p;  // indexed by window.index_of

    double total() const {
        double t = 0.0;
        for (double v : p) t += v;
        return t;
    }
};

// Exact walk distribution: finite-support map from sites to positive
// operators, stored densely over the window.
class LatticeState {
public:
    LatticeState(Window window, Eigen::Index dim)
        : window_(std::move(window)), dim_(dim),
          data_(window_.site_count() * size_t(dim * dim), Complex(0, 0)) {}

    const Window& window() const { return window_; }
    Eigen::Index dim() const { return dim_; }
    int step() const { return step_; }
    void set_step(int s) { step_ = s; }

    Eigen::Map<Matrix> at(size_t site_index) {
        return Eigen::Map<Matrix>(data_.data() + site_index * size_t(dim_ * dim_), dim_, dim_);
    }
    Eigen::Map<const Matrix> at(size_t site_index) const {
        return Eigen::Map<const Matrix>(data_.data() + site_index * size_t(dim_ * dim_), dim_, dim_);
    }

    double site_trace(size_t site_index) const {
        double t = 0.0;
        const Complex* base = data_.data() + site_index * size_t(dim_ * dim_);
        for (Eigen::Index i = 0; i < dim_; ++i) t += base[i * dim_ + i].real();
        return t;
    }

    double total_trace() const {
        double t = 0.0;
        for (size_t s = 0; s < window_.site_count(); ++s) t += site_trace(s);
        return t;
    }

    void zero() { std::fill(data_.begin(), data_.end(), Complex(0, 0)); }

private:
    Window window_;
    Eigen::Index dim_;
    int step_ = 0;
    std::vector<Complex> data_;
};

inline LatticeState init_delta(const DensityOperator& rho0, const Site& x0, const Window& window) {
    if (!window.contains(x0)) throw std::invalid_argument("init_delta: X0 outside window");
    LatticeState state(window, rho0.dim());
    state.at(window.index_of(x0)) = rho0.mat();
    return state;
}

// Largest displacement magnitude over all rules; sets the boundary margin.
inline int max_rule_reach(const ClassTable& classes) {
    int reach = 1;
    for (const auto& [label, cls] : classes)
        for (const auto& rule : cls.rules)
            for (int c : rule.displacement) reach = std::max(reach, std::abs(c));
    return reach;
}

// One step of the full walk channel: rho'_Y = sum_{X, j, k : X + disp = Y} K rho_X K'.
// Aborts when probability mass reaches the window margin; silent truncation
// would corrupt every downstream moment.
inline LatticeState evolve_step(const LatticeState& state, const ClassField& field,
                                const ClassTable& classes, double boundary_eps = 1e-12) {
    const Window& w = state.window();
    const int d = w.dimension();
    const int margin = max_rule_reach(classes);

    double boundary_mass = 0.0;
    for (size_t s = 0; s < w.site_count(); ++s) {
        const double t = state.site_trace(s);
        if (t <= 0.0) continue;
        const Site x = w.site_of(s);
        for (int i = 0; i < d; ++i)
            if (x[i] < w.lo[i] + margin || x[i] > w.hi[i] - margin) {
                boundary_mass += t;
                break;
            }
    }
    if (boundary_mass > boundary_eps)
        throw std::runtime_error("evolve_step: window too small (boundary mass " +
                                 std::to_string(boundary_mass) + ")");

    LatticeState next(w, state.dim());
    next.set_step(state.step() + 1);
    Site y(d);
    for (size_t s = 0; s < w.site_count(); ++s) {
        if (state.site_trace(s) < 1e-300) continue;  // underflow hygiene
        const Site x = w.site_of(s);
        const VertexClass& cls = classes.at(field.class_at(x));
        const auto rho = state.at(s);
        for (const auto& rule : cls.rules) {
            for (int i = 0; i < d; ++i) y[i] = x[i] + rule.displacement[i];
            auto target = next.at(w.index_of(y));
            for (const auto& k : rule.kraus) target += k * rho * k.adjoint();
        }
    }
    return next;
}

inline ProbabilityField marginal(const LatticeState& state) {
    ProbabilityField out;
    out.window = state.window();
    out.p.resize(out.window.site_count());
    for (size_t s = 0; s < out.p.size(); ++s) out.p[s] = state.site_trace(s);
    return out;
}

// Exact first and second central moments of the site distribution.
inline std::pair<RealVector, RealMatrix> field_moments(const ProbabilityField& field) {
    const int d = field.window.dimension();
    RealVector mean = RealVector::Zero(d);
    RealMatrix cov = RealMatrix::Zero(d, d);
    for (size_t s = 0; s < field.p.size(); ++s) {
        if (field.p[s] == 0.0) continue;
        const Site x = field.window.site_of(s);
        for (int i = 0; i < d; ++i) mean(i) += field.p[s] * x[i];
    }
    for (size_t s = 0; s < field.p.size(); ++s) {
        if (field.p[s] == 0.0) continue;
        const Site x = field.window.site_of(s);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                cov(i, j) += field.p[s] * (x[i] - mean(i)) * (x[j] - mean(j));
    }
    return {mean, cov};
}

struct CrossSection {
    std::vector<int> coordinates;  // along the free axis
    std::vector<double> values;
};

// 1-D slice of p along `axis`, all other coordinates fixed to `fixed`.
inline CrossSection cross_section(const ProbabilityField& field, int axis, const Site& fixed) {
    const Window& w = field.window;
    if (axis < 0 || axis >= w.dimension()) throw std::invalid_argument("cross_section: bad axis");
    for (int i = 0; i < w.dimension(); ++i)
        if (i != axis && (fixed[i] < w.lo[i] || fixed[i] > w.hi[i]))
            throw std::invalid_argument("cross_section: index out of window");
    CrossSection out;
    Site x = fixed;
    for (int c = w.lo[axis]; c <= w.hi[axis]; ++c) {
        x[axis] = c;
        out.coordinates.push_back(c);
        out.values.push_back(field.p[w.index_of(x)]);
    }
    return out;
}

}  // namespace oqw
