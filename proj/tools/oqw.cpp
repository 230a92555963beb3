// Command-line front end: configuration-driven experiments over the walk
// library. Every artifact embeds the config hash and the master seed; floats
// are serialized with fixed 17-significant-digit formatting so reruns with
// the same (config, seed) produce byte-identical output at any thread count.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oqw/analysis.hpp"
#include "oqw/config.hpp"
#include "oqw/evolution.hpp"
#include "oqw/lattice.hpp"
#include "oqw/reduction.hpp"
#include "oqw/trajectory.hpp"
#include "oqw/vertex_class.hpp"

namespace fs = std::filesystem;
using namespace oqw;

namespace {

json num(double v) { return json(format_double(v)); }

json real_vector_json(const RealVector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
    return a;
}

json real_matrix_json(const RealMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

json complex_matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(json::array({num(m(i, j).real()), num(m(i, j).imag())}));
        rows.push_back(row);
    }
    return rows;
}

struct Session {
    ExperimentConfig cfg;
    std::string config_path;
    std::string out_dir;
    uint64_t seed = 0;
    int threads = 1;
    json summary;

    void write_summary() const {
        std::ofstream os(fs::path(out_dir) / "summary.json");
        os << summary.dump(2) << "\n";
    }
};

Session open_session(const std::string& subcommand, const std::string& config_path,
                     const std::string& out_dir, uint64_t seed_override, bool seed_set,
                     int threads) {
    Session s;
    s.config_path = config_path;
    s.out_dir = out_dir;
    fs::create_directories(out_dir);
    s.cfg = load_config(config_path);
    s.seed = seed_set ? seed_override : s.cfg.master_seed;
    s.threads = threads;
    s.summary["subcommand"] = subcommand;
    s.summary["config_hash"] = file_hash(config_path);
    s.summary["master_seed"] = s.seed;
    return s;
}

// All oqw-core gates must pass before any run; returns the per-class report.
json validate_all(const Session& s, bool& ok) {
    ok = true;
    json classes = json::object();
    for (const auto& [label, cls] : s.cfg.classes) {
        const ValidationReport rep = validate_class(cls);
        json c;
        c["pass"] = rep.pass;
        c["completeness_deviation"] = num(rep.completeness_deviation);
        c["message"] = rep.message;
        classes[label] = c;
        ok = ok && rep.pass;
    }
    return classes;
}

void require_valid(Session& s) {
    bool ok = false;
    s.summary["validation"] = validate_all(s, ok);
    if (!ok) throw std::invalid_argument("class validation failed; see summary.json");
}

void write_marginal_csv(const fs::path& path, const ProbabilityField& p) {
    std::ofstream os(path);
    const int d = int(p.window.lo.size());
    for (int i = 0; i < d; ++i) os << "x" << i << ",";
    os << "p\n";
    for (size_t s = 0; s < p.p.size(); ++s) {
        if (p.p[s] <= 0.0) continue;
        const Site x = p.window.site_of(s);
        for (int c : x) os << c << ",";
        os << format_double(p.p[s]) << "\n";
    }
}

void write_xsection_csv(const fs::path& path, const CrossSection& slice, int axis) {
    std::ofstream os(path);
    os << "x" << axis << ",p\n";
    for (size_t i = 0; i < slice.coordinates.size(); ++i)
        os << slice.coordinates[i] << "," << format_double(slice.values[i]) << "\n";
}

int cmd_validate(Session& s) {
    bool ok = false;
    s.summary["classes"] = validate_all(s, ok);
    s.summary["pass"] = ok;
    s.write_summary();
    return ok ? 0 : 2;
}

int cmd_invariant(Session& s) {
    require_valid(s);
    bool unique = true;
    json classes = json::object();
    for (const auto& [label, cls] : s.cfg.classes) {
        const InvariantReport rep = invariant_state(cls);
        const DriftVector drift = mean_vector(cls, rep.rho_inf);
        json c;
        c["rho_inf"] = complex_matrix_json(rep.rho_inf.mat());
        c["fixed_point_residual"] = num(rep.fixed_point_residual);
        c["eigenvalue_one_multiplicity"] = rep.eigenvalue_one_multiplicity;
        c["mean_vector"] = real_vector_json(drift.m);
        if (!drift.warning.empty()) c["warning"] = drift.warning;
        classes[label] = c;
        unique = unique && rep.eigenvalue_one_multiplicity == 1;
    }
    s.summary["classes"] = classes;
    if (!unique) {
        s.summary["error"] = {{"type", "non_unique_invariant_state"},
                              {"message", "a class channel has eigenvalue-1 multiplicity > 1"}};
        s.write_summary();
        return 3;
    }
    s.write_summary();
    return 0;
}

int cmd_poisson(Session& s) {
    require_valid(s);
    json classes = json::object();
    for (const auto& [label, cls] : s.cfg.classes) {
        const InvariantReport inv = invariant_state(cls);
        json dirs = json::array();
        for (int axis = 0; axis < s.cfg.dimension; ++axis) {
            RealVector l = RealVector::Zero(s.cfg.dimension);
            l(axis) = 1.0;
            const PoissonOperator op = solve_poisson(cls, inv.rho_inf, l);
            // spot-check the discrete harmonic identity on random inputs
            RngStream rng(s.seed, uint64_t(axis));
            double worst = 0.0;
            for (int t = 0; t < 20; ++t) {
                Matrix g(cls.dim(), cls.dim());
                for (Eigen::Index i = 0; i < g.size(); ++i)
                    g(i) = Complex(rng.next_double() - 0.5, rng.next_double() - 0.5);
                Matrix gg = g * g.adjoint();
                const DensityOperator rho((gg / gg.trace()).eval());
                RealVector x(s.cfg.dimension);
                for (int i = 0; i < s.cfg.dimension; ++i)
                    x(i) = std::floor(20.0 * (rng.next_double() - 0.5));
                worst = std::max(worst, poisson_identity_check(cls, op, rho, x, l));
            }
            json d;
            d["l"] = real_vector_json(l);
            d["L"] = complex_matrix_json(op.L);
            d["residual"] = num(op.residual);
            d["identity_check_max"] = num(worst);
            dirs.push_back(d);
        }
        classes[label] = dirs;
    }
    s.summary["classes"] = classes;
    s.write_summary();
    return 0;
}

int cmd_reduce(Session& s, int length, std::string base_class) {
    require_valid(s);
    if (base_class.empty()) base_class = s.cfg.classes.begin()->first;
    int l = length;
    if (l == 0) {
        for (int cand = 1; cand <= 8; ++cand)
            if (is_reducible(s.cfg.field, s.cfg.classes, base_class, cand)) {
                l = cand;
                break;
            }
        if (l == 0) throw std::runtime_error("walk is not reducible for any path length <= 8");
    } else if (!is_reducible(s.cfg.field, s.cfg.classes, base_class, l)) {
        throw std::runtime_error("walk is not reducible at path length " + std::to_string(l));
    }

    const ReducedWalk walk = compose_paths(s.cfg.field, s.cfg.classes, base_class, l);
    const ReducedDrift drift = reduced_drift(walk);
    const EquivalenceReport equiv =
        equivalence_check(s.cfg.field, s.cfg.classes, walk, s.cfg.initial_density());

    const VertexClass reduced = walk.as_vertex_class();
    json exported;
    exported["label"] = reduced.label;
    exported["path_length"] = l;
    exported["base_class"] = base_class;
    exported["rules"] = class_to_json(reduced);
    std::ofstream(fs::path(s.out_dir) / "reduced_class.json") << exported.dump(2) << "\n";

    s.summary["base_class"] = base_class;
    s.summary["path_length"] = l;
    s.summary["operators"] = walk.operators.size();
    s.summary["pruned_paths"] = walk.pruned;
    s.summary["invariant_multiplicity"] = drift.multiplicity;
    s.summary["drift_per_reduced_step"] = real_vector_json(drift.per_reduced_step);
    s.summary["drift_per_original_step"] = real_vector_json(drift.per_original_step);
    s.summary["equivalence"] = {{"pass", equiv.pass}, {"max_deviation", num(equiv.max_deviation)}};
    s.write_summary();
    if (!equiv.pass)
        throw std::runtime_error("reduced walk does not reproduce the l-step distribution");
    return 0;
}

int cmd_evolve(Session& s, std::vector<int> steps) {
    require_valid(s);
    if (steps.empty()) steps = {s.cfg.steps};
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    if (steps.front() < 0) throw std::invalid_argument("--steps entries must be >= 0");

    const Window window = Window::centered(s.cfg.origin, s.cfg.window_radius);
    LatticeState state = init_delta(s.cfg.initial_density(), s.cfg.origin, window);
    json checkpoints = json::array();
    double max_drift = 0.0;
    int step = 0;
    for (int target : steps) {
        for (; step < target; ++step) state = evolve_step(state, s.cfg.field, s.cfg.classes);
        const ProbabilityField p = marginal(state);
        write_marginal_csv(fs::path(s.out_dir) / ("marginal_n" + std::to_string(target) + ".csv"),
                           p);
        write_xsection_csv(fs::path(s.out_dir) / ("xsection_n" + std::to_string(target) + ".csv"),
                           cross_section(p, 0, s.cfg.origin), 0);
        const auto [mean, cov] = field_moments(p);
        const double drift = std::abs(state.total_trace() - 1.0);
        max_drift = std::max(max_drift, drift);
        json c;
        c["step"] = target;
        c["total_trace"] = num(state.total_trace());
        c["trace_drift"] = num(drift);
        c["mean"] = real_vector_json(mean);
        c["covariance"] = real_matrix_json(cov);
        checkpoints.push_back(c);
    }
    s.summary["window_radius"] = s.cfg.window_radius;
    s.summary["checkpoints"] = checkpoints;
    s.summary["max_trace_drift"] = num(max_drift);
    s.write_summary();
    return 0;
}

TrajectoryStatistics run_monte_carlo(const Session& s) {
    if (s.cfg.trajectories < 2)
        throw std::invalid_argument("config: run.trajectories must be >= 2 for simulation");
    return monte_carlo(s.cfg.field, s.cfg.classes, s.cfg.initial_density(), s.cfg.origin,
                       s.cfg.steps, s.cfg.trajectories, s.seed, s.threads);
}

json statistics_json(const TrajectoryStatistics& stats) {
    json out;
    out["trajectories"] = stats.trajectories;
    out["steps"] = stats.steps;
    out["mean"] = real_vector_json(stats.mean);
    out["covariance"] = real_matrix_json(stats.covariance);
    json comps = json::array();
    for (size_t i = 0; i < stats.component_moments.size(); ++i) {
        const MomentSummary& m = stats.component_moments[i];
        comps.push_back({{"mean", num(m.mean)},
                         {"variance", num(m.variance)},
                         {"skewness", num(m.skewness)},
                         {"excess_kurtosis", num(m.excess_kurtosis)},
                         {"ks", num(stats.ks[i])}});
    }
    out["components"] = comps;
    return out;
}

int cmd_simulate(Session& s, bool dump_endpoints) {
    require_valid(s);
    const TrajectoryStatistics stats = run_monte_carlo(s);
    s.summary["statistics"] = statistics_json(stats);
    if (dump_endpoints) {
        std::ofstream os(fs::path(s.out_dir) / "endpoints.csv");
        os << "index";
        for (int i = 0; i < s.cfg.dimension; ++i) os << ",x" << i;
        os << "\n";
        for (size_t t = 0; t < stats.endpoints.size(); ++t) {
            os << t;
            for (int c : stats.endpoints[t]) os << "," << c;
            os << "\n";
        }
    }
    s.write_summary();
    return 0;
}

// Expected drift for the CLT gates: the class mean when homogeneous, the
// reduction drift on a periodic field, the density-weighted class average on
// a random field.
json expected_drift(Session& s, RealVector& m) {
    json how;
    std::map<std::string, DriftVector> class_means;
    for (const auto& [label, cls] : s.cfg.classes)
        class_means.emplace(label, mean_vector(cls, invariant_state(cls).rho_inf));

    if (s.cfg.classes.size() == 1) {
        m = class_means.begin()->second.m;
        how["method"] = "homogeneous";
        return how;
    }
    if (s.cfg.field.kind() == ClassField::Kind::periodic) {
        const std::string base = s.cfg.classes.begin()->first;
        for (int l = 1; l <= 8; ++l) {
            if (!is_reducible(s.cfg.field, s.cfg.classes, base, l)) continue;
            const ReducedDrift drift =
                reduced_drift(compose_paths(s.cfg.field, s.cfg.classes, base, l));
            m = drift.per_original_step;
            how["method"] = "reduction";
            how["base_class"] = base;
            how["path_length"] = l;
            how["drift_per_reduced_step"] = real_vector_json(drift.per_reduced_step);
            how["drift_per_original_step"] = real_vector_json(drift.per_original_step);
            return how;
        }
        throw std::runtime_error("periodic field is not reducible for any path length <= 8");
    }
    std::vector<std::pair<DriftVector, double>> weighted;
    for (const auto& [label, p] : s.cfg.field.probabilities())
        weighted.emplace_back(class_means.at(label), p);
    m = mixed_mean(weighted).m;
    how["method"] = "mixed_mean";
    json probs = json::object();
    for (const auto& [label, p] : s.cfg.field.probabilities()) probs[label] = num(p);
    how["probabilities"] = probs;
    return how;
}

int cmd_clt_check(Session& s) {
    require_valid(s);
    RealVector m;
    json how = expected_drift(s, m);
    how["m"] = real_vector_json(m);
    s.summary["expected_drift"] = how;

    json classes = json::object();
    for (const auto& [label, cls] : s.cfg.classes) {
        const InvariantReport inv = invariant_state(cls);
        json c;
        c["eigenvalue_one_multiplicity"] = inv.eigenvalue_one_multiplicity;
        c["fixed_point_residual"] = num(inv.fixed_point_residual);
        c["mean_vector"] = real_vector_json(mean_vector(cls, inv.rho_inf).m);
        classes[label] = c;
    }
    s.summary["classes"] = classes;

    const TrajectoryStatistics stats = run_monte_carlo(s);
    s.summary["statistics"] = statistics_json(stats);

    const CltReport rep = clt_report(stats, m, s.cfg.thresholds);
    json comps = json::array();
    for (const CltComponentReport& c : rep.components) {
        comps.push_back({{"drift_estimate", num(c.drift_estimate)},
                         {"drift_expected", num(c.drift_expected)},
                         {"drift_error", num(c.drift_error)},
                         {"drift_allowance", num(c.drift_allowance)},
                         {"normalized_variance", num(c.normalized_variance)},
                         {"skewness", num(c.skewness)},
                         {"excess_kurtosis", num(c.excess_kurtosis)},
                         {"ks", num(c.ks)},
                         {"degenerate", c.degenerate},
                         {"drift_pass", c.drift_pass},
                         {"normality_pass", c.normality_pass}});
    }
    s.summary["clt"] = {{"components", comps}, {"pass", rep.pass}};
    s.write_summary();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"open quantum walk laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, base_class;
    uint64_t seed = 0;
    int threads = 1, length = 0;
    std::vector<int> steps;
    bool no_endpoints = false;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config file")->required();
        cmd->add_option("--out", out_dir, "output directory")->required();
        cmd->add_option("--seed", seed, "override the config master seed")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--threads", threads, "worker thread cap")->check(CLI::PositiveNumber);
    };

    CLI::App* validate = app.add_subcommand("validate", "class completeness report");
    CLI::App* invariant = app.add_subcommand("invariant", "invariant states and mean vectors");
    CLI::App* poisson = app.add_subcommand("poisson", "Poisson operators per direction");
    CLI::App* reduce = app.add_subcommand("reduce", "reducibility check and reduced walk export");
    CLI::App* evolve = app.add_subcommand("evolve", "exact evolution marginals");
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo trajectory statistics");
    CLI::App* clt = app.add_subcommand("clt-check", "central-limit verdict report");
    for (CLI::App* cmd : {validate, invariant, poisson, reduce, evolve, simulate, clt})
        add_common(cmd);
    reduce->add_option("--length", length, "path length l (default: search 1..8)");
    reduce->add_option("--base-class", base_class, "class whose sites anchor the reduction");
    evolve->add_option("--steps", steps, "checkpoint steps (comma separated)")->delimiter(',');
    simulate->add_flag("--no-endpoints", no_endpoints, "skip the endpoints.csv dump");

    CLI11_PARSE(app, argc, argv);

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        Session s = open_session(name, config_path, out_dir, seed, seed_set, threads);
        try {
            if (name == "validate") return cmd_validate(s);
            if (name == "invariant") return cmd_invariant(s);
            if (name == "poisson") return cmd_poisson(s);
            if (name == "reduce") return cmd_reduce(s, length, base_class);
            if (name == "evolve") return cmd_evolve(s, steps);
            if (name == "simulate") return cmd_simulate(s, !no_endpoints);
            if (name == "clt-check") return cmd_clt_check(s);
            return 3;
        } catch (const std::invalid_argument& e) {
            s.summary["error"] = {{"type", "validation"}, {"message", e.what()}};
            s.write_summary();
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            s.summary["error"] = {{"type", "runtime"}, {"message", e.what()}};
            s.write_summary();
            std::cerr << "error: " << e.what() << "\n";
            return 3;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
