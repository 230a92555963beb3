#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oqw/evolution.hpp"
#include "oqw/lattice.hpp"
#include "oqw/trajectory.hpp"
#include "oqw/types.hpp"
#include "oqw/vertex_class.hpp"

namespace oqw {

using nlohmann::json;

// Complex numbers serialize as [re, im]; matrices as row-major nested arrays.
inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(row);
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw std::invalid_argument("matrix: expected nested array");
    const Eigen::Index rows = Eigen::Index(j.size());
    const Eigen::Index cols = Eigen::Index(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (Eigen::Index(j[r].size()) != cols)
            throw std::invalid_argument("matrix: ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const json& e = j[r][c];
            if (!e.is_array() || e.size() != 2)
                throw std::invalid_argument("matrix: entries must be [re, im]");
            m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
        }
    }
    return m;
}

inline json class_to_json(const VertexClass& cls) {
    json rules = json::array();
    for (const auto& rule : cls.rules) {
        json kraus = json::array();
        for (const auto& k : rule.kraus) kraus.push_back(matrix_to_json(k));
        rules.push_back({{"displacement", rule.displacement}, {"kraus", kraus}});
    }
    return rules;
}

inline VertexClass class_from_json(const std::string& label, const json& j) {
    VertexClass cls;
    cls.label = label;
    for (const auto& rj : j) {
        TransitionRule rule;
        rule.displacement = rj.at("displacement").get<std::vector<int>>();
        for (const auto& kj : rj.at("kraus")) rule.kraus.push_back(matrix_from_json(kj));
        cls.rules.push_back(std::move(rule));
    }
    return cls;
}

struct ExperimentConfig {
    int dimension = 0;
    int internal_dimension = 0;
    ClassTable classes;
    ClassField field = ClassField::periodic({1}, {"A"});  // replaced on load
    std::optional<Matrix> initial_state;                  // nullopt = maximally mixed
    Site origin;
    int steps = 0;
    int trajectories = 0;
    uint64_t master_seed = 0;
    int window_radius = 0;
    CltThresholds thresholds;

    DensityOperator initial_density() const {
        if (initial_state) return DensityOperator(*initial_state);
        return DensityOperator::maximally_mixed(internal_dimension);
    }
};

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.dimension = j.at("dimension").get<int>();
    cfg.internal_dimension = j.at("internal_dimension").get<int>();
    if (cfg.dimension < 1 || cfg.internal_dimension < 1)
        throw std::invalid_argument("config: dimensions must be positive");

    for (const auto& [label, rules] : j.at("classes").items())
        cfg.classes.emplace(label, class_from_json(label, rules));

    const json& fj = j.at("field");
    const std::string kind = fj.at("kind").get<std::string>();
    if (kind == "periodic") {
        cfg.field = ClassField::periodic(fj.at("period").get<std::vector<int>>(),
                                         fj.at("tile").get<std::vector<std::string>>());
    } else if (kind == "random") {
        cfg.field = ClassField::random(cfg.dimension,
                                       fj.at("probabilities").get<std::map<std::string, double>>(),
                                       fj.at("seed").get<uint64_t>());
    } else {
        throw std::invalid_argument("config: field.kind must be periodic or random");
    }
    if (cfg.field.dimension() != cfg.dimension)
        throw std::invalid_argument("config: field dimension mismatch");

    if (cfg.field.kind() == ClassField::Kind::periodic) {
        for (const auto& label : fj.at("tile").get<std::vector<std::string>>())
            if (!cfg.classes.count(label))
                throw std::invalid_argument("config: tile references unknown class " + label);
    } else {
        for (const auto& label : cfg.field.labels())
            if (!cfg.classes.count(label))
                throw std::invalid_argument("config: field references unknown class " + label);
    }

    const json& init = j.at("initial_state");
    if (init.is_string()) {
        if (init.get<std::string>() != "maximally-mixed")
            throw std::invalid_argument("config: unknown initial_state keyword");
    } else {
        cfg.initial_state = matrix_from_json(init);
        if (cfg.initial_state->rows() != cfg.internal_dimension)
            throw std::invalid_argument("config: initial state dimension mismatch");
    }

    cfg.origin = j.value("origin", Site(size_t(cfg.dimension), 0));
    if (int(cfg.origin.size()) != cfg.dimension)
        throw std::invalid_argument("config: origin dimension mismatch");

    const json& run = j.at("run");
    cfg.steps = run.at("steps").get<int>();
    cfg.trajectories = run.value("trajectories", 0);
    cfg.master_seed = run.at("seed").get<uint64_t>();
    cfg.window_radius = run.value("window_radius", cfg.steps + 1);

    if (j.count("thresholds")) {
        const json& t = j.at("thresholds");
        cfg.thresholds.drift_z = t.value("z", cfg.thresholds.drift_z);
        cfg.thresholds.skewness = t.value("skewness", cfg.thresholds.skewness);
        cfg.thresholds.excess_kurtosis = t.value("kurtosis", cfg.thresholds.excess_kurtosis);
        cfg.thresholds.ks = t.value("ks", cfg.thresholds.ks);
    }

    for (const auto& [label, cls] : cfg.classes) {
        if (cls.dim() != cfg.internal_dimension)
            throw std::invalid_argument("config: class " + label + " has wrong internal dimension");
        if (cls.lattice_dim() != cfg.dimension)
            throw std::invalid_argument("config: class " + label + " has wrong lattice dimension");
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    json j;
    in >> j;
    return config_from_json(j);
}

// FNV-1a over the raw config bytes; embedded in every artifact.
inline std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file " + path);
    uint64_t h = 0xCBF29CE484222325ULL;
    char c;
    while (in.get(c)) {
        h ^= uint64_t(uint8_t(c));
        h *= 0x100000001B3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

// Fixed 17-significant-digit formatting keeps summaries byte-stable.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace oqw
