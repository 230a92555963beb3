#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "oqw/rng.hpp"
#include "oqw/vertex_class.hpp"

namespace oqw {

using Site = std::vector<int>;  // coordinate in Z^d

struct ClassDensities {
    std::map<std::string, double> p;
};

// Assignment of a vertex class to every site of Z^d. Either a periodic tile
// or a seeded random field; lookup is a pure function of the coordinate, so
// no field is ever stored.
class ClassField {
public:
    enum class Kind { periodic, random };

    static ClassField periodic(std::vector<int> period, std::vector<std::string> tile) {
        ClassField f;
        f.kind_ = Kind::periodic;
        f.period_ = std::move(period);
        f.tile_ = std::move(tile);
        size_t cells = 1;
        for (int p : f.period_) {
            if (p < 1) throw std::invalid_argument("ClassField: period entries must be >= 1");
            cells *= size_t(p);
        }
        if (f.tile_.size() != cells)
            throw std::invalid_argument("ClassField: tile must cover exactly one period");
        return f;
    }

    static ClassField random(int dimension, std::map<std::string, double> probabilities,
                             uint64_t seed) {
        ClassField f;
        f.kind_ = Kind::random;
        f.dimension_ = dimension;
        f.seed_ = seed;
        double total = 0.0;
        for (const auto& [label, p] : probabilities) {
            if (p < 0.0) throw std::invalid_argument("ClassField: negative class probability");
            total += p;
            f.labels_.push_back(label);
            f.cumulative_.push_back(total);
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("ClassField: class probabilities must sum to 1");
        f.cumulative_.back() = 1.0;
        return f;
    }

    Kind kind() const { return kind_; }
    int dimension() const { return kind_ == Kind::periodic ? int(period_.size()) : dimension_; }
    const std::vector<int>& period() const { return period_; }
    const std::vector<std::string>& labels() const { return labels_; }
    uint64_t seed() const { return seed_; }

    std::map<std::string, double> probabilities() const {
        std::map<std::string, double> out;
        double prev = 0.0;
        for (size_t i = 0; i < labels_.size(); ++i) {
            out[labels_[i]] = cumulative_[i] - prev;
            prev = cumulative_[i];
        }
        return out;
    }

    const std::string& class_at(const Site& x) const {
        if (int(x.size()) != dimension())
            throw std::invalid_argument("class_at: coordinate dimension mismatch");
        if (kind_ == Kind::periodic) {
            // row-major over the period, last coordinate fastest
            size_t idx = 0;
            for (size_t i = 0; i < period_.size(); ++i) {
                int m = x[i] % period_[i];
                if (m < 0) m += period_[i];
                idx = idx * size_t(period_[i]) + size_t(m);
            }
            return tile_[idx];
        }
        std::vector<uint64_t> words(x.size());
        for (size_t i = 0; i < x.size(); ++i) words[i] = uint64_t(int64_t(x[i]));
        const double u = to_unit_interval(mix_words(seed_, words.data(), words.size()));
        for (size_t i = 0; i + 1 < cumulative_.size(); ++i)
            if (u < cumulative_[i]) return labels_[i];
        return labels_.back();
    }

private:
    Kind kind_ = Kind::periodic;
    int dimension_ = 0;
    std::vector<int> period_;
    std::vector<std::string> tile_;
    std::vector<std::string> labels_;
    std::vector<double> cumulative_;
    uint64_t seed_ = 0;
};

// Empirical class frequencies over the L-infinity ball of given radius.
// Works for any field type exposing dimension() and class_at(Site).
template <typename Field>
ClassDensities estimate_densities(const Field& field, const Site& center, int radius) {
    if (radius < 1) throw std::invalid_argument("estimate_densities: radius must be >= 1");
    const int d = field.dimension();
    ClassDensities out;
    Site x(d);
    size_t count = 0;
    // odometer over the window
    std::vector<int> offset(d, -radius);
    while (true) {
        for (int i = 0; i < d; ++i) x[i] = center[i] + offset[i];
        out.p[field.class_at(x)] += 1.0;
        ++count;
        int i = d - 1;
        while (i >= 0 && ++offset[i] > radius) offset[i--] = -radius;
        if (i < 0) break;
    }
    for (auto& [label, v] : out.p) v /= double(count);
    return out;
}

struct RegularityReport {
    bool pass = false;
    double max_tv_distance = 0.0;
    double epsilon = 0.0;
    int radius = 0;
    int windows = 0;
};

inline double total_variation(const ClassDensities& a, const ClassDensities& b) {
    double tv = 0.0;
    for (const auto& [label, p] : a.p) {
        auto it = b.p.find(label);
        tv += std::abs(p - (it == b.p.end() ? 0.0 : it->second));
    }
    for (const auto& [label, p] : b.p)
        if (!a.p.count(label)) tv += p;
    return 0.5 * tv;
}

// Sampled check of density translation invariance: max TV distance between
// class frequencies of randomly placed windows.
template <typename Field>
RegularityReport regularity_report(const Field& field, double epsilon, int radius,
                                   int sample_windows, uint64_t seed,
                                   int placement_range = 1000) {
    if (epsilon <= 0.0) throw std::invalid_argument("regularity_report: epsilon must be positive");
    const int d = field.dimension();
    RngStream rng(seed, 0);
    std::vector<ClassDensities> densities;
    densities.reserve(size_t(sample_windows));
    for (int w = 0; w < sample_windows; ++w) {
        Site center(d);
        for (int i = 0; i < d; ++i)
            center[i] = int(rng.next_u64() % uint64_t(2 * placement_range + 1)) - placement_range;
        densities.push_back(estimate_densities(field, center, radius));
    }
    RegularityReport rep;
    rep.epsilon = epsilon;
    rep.radius = radius;
    rep.windows = sample_windows;
    for (size_t a = 0; a < densities.size(); ++a)
        for (size_t b = a + 1; b < densities.size(); ++b)
            rep.max_tv_distance = std::max(rep.max_tv_distance,
                                           total_variation(densities[a], densities[b]));
    rep.pass = rep.max_tv_distance <= epsilon;
    return rep;
}

}  // namespace oqw
