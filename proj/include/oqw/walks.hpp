#pragma once

#include <cmath>

#include "oqw/vertex_class.hpp"

namespace oqw {
namespace walks {

inline Matrix ketbra(Eigen::Index dim, Eigen::Index a, Eigen::Index b, double w = 1.0) {
    Matrix m = Matrix::Zero(dim, dim);
    m(a, b) = w;
    return m;
}

// d=1, D=1: classical symmetric walk.
inline VertexClass coin_flip() {
    const double r = 1.0 / std::sqrt(2.0);
    VertexClass cls;
    cls.label = "coin-flip";
    cls.rules.push_back({{+1}, {r * Matrix::Identity(1, 1)}});
    cls.rules.push_back({{-1}, {r * Matrix::Identity(1, 1)}});
    return cls;
}

// d=1, D=2: collapses onto |0><0| and then drifts right deterministically.
inline VertexClass damp_drift() {
    VertexClass cls;
    cls.label = "damp-drift";
    cls.rules.push_back({{+1}, {ketbra(2, 0, 0)}});
    cls.rules.push_back({{-1}, {ketbra(2, 0, 1)}});
    return cls;
}

// Two-class walk on Z^2 with a 4-dimensional internal space. Displacements:
// up (0,1), right (1,0), down (0,-1), left (-1,0); two Kraus operators per
// direction with weights sqrt(alpha), sqrt(1-alpha) or sqrt(1/2) each.
inline VertexClass checkerboard_class_a(double alpha = 0.81) {
    const double sa = std::sqrt(alpha);
    const double sb = std::sqrt(1.0 - alpha);
    const double sh = std::sqrt(0.5);
    VertexClass cls;
    cls.label = "A";
    cls.rules.push_back({{0, 1}, {ketbra(4, 0, 0, sa), ketbra(4, 1, 0, sb)}});
    cls.rules.push_back({{1, 0}, {ketbra(4, 1, 1, sh), ketbra(4, 3, 1, sh)}});
    cls.rules.push_back({{0, -1}, {ketbra(4, 3, 2, sa), ketbra(4, 2, 2, sb)}});
    cls.rules.push_back({{-1, 0}, {ketbra(4, 3, 3, sh), ketbra(4, 0, 3, sh)}});
    return cls;
}

inline VertexClass checkerboard_class_b(double alpha = 0.81) {
    const double sa = std::sqrt(alpha);
    const double sb = std::sqrt(1.0 - alpha);
    const double sh = std::sqrt(0.5);
    VertexClass cls;
    cls.label = "B";
    cls.rules.push_back({{0, 1}, {ketbra(4, 1, 0, sa), ketbra(4, 3, 0, sb)}});
    cls.rules.push_back({{1, 0}, {ketbra(4, 0, 1, sh), ketbra(4, 2, 1, sh)}});
    cls.rules.push_back({{0, -1}, {ketbra(4, 1, 2, sa), ketbra(4, 3, 2, sb)}});
    cls.rules.push_back({{-1, 0}, {ketbra(4, 0, 3, sh), ketbra(4, 2, 3, sh)}});
    return cls;
}

}  // namespace walks
}  // namespace oqw
