#pragma once

#include <Eigen/Dense>

namespace rydpulse {

// N atoms on a regular polygon with nearest-neighbour spacing `spacing` (µm).
struct RingGeometry {
    int n_atoms = 0;
    double spacing = 0.0;
    Eigen::MatrixXd distances;  // µm, symmetric, zero diagonal

    // Ring distance k = min(|i-j|, N-|i-j|).
    int ring_separation(int i, int j) const;
};

// Chord law r_ij = d sin(pi k / N) / sin(pi / N), so that r_01 = d exactly.
// Throws std::invalid_argument for n_atoms < 3 or spacing <= 0.
RingGeometry build_ring(int n_atoms, double spacing);

}  // namespace rydpulse
