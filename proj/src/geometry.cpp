#include "rydpulse/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rydpulse {

int RingGeometry::ring_separation(int i, int j) const {
    const int diff = std::abs(i - j) % n_atoms;
    return std::min(diff, n_atoms - diff);
}

RingGeometry build_ring(int n_atoms, double spacing) {
    if (n_atoms < 3) {
        throw std::invalid_argument("build_ring: a ring needs at least 3 atoms, got " +
                                    std::to_string(n_atoms));
    }
    if (!(spacing > 0.0) || !std::isfinite(spacing)) {
        throw std::invalid_argument("build_ring: spacing must be positive");
    }
    RingGeometry ring;
    ring.n_atoms = n_atoms;
    ring.spacing = spacing;
    ring.distances = Eigen::MatrixXd::Zero(n_atoms, n_atoms);

    const double pi_over_n = std::numbers::pi / n_atoms;
    const double norm = std::sin(pi_over_n);
    for (int i = 0; i < n_atoms; ++i) {
        for (int j = i + 1; j < n_atoms; ++j) {
            const int k = ring.ring_separation(i, j);
            // k == 1 is pinned to the spacing so r_01 == d holds bit-exactly.
            const double r = (k == 1) ? spacing : spacing * std::sin(pi_over_n * k) / norm;
            ring.distances(i, j) = r;
            ring.distances(j, i) = r;
        }
    }
    return ring;
}

}  // namespace rydpulse
