#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tvulog/grid.hpp"

namespace tvulog {

// Scale-space stack: one value per (i, j, k) lattice point, stored row-major
// with i slowest and k fastest, i.e. flat(i,j,k) = (i*n2 + j)*K + k.
struct ScaleSpaceCube {
    SpatialGrid grid;
    ScaleGrid scales;
    std::vector<double> v;

    std::size_t sites() const { return grid.size() * scales.count(); }
    std::size_t flat(std::size_t i, std::size_t j, std::size_t k) const {
        return (i * grid.n2 + j) * scales.count() + k;
    }
    double& at(std::size_t i, std::size_t j, std::size_t k) { return v[flat(i, j, k)]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return v[flat(i, j, k)]; }
};

inline ScaleSpaceCube make_cube(const SpatialGrid& g, const ScaleGrid& s, double fill = 0.0) {
    ScaleSpaceCube c{g, s, {}};
    c.v.assign(g.size() * s.count(), fill);
    return c;
}

inline bool same_shape(const ScaleSpaceCube& a, const ScaleSpaceCube& b) {
    return same_grid(a.grid, b.grid) && same_scales(a.scales, b.scales);
}

// Vector field over the same lattice with ncomp components per site
// (spatial derivatives first, scale derivative last), component fastest:
// flat(i,j,k,c) = ((i*n2 + j)*K + k)*ncomp + c.
struct VectorFieldCube {
    SpatialGrid grid;
    ScaleGrid scales;
    std::size_t ncomp = 0;
    std::vector<double> v;

    std::size_t sites() const { return grid.size() * scales.count(); }
    std::size_t flat(std::size_t i, std::size_t j, std::size_t k, std::size_t c) const {
        return ((i * grid.n2 + j) * scales.count() + k) * ncomp + c;
    }
    double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t c) {
        return v[flat(i, j, k, c)];
    }
    double at(std::size_t i, std::size_t j, std::size_t k, std::size_t c) const {
        return v[flat(i, j, k, c)];
    }
};

inline VectorFieldCube make_field(const SpatialGrid& g, const ScaleGrid& s, std::size_t ncomp,
                                  double fill = 0.0) {
    VectorFieldCube f{g, s, ncomp, {}};
    f.v.assign(g.size() * s.count() * ncomp, fill);
    return f;
}

// Credible tube: entrywise bounds on scale-space cubes.
struct Tube {
    ScaleSpaceCube lower;
    ScaleSpaceCube upper;
};

inline void validate_tube(const Tube& t) {
    if (!same_shape(t.lower, t.upper)) throw std::invalid_argument("tube: shape mismatch");
    for (std::size_t i = 0; i < t.lower.v.size(); ++i)
        if (!(t.lower.v[i] <= t.upper.v[i]))
            throw std::invalid_argument("tube: lower bound exceeds upper bound");
}

inline bool cube_in_tube(const ScaleSpaceCube& c, const Tube& t, double slack = 0.0) {
    for (std::size_t i = 0; i < c.v.size(); ++i)
        if (c.v[i] < t.lower.v[i] - slack || c.v[i] > t.upper.v[i] + slack) return false;
    return true;
}

}  // namespace tvulog
