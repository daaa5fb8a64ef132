#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "drsched/lp/dense_simplex.hpp"
#include "drsched/lp/interior_point.hpp"
#include "drsched/lp/problem.hpp"

namespace drsched::lp {

/// Backend used by the schedulers unless the caller supplies one.
inline const Solver& default_solver() {
    static const InteriorPoint solver;
    return solver;
}

inline std::unique_ptr<Solver> make_solver(std::string_view name) {
    if (name == "interior-point" || name == "ipm") {
        return std::make_unique<InteriorPoint>();
    }
    if (name == "dense-simplex" || name == "simplex") {
        return std::make_unique<DenseSimplex>();
    }
    throw std::invalid_argument("unknown LP backend: " + std::string(name));
}

} // namespace drsched::lp
