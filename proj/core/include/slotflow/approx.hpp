// SPDX-License-Identifier: Apache-2.0

#ifndef SLOTFLOW_APPROX_HPP
#define SLOTFLOW_APPROX_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "slotflow/backend.hpp"
#include "slotflow/types.hpp"

namespace slotflow {

// Chebyshev interpolant of a scalar function on [a, b]. coeffs[k] multiplies
// T_k of the domain-mapped argument; p(x) = sum_k coeffs[k] T_k((2x-a-b)/(b-a)).
struct ChebApprox {
    double a = -1.0;
    double b = 1.0;
    int degree = 0;
    std::vector<double> coeffs;  // size degree + 1
    // Max deviation from the target on a dense uniform grid.
    double max_abs_error = 0.0;
    // Levels the encrypted evaluation consumes: ceil(log2(degree+1)) + 1
    // (basis recombination plus the domain map).
    int depth_cost = 0;
};

// Interpolate f at the degree+1 Chebyshev nodes of the first kind. Throws
// DomainError when f is not finite on the nodes or the error grid, ShapeError
// on a bad interval or negative degree.
ChebApprox chebyshev_fit(const std::function<double(double)> &f, double a, double b, int degree);

// Clenshaw evaluation of the interpolant (plaintext reference).
double eval_cheb_plain(const ChebApprox &p, double x);

// Slot-wise encrypted evaluation. Builds the power-of-two Chebyshev basis of
// the mapped argument, then recombines with a depth-balanced split
// p = q + T_m * r, so the level drop is exactly depth_cost for any
// coefficient vector (no data-dependent shortcuts). Throws LevelExhausted
// when x.level() < depth_cost.
CipherVec eval_cheb_encrypted(HeBackend &backend, const ChebApprox &p, const CipherVec &x);

// Operation counts of eval_cheb_encrypted as a pure function of the degree;
// depth equals ChebApprox::depth_cost.
struct ChebCost {
    OpCounters ops;
    int depth = 0;
};
ChebCost cheb_cost(int degree);

// Named scalar activations available to model descriptions: identity, square,
// relu, sigmoid, softplus, silu, tanh, exp. Throws ShapeError on unknown names.
std::function<double(double)> activation_function(const std::string &name);
const std::vector<std::string> &activation_names();

}  // namespace slotflow

#endif
