#pragma once

#include <map>
#include <string>
#include <vector>

#include "exptwist/model.hpp"

namespace exptwist {

using Params = std::map<std::string, double>;

// Built-in model families:
//   bm           sigma, x0, dim, init_std   driftless Brownian motion
//   const_drift  mu, sigma, x0, init_std    dX = mu dt + sigma dW
//   linear_drift slope, sigma, x0, init_std dX = slope X dt + sigma dW
//   ou           theta, mean, sigma, x0     dX = theta(mean - X)dt + sigma dW
//   poisson_unit lambda, x0                 pure jump, unit jumps
//   cpg          lambda, jump_mean, jump_std, sigma, x0
// init_std > 0 replaces the point mass with N(x0, init_std^2).
ModelSpec make_model(const std::string& family, const Params& params);

// Cost families ("f_const" adds a constant running cost to any of them):
//   null       f = g = 0
//   quadratic  g(x) = gamma x^2
//   linear     g(x) = coeff x (meant for nonnegative state supports)
// The analytic hint is filled when the (model, cost) pair has a closed-form
// value function.
CostSpec make_cost(const std::string& family, const Params& params,
                   const std::string& model_family, const Params& model_params,
                   double horizon);

const std::vector<std::string>& model_families();
const std::vector<std::string>& cost_families();
std::vector<std::string> model_family_keys(const std::string& family);
std::vector<std::string> cost_family_keys(const std::string& family);

}  // namespace exptwist
