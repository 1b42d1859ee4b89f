#pragma once

#include "exptwist/model.hpp"
#include "exptwist/test_function.hpp"

namespace exptwist {

struct FdOptions {
    // 0 selects the default 1e-4 * (1 + |x|).
    double fd_step = 0.0;
    // Draw count for expectations over an opaque jump size law.
    std::size_t jump_mc_draws = 10000;
    std::uint64_t jump_mc_seed = 0x9d2c5680u;
    // Nodes for Gauss-Hermite quadrature of Gaussian jump laws.
    int gauss_hermite_nodes = 40;

    double step_for(const Vec& x) const {
        return fd_step > 0.0 ? fd_step : 1e-4 * (1.0 + x.norm());
    }
};

// E_{q ~ rho(t,x)}[h(q)]: exact sum for discrete laws, Gauss-Hermite for
// Gaussian laws, fixed-seed Monte Carlo otherwise.
double jump_size_expectation(const JumpSpec& jump, double t, const Vec& x,
                             const std::function<double(const Vec& q)>& h,
                             const FdOptions& opt = {});

// Finite-difference (or analytic, when supplied) derivative helpers.
double time_derivative(const TestFunction& phi, double t, const Vec& x,
                       const FdOptions& opt = {});
Vec space_gradient(const TestFunction& phi, double t, const Vec& x,
                   const FdOptions& opt = {});
Mat space_hessian(const TestFunction& phi, double t, const Vec& x,
                  const FdOptions& opt = {});

// Action of the reference generator:
//   a(phi) = dphi/dt + <grad phi, b> + 1/2 Tr[sigma sigma^T hess phi]
//          + lambda(t,x) E_q[phi(t, x+q) - phi(t, x)].
// The compensating truncation term is dropped: kernels here are
// finite-activity and b is the full drift.
double eval_generator(const ModelSpec& model, const TestFunction& phi, double t,
                      const Vec& x, const FdOptions& opt = {});

}  // namespace exptwist
