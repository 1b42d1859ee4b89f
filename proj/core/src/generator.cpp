#include "exptwist/generator.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "exptwist/errors.hpp"

namespace exptwist {

namespace {

[[noreturn]] void stencil_failure(const char* what, double t, const Vec& x,
                                  std::initializer_list<double> stencil) {
    std::ostringstream out;
    out << what << " non-finite at (t=" << t << ", x=[" << x.transpose()
        << "]), stencil values:";
    for (double v : stencil) out << ' ' << v;
    throw NumericalError(out.str());
}

// Gauss-Hermite nodes/weights for weight e^{-u^2} (Golub-Welsch).
struct GaussHermite {
    Vec nodes;
    Vec weights;
};

GaussHermite gauss_hermite(int n) {
    Mat jacobi = Mat::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const double off = std::sqrt(0.5 * i);
        jacobi(i, i - 1) = off;
        jacobi(i - 1, i) = off;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
    GaussHermite gh;
    gh.nodes = es.eigenvalues();
    gh.weights = Vec(n);
    const double total = std::sqrt(M_PI);
    for (int i = 0; i < n; ++i) {
        const double w0 = es.eigenvectors()(0, i);
        gh.weights(i) = total * w0 * w0;
    }
    return gh;
}

}  // namespace

double jump_size_expectation(const JumpSpec& jump, double t, const Vec& x,
                             const std::function<double(const Vec& q)>& h,
                             const FdOptions& opt) {
    if (const auto* discrete = std::get_if<DiscreteJumpLaw>(&jump.size_law)) {
        double acc = 0.0;
        for (const auto& [q, p] : discrete->atoms) acc += p * h(q);
        return acc;
    }
    if (const auto* gauss = std::get_if<GaussianJumpLaw>(&jump.size_law)) {
        static thread_local int cached_n = -1;
        static thread_local GaussHermite cached;
        if (cached_n != opt.gauss_hermite_nodes) {
            cached = gauss_hermite(opt.gauss_hermite_nodes);
            cached_n = opt.gauss_hermite_nodes;
        }
        double acc = 0.0;
        Vec q(1);
        for (int i = 0; i < cached.nodes.size(); ++i) {
            q(0) = gauss->mean + std::sqrt(2.0) * gauss->stddev * cached.nodes(i);
            acc += cached.weights(i) * h(q);
        }
        return acc / std::sqrt(M_PI);
    }
    const auto& sampled = std::get<SampledJumpLaw>(jump.size_law);
    PathRng rng(opt.jump_mc_seed);
    double acc = 0.0;
    for (std::size_t i = 0; i < opt.jump_mc_draws; ++i)
        acc += h(sampled.sampler(t, x, rng));
    return acc / static_cast<double>(opt.jump_mc_draws);
}

double time_derivative(const TestFunction& phi, double t, const Vec& x,
                       const FdOptions& opt) {
    if (phi.time_deriv) return phi.time_deriv(t, x);
    const double h = opt.fd_step > 0.0 ? opt.fd_step : 1e-4 * (1.0 + std::abs(t));
    double d;
    if (t - h < 0.0) {
        // second-order forward stencil keeps evaluation inside [0, T]
        const double f0 = phi(t, x), f1 = phi(t + h, x), f2 = phi(t + 2 * h, x);
        d = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
        if (!std::isfinite(d)) stencil_failure("time derivative", t, x, {f0, f1, f2});
    } else {
        const double fm = phi(t - h, x), fp = phi(t + h, x);
        d = (fp - fm) / (2.0 * h);
        if (!std::isfinite(d)) stencil_failure("time derivative", t, x, {fm, fp});
    }
    return d;
}

Vec space_gradient(const TestFunction& phi, double t, const Vec& x,
                   const FdOptions& opt) {
    if (phi.gradient) return phi.gradient(t, x);
    const double h = opt.step_for(x);
    Vec g(x.size());
    Vec xp = x, xm = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp(i) = x(i) + h;
        xm(i) = x(i) - h;
        const double fp = phi(t, xp), fm = phi(t, xm);
        g(i) = (fp - fm) / (2.0 * h);
        if (!std::isfinite(g(i))) stencil_failure("gradient", t, x, {fm, fp});
        xp(i) = x(i);
        xm(i) = x(i);
    }
    return g;
}

Mat space_hessian(const TestFunction& phi, double t, const Vec& x,
                  const FdOptions& opt) {
    if (phi.hessian) return phi.hessian(t, x);
    const double h = opt.step_for(x);
    const Eigen::Index d = x.size();
    Mat hess(d, d);
    const double f00 = phi(t, x);
    Vec y = x;
    for (Eigen::Index i = 0; i < d; ++i) {
        y(i) = x(i) + h;
        const double fp = phi(t, y);
        y(i) = x(i) - h;
        const double fm = phi(t, y);
        y(i) = x(i);
        hess(i, i) = (fp - 2.0 * f00 + fm) / (h * h);
        if (!std::isfinite(hess(i, i)))
            stencil_failure("hessian diagonal", t, x, {fm, f00, fp});
    }
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) {
            y(i) = x(i) + h; y(j) = x(j) + h;
            const double fpp = phi(t, y);
            y(j) = x(j) - h;
            const double fpm = phi(t, y);
            y(i) = x(i) - h; y(j) = x(j) + h;
            const double fmp = phi(t, y);
            y(j) = x(j) - h;
            const double fmm = phi(t, y);
            y(i) = x(i); y(j) = x(j);
            hess(i, j) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            if (!std::isfinite(hess(i, j)))
                stencil_failure("hessian cross", t, x, {fpp, fpm, fmp, fmm});
            hess(j, i) = hess(i, j);
        }
    }
    return hess;
}

double eval_generator(const ModelSpec& model, const TestFunction& phi, double t,
                      const Vec& x, const FdOptions& opt) {
    const double dphi_dt = time_derivative(phi, t, x, opt);
    const Vec grad = space_gradient(phi, t, x, opt);
    const Vec b = model.drift(t, x);
    const Mat sigma = model.diffusion(t, x);
    const Mat a = sigma * sigma.transpose();

    double acc = dphi_dt + grad.dot(b);
    if (a.cwiseAbs().maxCoeff() > 0.0) {
        const Mat hess = space_hessian(phi, t, x, opt);
        acc += 0.5 * (a.array() * hess.array()).sum();
    }

    if (model.has_jumps()) {
        const double lambda = model.jump->intensity(t, x);
        if (lambda > 0.0) {
            const double base = phi(t, x);
            acc += lambda * jump_size_expectation(
                                *model.jump, t, x,
                                [&](const Vec& q) { return phi(t, x + q) - base; },
                                opt);
        }
    }

    if (!std::isfinite(acc))
        throw NumericalError("eval_generator: non-finite result");
    return acc;
}

}  // namespace exptwist
