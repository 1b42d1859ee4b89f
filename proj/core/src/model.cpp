#include "exptwist/model.hpp"

#include <cmath>
#include <sstream>

namespace exptwist {

namespace {

bool finite(const Vec& v) { return v.allFinite(); }
bool finite(const Mat& m) { return m.allFinite(); }

}  // namespace

std::string ValidationReport::to_string() const {
    std::ostringstream out;
    if (valid()) {
        out << "model valid";
        return out.str();
    }
    for (const auto& e : violations) {
        out << e.what << " at (t=" << e.t << ", x=[" << e.x.transpose() << "])\n";
    }
    return out.str();
}

ValidationReport validate_model(const ModelSpec& model, const CostSpec& cost,
                                const TimeGrid& grid,
                                const std::vector<std::pair<double, Vec>>& probes) {
    ValidationReport report;
    auto flag = [&](const std::string& what, double t, const Vec& x) {
        report.violations.push_back({what, t, x});
    };

    if (probes.empty()) {
        flag("no probe points supplied", 0.0, Vec::Zero(model.dim));
        return report;
    }

    for (const auto& [t, x] : probes) {
        if (t < 0.0 || t > grid.horizon()) {
            flag("probe time outside [0, T]", t, x);
            continue;
        }
        if (x.size() != model.dim) {
            flag("probe dimension mismatch", t, x);
            continue;
        }

        try {
            const Vec b = model.drift(t, x);
            if (b.size() != model.dim || !finite(b)) flag("drift non-finite", t, x);
        } catch (const std::exception& e) {
            flag(std::string("drift evaluator failed: ") + e.what(), t, x);
        }

        try {
            const Mat sigma = model.diffusion(t, x);
            if (sigma.rows() != model.dim || sigma.cols() != model.dim || !finite(sigma)) {
                flag("diffusion non-finite or wrong shape", t, x);
            } else {
                const Mat a = sigma * sigma.transpose();
                Eigen::SelfAdjointEigenSolver<Mat> es(a);
                if (es.info() != Eigen::Success ||
                    es.eigenvalues().minCoeff() < -1e-10 * (1.0 + a.norm()))
                    flag("sigma*sigma^T not positive semidefinite", t, x);
            }
        } catch (const std::exception& e) {
            flag(std::string("diffusion evaluator failed: ") + e.what(), t, x);
        }

        try {
            const double f = cost.f(t, x);
            if (!std::isfinite(f)) flag("running cost non-finite", t, x);
            else if (f < 0.0) flag("running cost f < 0", t, x);
        } catch (const std::exception& e) {
            flag(std::string("running cost evaluator failed: ") + e.what(), t, x);
        }

        try {
            const double g = cost.g(x);
            if (!std::isfinite(g)) flag("terminal cost non-finite", t, x);
            else if (g < 0.0) flag("g < 0", t, x);
        } catch (const std::exception& e) {
            flag(std::string("terminal cost evaluator failed: ") + e.what(), t, x);
        }

        if (model.has_jumps()) {
            const auto& jump = *model.jump;
            try {
                const double lambda = jump.intensity(t, x);
                if (!std::isfinite(lambda)) flag("intensity non-finite", t, x);
                else if (lambda < 0.0) flag("intensity negative", t, x);
            } catch (const std::exception& e) {
                flag(std::string("intensity evaluator failed: ") + e.what(), t, x);
            }
            if (!jump.finite_activity) flag("kernel not finite-activity", t, x);
            if (const auto* discrete = std::get_if<DiscreteJumpLaw>(&jump.size_law)) {
                double total = 0.0;
                for (const auto& [q, p] : discrete->atoms) {
                    total += p;
                    if (p < 0.0) flag("jump size law has negative mass", t, x);
                    if (q.norm() == 0.0) flag("jump size law has an atom at 0", t, x);
                }
                if (std::abs(total - 1.0) > 1e-12)
                    flag("jump size law does not integrate to 1", t, x);
            }
            if (const auto* gauss = std::get_if<GaussianJumpLaw>(&jump.size_law)) {
                if (!(gauss->stddev > 0.0) && gauss->mean == 0.0)
                    flag("jump size law has an atom at 0", t, x);
                if (model.dim != 1)
                    flag("Gaussian jump size law requires dim = 1", t, x);
            }
        }
    }
    return report;
}

}  // namespace exptwist
