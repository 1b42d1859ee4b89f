#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace exptwist {

// Uniform time grid on [0, T] with n_steps intervals.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t n_steps)
        : horizon_(horizon), n_steps_(n_steps) {
        if (horizon <= 0.0)
            throw std::invalid_argument("TimeGrid: horizon must be > 0");
        if (n_steps < 1)
            throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
    }

    double horizon() const { return horizon_; }
    std::size_t n_steps() const { return n_steps_; }
    double dt() const { return horizon_ / static_cast<double>(n_steps_); }

    // time(n_steps) returns the horizon exactly, not n_steps*dt.
    double time(std::size_t k) const {
        return k == n_steps_ ? horizon_
                             : static_cast<double>(k) * dt();
    }

    std::vector<double> times() const {
        std::vector<double> ts(n_steps_ + 1);
        for (std::size_t k = 0; k <= n_steps_; ++k) ts[k] = time(k);
        return ts;
    }

private:
    double horizon_;
    std::size_t n_steps_;
};

}  // namespace exptwist
