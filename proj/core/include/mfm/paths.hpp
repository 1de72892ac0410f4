#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfm/rng.hpp"

namespace mfm {

/// Uniform time grid t_k = t_start + k*dt, k = 0..n_steps.
struct TimeGrid {
    double t_start = 0.0;
    double t_end = 1.0;
    double dt = 1.0;
    std::size_t n_steps = 1;

    std::size_t points() const noexcept { return n_steps + 1; }
    double time(std::size_t k) const noexcept { return t_start + static_cast<double>(k) * dt; }

    /// Grid index whose time matches `t` to within 1e-9*dt, if any.
    std::optional<std::size_t> index_of(double t) const noexcept;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Builds a grid. When (t_end - t_start)/dt is not integral the step count
/// is rounded and a warning is written to stderr.
TimeGrid make_grid(double t_start, double t_end, double dt);

/// Compensated summation accumulator.
class KahanSum {
public:
    void add(double x) noexcept {
        const double y = x - compensation_;
        const double t = sum_ + y;
        compensation_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const noexcept { return sum_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

/// Multi-channel series sampled at every grid point. Storage is
/// channel-major: values()[c * points + k].
class PathSeries {
public:
    PathSeries() = default;
    PathSeries(TimeGrid grid, std::vector<std::string> labels);
    PathSeries(TimeGrid grid, std::vector<std::string> labels, std::vector<double> values);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t channels() const noexcept { return labels_.size(); }
    std::size_t points() const noexcept { return grid_.points(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    std::span<const double> channel(std::size_t c) const;
    std::span<double> channel(std::size_t c);
    double at(std::size_t c, std::size_t k) const { return values_[c * points() + k]; }
    double& at(std::size_t c, std::size_t k) { return values_[c * points() + k]; }

    /// All channels at grid point k.
    std::vector<double> column(std::size_t k) const;
    void set_column(std::size_t k, std::span<const double> v);

    const std::vector<double>& values() const noexcept { return values_; }

    /// Single-channel series holding channel `c`.
    PathSeries select(std::size_t c) const;

private:
    TimeGrid grid_{};
    std::vector<std::string> labels_;
    std::vector<double> values_;
};

/// Standard Brownian increments. increments are dims x n_steps, each
/// N(0, dt); levels are not stored.
class BrownianPath {
public:
    BrownianPath(TimeGrid grid, std::size_t dims, std::vector<double> increments);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t dims() const noexcept { return dims_; }
    double increment(std::size_t dim, std::size_t step) const {
        return increments_[dim * grid_.n_steps + step];
    }
    std::span<const double> dimension(std::size_t dim) const;

    /// Driver on a grid `factor` times coarser, built by summing consecutive
    /// increments. Used for coupled dt-refinement studies.
    BrownianPath coarsen(std::size_t factor) const;

    /// Levels B_{t_k} of one dimension as a single-channel series.
    PathSeries levels(std::size_t dim) const;

private:
    TimeGrid grid_;
    std::size_t dims_;
    std::vector<double> increments_;
};

BrownianPath sample_brownian(const TimeGrid& grid, std::size_t dims, const RngSpec& rng);

/// Running sum of Δa·Δb over the grid, starting at 0. Throws ShapeError when
/// the two series live on different grids.
PathSeries realized_covariation(const PathSeries& a, std::size_t channel_a,
                                const PathSeries& b, std::size_t channel_b);

} // namespace mfm
