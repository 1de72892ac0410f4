#include "mfm/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <iostream>
#include <random>

#include "mfm/error.hpp"

namespace mfm {

std::optional<std::size_t> TimeGrid::index_of(double t) const noexcept {
    const double steps = (t - t_start) / dt;
    const double k = std::round(steps);
    if (k < 0.0 || k > static_cast<double>(n_steps) || std::abs(steps - k) > 1e-9) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(k);
}

TimeGrid make_grid(double t_start, double t_end, double dt) {
    if (!std::isfinite(dt) || dt <= 0.0) {
        throw ConfigError("step size must be positive", "grid.dt");
    }
    if (!std::isfinite(t_start) || !std::isfinite(t_end) || t_end <= t_start) {
        throw ConfigError("t_end must exceed t_start", "grid.t_end");
    }
    const double ratio = (t_end - t_start) / dt;
    const double steps = std::round(ratio);
    if (steps < 1.0) {
        throw ConfigError("interval shorter than half a step", "grid.dt");
    }
    // 0.5 ulp of the ratio, with a little slack for the division itself
    if (std::abs(ratio - steps) > 4.0 * std::numeric_limits<double>::epsilon() * steps) {
        std::cerr << "warning: (t_end - t_start)/dt = " << ratio << " rounded to " << steps
                  << " steps\n";
    }
    return TimeGrid{t_start, t_end, dt, static_cast<std::size_t>(steps)};
}

PathSeries::PathSeries(TimeGrid grid, std::vector<std::string> labels)
    : grid_(grid), labels_(std::move(labels)), values_(labels_.size() * grid_.points(), 0.0) {}

PathSeries::PathSeries(TimeGrid grid, std::vector<std::string> labels, std::vector<double> values)
    : grid_(grid), labels_(std::move(labels)), values_(std::move(values)) {
    if (values_.size() != labels_.size() * grid_.points()) {
        throw ShapeError("PathSeries: value count does not match channels x grid points");
    }
}

std::span<const double> PathSeries::channel(std::size_t c) const {
    if (c >= channels()) throw ShapeError("PathSeries: channel index out of range");
    return {values_.data() + c * points(), points()};
}

std::span<double> PathSeries::channel(std::size_t c) {
    if (c >= channels()) throw ShapeError("PathSeries: channel index out of range");
    return {values_.data() + c * points(), points()};
}

std::vector<double> PathSeries::column(std::size_t k) const {
    std::vector<double> out(channels());
    for (std::size_t c = 0; c < channels(); ++c) out[c] = at(c, k);
    return out;
}

void PathSeries::set_column(std::size_t k, std::span<const double> v) {
    if (v.size() != channels()) throw ShapeError("PathSeries: column width mismatch");
    for (std::size_t c = 0; c < channels(); ++c) at(c, k) = v[c];
}

PathSeries PathSeries::select(std::size_t c) const {
    const auto src = channel(c);
    return PathSeries(grid_, {labels_[c]}, std::vector<double>(src.begin(), src.end()));
}

BrownianPath::BrownianPath(TimeGrid grid, std::size_t dims, std::vector<double> increments)
    : grid_(grid), dims_(dims), increments_(std::move(increments)) {
    if (increments_.size() != dims_ * grid_.n_steps) {
        throw ShapeError("BrownianPath: increment count does not match dims x steps");
    }
}

std::span<const double> BrownianPath::dimension(std::size_t dim) const {
    if (dim >= dims_) throw ShapeError("BrownianPath: dimension out of range");
    return {increments_.data() + dim * grid_.n_steps, grid_.n_steps};
}

BrownianPath BrownianPath::coarsen(std::size_t factor) const {
    if (factor == 0 || grid_.n_steps % factor != 0) {
        throw ShapeError("BrownianPath::coarsen: factor must divide the step count");
    }
    TimeGrid coarse{grid_.t_start, grid_.t_end, grid_.dt * static_cast<double>(factor),
                    grid_.n_steps / factor};
    std::vector<double> out(dims_ * coarse.n_steps, 0.0);
    for (std::size_t d = 0; d < dims_; ++d) {
        for (std::size_t k = 0; k < coarse.n_steps; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < factor; ++j) acc += increment(d, k * factor + j);
            out[d * coarse.n_steps + k] = acc;
        }
    }
    return BrownianPath(coarse, dims_, std::move(out));
}

PathSeries BrownianPath::levels(std::size_t dim) const {
    PathSeries out(grid_, {"B" + std::to_string(dim)});
    auto level = out.channel(0);
    const auto inc = dimension(dim);
    KahanSum acc;
    for (std::size_t k = 0; k < grid_.n_steps; ++k) {
        acc.add(inc[k]);
        level[k + 1] = acc.value();
    }
    return out;
}

BrownianPath sample_brownian(const TimeGrid& grid, std::size_t dims, const RngSpec& rng) {
    if (dims == 0) throw ConfigError("Brownian driver needs at least one dimension", "dims");
    Philox4x32 engine(rng);
    std::normal_distribution<double> normal(0.0, std::sqrt(grid.dt));
    std::vector<double> increments(dims * grid.n_steps);
    for (auto& x : increments) x = normal(engine);
    return BrownianPath(grid, dims, std::move(increments));
}

PathSeries realized_covariation(const PathSeries& a, std::size_t channel_a,
                                const PathSeries& b, std::size_t channel_b) {
    if (!(a.grid() == b.grid())) {
        throw ShapeError("realized_covariation: series are on different grids");
    }
    const auto x = a.channel(channel_a);
    const auto y = b.channel(channel_b);
    PathSeries out(a.grid(), {"[" + a.labels()[channel_a] + "," + b.labels()[channel_b] + "]"});
    auto cov = out.channel(0);
    KahanSum acc;
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        const double term = (x[k + 1] - x[k]) * (y[k + 1] - y[k]);
        acc.add(term);
        // compensation may pull the total one ulp below its predecessor
        cov[k + 1] = term >= 0.0 ? std::max(acc.value(), cov[k]) : acc.value();
    }
    return out;
}

} // namespace mfm
