#include "mfm/simplex.hpp"

#include <algorithm>
#include <cmath>

#include "mfm/error.hpp"
#include "mfm/paths.hpp"

namespace mfm {

std::vector<double> project_to_simplex(std::span<const double> v, double floor,
                                       double identity_tolerance) {
    const std::size_t n = v.size();
    if (n == 0) throw InvalidStrategy("empty weight vector");
    if (!(floor >= 0.0) || static_cast<double>(n) * floor >= 1.0) {
        throw ConfigError("simplex floor too large for the number of components");
    }
    bool any_positive = false;
    bool above_floor = true;
    KahanSum total;
    for (double x : v) {
        if (!std::isfinite(x)) throw InvalidStrategy("weight vector has a non-finite component");
        any_positive = any_positive || x > 0.0;
        above_floor = above_floor && x >= floor;
        total.add(x);
    }
    if (!any_positive) throw InvalidStrategy("weight vector has no positive component");
    if (above_floor && std::abs(total.value() - 1.0) <= identity_tolerance) {
        return {v.begin(), v.end()};
    }

    std::vector<double> x(v.begin(), v.end());
    std::vector<bool> pinned(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] <= floor) {
            x[i] = floor;
            pinned[i] = true;
        }
    }
    for (;;) {
        std::size_t pinned_count = 0;
        KahanSum free_sum;
        for (std::size_t i = 0; i < n; ++i) {
            if (pinned[i]) ++pinned_count;
            else free_sum.add(x[i]);
        }
        const double target = 1.0 - floor * static_cast<double>(pinned_count);
        const double scale = target / free_sum.value();
        bool repinned = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!pinned[i] && x[i] * scale < floor) {
                x[i] = floor;
                pinned[i] = true;
                repinned = true;
            }
        }
        if (repinned) continue;
        for (std::size_t i = 0; i < n; ++i) {
            if (!pinned[i]) x[i] *= scale;
        }
        break;
    }

    std::size_t largest = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (x[i] > x[largest]) largest = i;
    }
    KahanSum others;
    for (std::size_t i = 0; i < n; ++i) {
        if (i != largest) others.add(x[i]);
    }
    x[largest] = 1.0 - others.value();
    return x;
}

} // namespace mfm
