#pragma once

#include <span>
#include <vector>

namespace mfm {

/// Lower bound kept on every simplex component (strategies and relative
/// dividend intensities) so that divisions by mu^n stay finite.
inline constexpr double kSimplexFloor = 1e-6;

/// Clamps components to >= floor and rescales the rest so the total is 1.
/// Components pushed under the floor by rescaling are pinned at the floor
/// and the remainder rescaled again, so every output component is >= floor.
/// The largest free component absorbs the final rounding so the sum is 1 to
/// within an ulp. Inputs already within `identity_tolerance` of the simplex
/// (and above the floor) are returned unchanged.
///
/// Throws InvalidStrategy if no component is positive or any is non-finite,
/// ConfigError if size()*floor >= 1.
std::vector<double> project_to_simplex(std::span<const double> v, double floor,
                                       double identity_tolerance);

} // namespace mfm
