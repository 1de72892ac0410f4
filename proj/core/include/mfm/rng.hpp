#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mfm {

/// Identifies one random stream. Distinct (master_seed, stream_id, substream)
/// triples address disjoint regions of the Philox counter space, so streams
/// never overlap and can be generated in any order or on any thread.
struct RngSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;
    std::uint32_t substream = 0;

    RngSpec with_substream(std::uint32_t sub) const { return {master_seed, stream_id, sub}; }

    friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Key: the 64-bit master seed. Counter words 2..3 hold the stream id, word 1
/// the substream, word 0 the block index, giving 2^32 blocks (2^34 outputs)
/// per stream. Satisfies UniformRandomBitGenerator.
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox4x32(const RngSpec& spec);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Raw 10-round block function; exposed for known-answer tests.
    static Counter block(Counter counter, Key key);

private:
    Key key_{};
    Counter counter_{};
    Counter buffer_{};
    unsigned used_ = 4;
};

} // namespace mfm
