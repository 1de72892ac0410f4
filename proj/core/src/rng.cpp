#include "mfm/rng.hpp"

#include <stdexcept>

namespace mfm {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

} // namespace

Philox4x32::Counter Philox4x32::block(Counter c, Key k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

Philox4x32::Philox4x32(const RngSpec& spec)
    : key_{static_cast<std::uint32_t>(spec.master_seed),
           static_cast<std::uint32_t>(spec.master_seed >> 32)},
      counter_{0u, spec.substream, static_cast<std::uint32_t>(spec.stream_id),
               static_cast<std::uint32_t>(spec.stream_id >> 32)} {}

Philox4x32::result_type Philox4x32::operator()() {
    if (used_ == 4) {
        buffer_ = block(counter_, key_);
        if (++counter_[0] == 0) {
            throw std::overflow_error("Philox4x32: stream exhausted");
        }
        used_ = 0;
    }
    return buffer_[used_++];
}

} // namespace mfm
