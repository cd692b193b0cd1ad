#pragma once

#include <array>
#include <cstdint>

namespace lgp {

/// Philox4x32-10 block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// Counter-based random stream.
///
/// Output is a pure function of (master_seed, stream_id, substream, draw
/// index): the 128-bit Philox counter holds the block index, the substream and
/// the 64-bit stream id, and the key is the master seed. A stream is owned by
/// one thread; parallel work gets disjoint stream ids or substreams.
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id, std::uint32_t substream = 0);

    std::uint64_t master_seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }
    std::uint32_t substream_id() const { return sub_; }

    /// Fresh stream sharing seed and stream id, at a different substream.
    RngStream substream(std::uint32_t sub) const { return RngStream(seed_, stream_, sub); }

    std::uint32_t next_u32();
    /// Uniform on the open interval (0,1) with 53 random bits.
    double uniform();
    /// Standard normal (Box-Muller, second variate cached).
    double normal();

  private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint32_t sub_;
    std::uint32_t block_ = 0;
    PhiloxCounter buf_{};
    int pos_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace lgp
