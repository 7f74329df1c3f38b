#pragma once

#include <cstdint>
#include <vector>

namespace df2 {

// Packed binary feature map. Byte (r, c, g) carries channels [8g, 8g+8);
// bit l is channel 8g+l. Padding bits of the last group stay zero.
struct SpikeTensor {
    int rows = 0, cols = 0, channels = 0;
    int groups = 0;  // ceil(channels / 8)
    std::vector<std::uint8_t> bytes;  // [(r*cols + c)*groups + g]

    static SpikeTensor zeros(int rows, int cols, int channels) {
        SpikeTensor t;
        t.rows = rows;
        t.cols = cols;
        t.channels = channels;
        t.groups = (channels + 7) / 8;
        t.bytes.assign(static_cast<std::size_t>(rows) * cols * t.groups, 0);
        return t;
    }

    std::size_t byte_index(int r, int c, int g) const {
        return (static_cast<std::size_t>(r) * cols + c) * groups + g;
    }
    std::uint8_t byte_at(int r, int c, int g) const {
        return bytes[byte_index(r, c, g)];
    }
    bool get(int r, int c, int ch) const {
        return (bytes[byte_index(r, c, ch / 8)] >> (ch % 8)) & 1u;
    }
    void set(int r, int c, int ch, bool v) {
        std::uint8_t& b = bytes[byte_index(r, c, ch / 8)];
        std::uint8_t mask = static_cast<std::uint8_t>(1u << (ch % 8));
        b = v ? (b | mask) : (b & static_cast<std::uint8_t>(~mask));
    }
    bool operator==(const SpikeTensor& o) const = default;
};

// Dense 8-bit pixel image, row-major with channels innermost.
struct ImageU8 {
    int rows = 0, cols = 0, channels = 0;
    std::vector<std::uint8_t> data;  // [(r*cols + c)*channels + ch]

    std::uint8_t at(int r, int c, int ch) const {
        return data[(static_cast<std::size_t>(r) * cols + c) * channels + ch];
    }
};

}  // namespace df2
