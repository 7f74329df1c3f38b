#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "df2/netspec.hpp"
#include "df2/spike_tensor.hpp"

namespace df2 {

struct ImagesIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Loads uint8 images from a .npy file shaped (H, W, C) or (N, H, W, C),
// C-contiguous, or from a raw byte file holding whole frames back to back.
std::vector<ImageU8> load_images(const std::string& path, const InputShape& shape);

std::vector<ImageU8> load_images_npy(const std::string& path, const InputShape& shape);
std::vector<ImageU8> load_images_raw(const std::string& path, const InputShape& shape);

// Deterministic pseudo-random images for seeded runs.
std::vector<ImageU8> random_images(std::uint64_t seed, const InputShape& shape,
                                   int count);

}  // namespace df2
