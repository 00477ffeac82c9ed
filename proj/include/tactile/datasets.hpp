#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tactile/core.hpp"

namespace tactile {

// IDX image + label file pair (big-endian headers, magics 0x00000803 and
// 0x00000801). Pixels map to [0, 1] as byte / 255. Throws std::runtime_error
// with distinct messages for bad magic, truncation, and count mismatch.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// CIFAR-10 binary batches: 3073-byte records, label byte then 3072 pixels in
// planar R, G, B order; stored here interleaved (h, w, c). File length must
// be a multiple of 3073 and labels must be < 10.
Dataset load_cifar10(const std::vector<std::string>& batch_paths);

struct SyntheticSpec {
  int classes = 10;
  int height = 16;
  int width = 16;
  int channels = 1;
  int train_items = 4000;
  int test_items = 1000;
  double noise = 0.18;    // additive uniform pixel noise amplitude
  double jitter = 2.5;    // per-item displacement of class bump centers
  std::uint64_t seed = 9;
};

// Seeded class-conditional bump images: each class owns a fixed set of
// Gaussian bump centers; items jitter those centers and add pixel noise.
// Returns {train, test} drawn from one generator, so the split is stable
// under the seed.
std::pair<Dataset, Dataset> make_synthetic(const SyntheticSpec& spec);

}  // namespace tactile
