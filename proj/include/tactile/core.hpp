#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tactile {

// Derives an independent sub-seed from (seed, salt) via splitmix64 so that
// distinct components (stream shuffle, model init, strategy draws, ...) never
// share a generator state.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Round-trip exact decimal form (%.17g) used everywhere doubles are
// serialized, so equal runs emit byte-identical files.
std::string fmt_double(double v);

// Fisher-Yates with explicit modulo draws. std::shuffle is free to consume
// the generator differently between standard library versions; seeded replay
// tests need one fixed protocol.
template <class T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

struct Shape {
  int height = 0;
  int width = 0;
  int channels = 0;

  int size() const { return height * width * channels; }
  bool operator==(const Shape&) const = default;
};

// One stream instance: row-major (height, width, channels), values in [0, 1].
struct Sample {
  std::int64_t id = 0;
  Shape shape;
  std::vector<double> data;
};

// Validates shape/data agreement and the [0, 1] range.
Sample make_sample(std::int64_t id, Shape shape, std::vector<double> data);

struct LabeledSample {
  Sample sample;
  int label = 0;
};

struct Dataset {
  std::vector<LabeledSample> items;
  int class_count = 0;
  Shape shape;

  std::size_t size() const { return items.size(); }
  // Throws std::invalid_argument unless non-empty, uniformly shaped, and all
  // labels are in [0, class_count).
  void validate() const;
};

// Forward-only view over an ordered acquisition sequence. Labels never leave
// this class; selection code sees Samples only.
class DataStream {
 public:
  explicit DataStream(std::vector<LabeledSample> source);

  // Next sample in order, or nullopt once exhausted. No rewind.
  std::optional<Sample> next();

  std::size_t cursor() const { return cursor_; }
  std::size_t size() const { return source_.size(); }

 private:
  std::vector<LabeledSample> source_;
  std::size_t cursor_ = 0;
};

// Bounded working set of selected samples awaiting labels. Optionally carries
// per-member feature vectors and cached informativeness scores; once either
// side channel is used it must be supplied for every member so the columns
// stay aligned with samples.
class CandidateBatch {
 public:
  explicit CandidateBatch(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  bool full() const { return samples_.size() == capacity_; }

  const Sample& sample(std::size_t i) const;
  const std::vector<double>& feature(std::size_t i) const;
  double info(std::size_t i) const;

  const std::vector<Sample>& samples() const { return samples_; }
  const std::vector<std::vector<double>>& features() const { return features_; }
  const std::vector<double>& info_values() const { return info_values_; }

  bool has_features() const { return !features_.empty(); }
  bool has_info() const { return !info_values_.empty(); }

  // Appends; throws std::invalid_argument when full or when the side channels
  // would go out of alignment.
  void insert(Sample x, std::optional<std::vector<double>> feature = {},
              std::optional<double> info = {});

  // Replaces member i, keeping size constant. Out-of-range throws
  // std::out_of_range.
  void swap(std::size_t i, Sample x,
            std::optional<std::vector<double>> feature = {},
            std::optional<double> info = {});

  void clear();

 private:
  std::size_t capacity_;
  std::vector<Sample> samples_;
  std::vector<std::vector<double>> features_;
  std::vector<double> info_values_;
};

}  // namespace tactile
