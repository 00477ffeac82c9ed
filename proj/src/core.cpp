#include "tactile/core.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>

namespace tactile {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Sample make_sample(std::int64_t id, Shape shape, std::vector<double> data) {
  if (shape.height <= 0 || shape.width <= 0 || shape.channels <= 0) {
    throw std::invalid_argument("sample shape must be positive in every dimension");
  }
  if (data.size() != static_cast<std::size_t>(shape.size())) {
    throw std::invalid_argument(
        "sample data length " + std::to_string(data.size()) +
        " does not match shape size " + std::to_string(shape.size()));
  }
  for (double v : data) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw std::invalid_argument("sample values must be finite and in [0, 1]");
    }
  }
  return Sample{id, shape, std::move(data)};
}

void Dataset::validate() const {
  if (items.empty()) throw std::invalid_argument("dataset is empty");
  if (class_count < 2) throw std::invalid_argument("dataset needs at least 2 classes");
  for (const LabeledSample& it : items) {
    if (!(it.sample.shape == shape)) {
      throw std::invalid_argument("dataset contains mixed sample shapes");
    }
    if (it.label < 0 || it.label >= class_count) {
      throw std::invalid_argument("dataset label " + std::to_string(it.label) +
                                  " outside [0, " + std::to_string(class_count) + ")");
    }
  }
}

DataStream::DataStream(std::vector<LabeledSample> source)
    : source_(std::move(source)) {}

std::optional<Sample> DataStream::next() {
  if (cursor_ >= source_.size()) return std::nullopt;
  return source_[cursor_++].sample;
}

CandidateBatch::CandidateBatch(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("batch capacity must be positive");
}

const Sample& CandidateBatch::sample(std::size_t i) const {
  if (i >= samples_.size()) throw std::out_of_range("batch sample index out of range");
  return samples_[i];
}

const std::vector<double>& CandidateBatch::feature(std::size_t i) const {
  if (i >= features_.size()) throw std::out_of_range("batch feature index out of range");
  return features_[i];
}

double CandidateBatch::info(std::size_t i) const {
  if (i >= info_values_.size()) throw std::out_of_range("batch info index out of range");
  return info_values_[i];
}

void CandidateBatch::insert(Sample x, std::optional<std::vector<double>> feature,
                            std::optional<double> info) {
  if (full()) throw std::invalid_argument("insert into full batch");
  if (!samples_.empty()) {
    if (feature.has_value() != has_features()) {
      throw std::invalid_argument("feature channel must be all-or-none across members");
    }
    if (info.has_value() != has_info()) {
      throw std::invalid_argument("info channel must be all-or-none across members");
    }
  }
  samples_.push_back(std::move(x));
  if (feature) features_.push_back(std::move(*feature));
  if (info) info_values_.push_back(*info);
}

void CandidateBatch::swap(std::size_t i, Sample x,
                          std::optional<std::vector<double>> feature,
                          std::optional<double> info) {
  if (i >= samples_.size()) throw std::out_of_range("swap index out of range");
  if (feature.has_value() != has_features()) {
    throw std::invalid_argument("feature channel must be all-or-none across members");
  }
  if (info.has_value() != has_info()) {
    throw std::invalid_argument("info channel must be all-or-none across members");
  }
  samples_[i] = std::move(x);
  if (feature) features_[i] = std::move(*feature);
  if (info) info_values_[i] = *info;
}

void CandidateBatch::clear() {
  samples_.clear();
  features_.clear();
  info_values_.clear();
}

}  // namespace tactile
