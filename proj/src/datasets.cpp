#include "tactile/datasets.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

namespace tactile {

namespace {

std::uint32_t read_u32_be(std::istream& is, const std::string& path) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("IDX file truncated: " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream imgs(images_path, std::ios::binary);
  if (!imgs) throw std::runtime_error("cannot open IDX image file: " + images_path);
  std::uint32_t magic = read_u32_be(imgs, images_path);
  if (magic != 0x00000803u) {
    throw std::runtime_error("bad IDX image magic in " + images_path + ": got " +
                             hex32(magic) + ", expected 0x00000803");
  }
  const std::uint32_t count = read_u32_be(imgs, images_path);
  const std::uint32_t rows = read_u32_be(imgs, images_path);
  const std::uint32_t cols = read_u32_be(imgs, images_path);
  if (count == 0 || rows == 0 || cols == 0) {
    throw std::runtime_error("IDX image header has a zero dimension: " + images_path);
  }

  std::ifstream labs(labels_path, std::ios::binary);
  if (!labs) throw std::runtime_error("cannot open IDX label file: " + labels_path);
  magic = read_u32_be(labs, labels_path);
  if (magic != 0x00000801u) {
    throw std::runtime_error("bad IDX label magic in " + labels_path + ": got " +
                             hex32(magic) + ", expected 0x00000801");
  }
  const std::uint32_t label_count = read_u32_be(labs, labels_path);
  if (label_count != count) {
    throw std::runtime_error("IDX count mismatch: " + std::to_string(count) +
                             " images vs " + std::to_string(label_count) + " labels");
  }

  Dataset out;
  out.shape = {static_cast<int>(rows), static_cast<int>(cols), 1};
  out.items.reserve(count);
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> buf(pixels);
  int max_label = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    imgs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    if (!imgs) throw std::runtime_error("IDX file truncated: " + images_path);
    char lab = 0;
    labs.read(&lab, 1);
    if (!labs) throw std::runtime_error("IDX file truncated: " + labels_path);
    std::vector<double> data(pixels);
    for (std::size_t pidx = 0; pidx < pixels; ++pidx) {
      data[pidx] = static_cast<double>(buf[pidx]) / 255.0;
    }
    int label = static_cast<unsigned char>(lab);
    max_label = std::max(max_label, label);
    out.items.push_back({Sample{static_cast<std::int64_t>(i), out.shape, std::move(data)},
                         label});
  }
  out.class_count = max_label + 1;
  out.validate();
  return out;
}

Dataset load_cifar10(const std::vector<std::string>& batch_paths) {
  if (batch_paths.empty()) {
    throw std::invalid_argument("CIFAR loader needs at least one batch file");
  }
  constexpr std::size_t kRecord = 3073;
  constexpr std::size_t kPlane = 1024;
  Dataset out;
  out.shape = {32, 32, 3};
  out.class_count = 10;
  std::int64_t next_id = 0;
  for (const std::string& path : batch_paths) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open CIFAR batch: " + path);
    is.seekg(0, std::ios::end);
    const auto len = static_cast<std::size_t>(is.tellg());
    is.seekg(0);
    if (len == 0 || len % kRecord != 0) {
      throw std::runtime_error("CIFAR batch length " + std::to_string(len) +
                               " is not a multiple of 3073: " + path);
    }
    std::vector<unsigned char> rec(kRecord);
    const std::size_t records = len / kRecord;
    for (std::size_t ridx = 0; ridx < records; ++ridx) {
      is.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(kRecord));
      if (!is) throw std::runtime_error("CIFAR batch truncated: " + path);
      int label = rec[0];
      if (label >= 10) {
        throw std::runtime_error("CIFAR label " + std::to_string(label) +
                                 " out of range in " + path);
      }
      std::vector<double> data(static_cast<std::size_t>(32) * 32 * 3);
      for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
          const std::size_t plane_idx = static_cast<std::size_t>(y) * 32 + x;
          for (int c = 0; c < 3; ++c) {
            data[(static_cast<std::size_t>(y) * 32 + x) * 3 + c] =
                static_cast<double>(rec[1 + c * kPlane + plane_idx]) / 255.0;
          }
        }
      }
      out.items.push_back({Sample{next_id++, out.shape, std::move(data)}, label});
    }
  }
  out.validate();
  return out;
}

namespace {

struct Bump {
  double cy, cx, amp, sigma;
};

std::vector<double> render_item(const std::vector<Bump>& bumps, const SyntheticSpec& spec,
                                std::mt19937_64& rng) {
  const int h = spec.height, w = spec.width, ch = spec.channels;
  std::vector<double> data(static_cast<std::size_t>(h) * w * ch, 0.0);
  for (const Bump& bump : bumps) {
    double cy = bump.cy + spec.jitter * (2.0 * uniform01(rng) - 1.0);
    double cx = bump.cx + spec.jitter * (2.0 * uniform01(rng) - 1.0);
    double inv = 1.0 / (2.0 * bump.sigma * bump.sigma);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        double v = bump.amp * std::exp(-d2 * inv);
        for (int c = 0; c < ch; ++c) {
          data[(static_cast<std::size_t>(y) * w + x) * ch + c] += v;
        }
      }
    }
  }
  for (double& v : data) {
    v += spec.noise * (2.0 * uniform01(rng) - 1.0);
    v = std::min(1.0, std::max(0.0, v));
  }
  return data;
}

}  // namespace

std::pair<Dataset, Dataset> make_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw std::invalid_argument("synthetic needs >= 2 classes");
  if (spec.height < 4 || spec.width < 4 || spec.channels < 1) {
    throw std::invalid_argument("synthetic image shape too small");
  }
  if (spec.train_items < spec.classes || spec.test_items < spec.classes) {
    throw std::invalid_argument("synthetic needs at least one item per class per split");
  }
  if (!(spec.noise >= 0.0) || !(spec.jitter >= 0.0)) {
    throw std::invalid_argument("synthetic noise and jitter must be >= 0");
  }

  std::mt19937_64 rng(spec.seed);
  const Shape shape{spec.height, spec.width, spec.channels};
  std::vector<std::vector<Bump>> class_bumps(static_cast<std::size_t>(spec.classes));
  for (auto& bumps : class_bumps) {
    for (int b = 0; b < 3; ++b) {
      Bump bump;
      bump.cy = 2.0 + uniform01(rng) * (spec.height - 5);
      bump.cx = 2.0 + uniform01(rng) * (spec.width - 5);
      bump.amp = 0.7 + 0.3 * uniform01(rng);
      bump.sigma = 1.2 + 1.0 * uniform01(rng);
      bumps.push_back(bump);
    }
  }

  auto fill = [&](Dataset& ds, int items, std::int64_t id_base) {
    ds.shape = shape;
    ds.class_count = spec.classes;
    ds.items.reserve(static_cast<std::size_t>(items));
    for (int i = 0; i < items; ++i) {
      int label = i % spec.classes;
      ds.items.push_back(
          {Sample{id_base + i, shape,
                  render_item(class_bumps[static_cast<std::size_t>(label)], spec, rng)},
           label});
    }
  };

  std::pair<Dataset, Dataset> out;
  fill(out.first, spec.train_items, 0);
  fill(out.second, spec.test_items, spec.train_items);
  out.first.validate();
  out.second.validate();
  return out;
}

}  // namespace tactile
