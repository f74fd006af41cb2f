#pragma once

// Convolution shape metadata, weight/activation tensors, and a direct
// convolution used as ground truth for the mapping code.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "imclr/error.hpp"
#include "imclr/matrix.hpp"

namespace imclr {

struct ConvLayer {
  std::size_t c_in = 1;
  std::size_t c_out = 1;
  std::size_t kh = 1;
  std::size_t kw = 1;
  std::size_t ih = 1;
  std::size_t iw = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;

  std::size_t oh() const noexcept { return (ih + 2 * pad - kh) / stride + 1; }
  std::size_t ow() const noexcept { return (iw + 2 * pad - kw) / stride + 1; }
  /// Output channels: rows of the output-major weight matrix.
  std::size_t m() const noexcept { return c_out; }
  /// Flattened kernel length: columns of the output-major weight matrix.
  std::size_t n() const noexcept { return c_in * kh * kw; }

  void validate() const {
    if (c_in == 0 || c_out == 0 || kh == 0 || kw == 0 || ih == 0 || iw == 0 || stride == 0) {
      throw RangeError("conv layer: channels, kernel, feature map and stride must be positive");
    }
    if (kh > ih + 2 * pad || kw > iw + 2 * pad) {
      throw RangeError("conv layer: kernel " + Matrix::shape_string(kh, kw) +
                       " larger than padded input " +
                       Matrix::shape_string(ih + 2 * pad, iw + 2 * pad));
    }
  }

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

/// Rectangular parallel window (PW) of input pixels per channel.
struct ParallelWindow {
  std::size_t h = 1;
  std::size_t w = 1;

  static ParallelWindow kernel_of(const ConvLayer& layer) { return {layer.kh, layer.kw}; }

  friend bool operator==(const ParallelWindow&, const ParallelWindow&) = default;
};

/// A parallel window bound to a layer: how many outputs it yields per pass.
struct WindowGeometry {
  std::size_t po_h = 1;  // parallel outputs along height
  std::size_t po_w = 1;  // parallel outputs along width
  std::size_t b = 1;     // flattened PW input length, c_in*pw_h*pw_w

  std::size_t parallel_outputs() const noexcept { return po_h * po_w; }
};

inline WindowGeometry bind_window(const ConvLayer& layer, const ParallelWindow& pw) {
  if (pw.h < layer.kh || pw.w < layer.kw) {
    throw RangeError("parallel window " + Matrix::shape_string(pw.h, pw.w) +
                     " smaller than kernel " + Matrix::shape_string(layer.kh, layer.kw));
  }
  return {(pw.h - layer.kh) / layer.stride + 1, (pw.w - layer.kw) / layer.stride + 1,
          layer.c_in * pw.h * pw.w};
}

inline std::string to_string(const ParallelWindow& pw) { return Matrix::shape_string(pw.h, pw.w); }

/// Row-major tensor of arbitrary rank (used at rank 3 and 4).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(volume(shape_), fill) {}
  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != volume(shape_)) throw DimensionError("tensor data length mismatch");
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t a, std::size_t b, std::size_t c) noexcept {
    return data_[(a * shape_[1] + b) * shape_[2] + c];
  }
  double operator()(std::size_t a, std::size_t b, std::size_t c) const noexcept {
    return data_[(a * shape_[1] + b) * shape_[2] + c];
  }
  double& operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) noexcept {
    return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
  }
  double operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const noexcept {
    return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
  }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  std::string shape_string() const {
    std::string s;
    for (std::size_t i = 0; i < shape_.size(); ++i) s += (i ? "x" : "") + std::to_string(shape_[i]);
    return s;
  }

 private:
  static std::size_t volume(const std::vector<std::size_t>& shape) {
    std::size_t v = 1;
    for (auto d : shape) v *= d;
    return shape.empty() ? 0 : v;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

inline void check_weight_shape(const ConvLayer& layer, const Tensor& weights) {
  const std::vector<std::size_t> expected{layer.c_out, layer.c_in, layer.kh, layer.kw};
  if (weights.shape() != expected) {
    throw DimensionError("weight tensor " + weights.shape_string() + " does not match layer " +
                         std::to_string(layer.c_out) + "x" + std::to_string(layer.c_in) + "x" +
                         std::to_string(layer.kh) + "x" + std::to_string(layer.kw));
  }
}

/// Output-major weight matrix W (c_out x c_in*kh*kw); row o is kernel o
/// flattened channel-major, then kernel row, then kernel column.
inline Matrix weight_matrix(const ConvLayer& layer, const Tensor& weights) {
  check_weight_shape(layer, weights);
  return Matrix(layer.m(), layer.n(), weights.data());
}

inline Tensor weight_tensor(const ConvLayer& layer, const Matrix& w) {
  if (w.rows() != layer.m() || w.cols() != layer.n()) {
    throw DimensionError("weight matrix " + w.shape() + " does not match layer (expected " +
                         Matrix::shape_string(layer.m(), layer.n()) + ")");
  }
  return Tensor({layer.c_out, layer.c_in, layer.kh, layer.kw},
                std::vector<double>(w.data().begin(), w.data().end()));
}

/// Naive direct convolution with zero padding.
inline Tensor conv_oracle(const ConvLayer& layer, const Tensor& weights, const Tensor& input) {
  check_weight_shape(layer, weights);
  const std::vector<std::size_t> in_shape{layer.c_in, layer.ih, layer.iw};
  if (input.shape() != in_shape) {
    throw DimensionError("input tensor " + input.shape_string() + " does not match layer input " +
                         std::to_string(layer.c_in) + "x" + std::to_string(layer.ih) + "x" +
                         std::to_string(layer.iw));
  }
  const std::size_t oh = layer.oh();
  const std::size_t ow = layer.ow();
  Tensor out({layer.c_out, oh, ow});
  for (std::size_t o = 0; o < layer.c_out; ++o)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (std::size_t c = 0; c < layer.c_in; ++c)
          for (std::size_t r = 0; r < layer.kh; ++r)
            for (std::size_t q = 0; q < layer.kw; ++q) {
              const long iy = static_cast<long>(y * layer.stride + r) - static_cast<long>(layer.pad);
              const long ix = static_cast<long>(x * layer.stride + q) - static_cast<long>(layer.pad);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(layer.ih) ||
                  ix >= static_cast<long>(layer.iw))
                continue;
              acc += weights(o, c, r, q) * input(c, static_cast<std::size_t>(iy),
                                                 static_cast<std::size_t>(ix));
            }
        out(o, y, x) = acc;
      }
  return out;
}

}  // namespace imclr
