#ifndef TERRAIN_ENERGY_CONV_NET_HPP
#define TERRAIN_ENERGY_CONV_NET_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "terrain_energy/random.hpp"

namespace terrain_energy {

/// Shape of the patch regressor: stride-2 3x3 convolutions with ReLU, a global
/// spatial average, then fully connected layers (ReLU on all but the last).
struct Architecture {
  std::size_t input_n = 32;
  std::vector<std::size_t> conv_channels{8, 16, 32};
  std::vector<std::size_t> head_widths{512, 256, 1};
  double height_scale = 0.5;  // m; patch heights are divided by this

  bool operator==(const Architecture&) const = default;
};

enum class LayerKind { kConv3x3, kDense };

struct LayerShape {
  LayerKind kind;
  std::size_t in = 0;   // input channels / features
  std::size_t out = 0;  // output channels / features
  std::size_t in_side = 1;   // spatial side of the input (conv only)
  std::size_t out_side = 1;  // spatial side of the output (conv only)
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;

  std::size_t fan_in() const { return kind == LayerKind::kConv3x3 ? in * 9 : in; }
  std::size_t weight_count() const { return out * fan_in(); }
};

/// Layer table for `arch`, parameters laid out layer by layer, weights
/// (row-major, out x fan_in) before biases.
inline std::vector<LayerShape> layer_table(const Architecture& arch) {
  if (arch.input_n < 2) throw std::invalid_argument("input_n must be at least 2");
  if (arch.head_widths.empty() || arch.head_widths.back() != 1) {
    throw std::invalid_argument("regressor head must end in a single output");
  }
  std::vector<LayerShape> layers;
  std::size_t offset = 0;
  std::size_t channels = 1;
  std::size_t side = arch.input_n;
  for (std::size_t c : arch.conv_channels) {
    if (c == 0) throw std::invalid_argument("conv channel count must be positive");
    LayerShape l{LayerKind::kConv3x3, channels, c, side, (side - 1) / 2 + 1};
    l.weight_offset = offset;
    offset += l.weight_count();
    l.bias_offset = offset;
    offset += l.out;
    layers.push_back(l);
    channels = c;
    side = l.out_side;
  }
  // Without convolutions the head sees the flattened patch.
  std::size_t features = arch.conv_channels.empty() ? arch.input_n * arch.input_n : channels;
  for (std::size_t w : arch.head_widths) {
    if (w == 0) throw std::invalid_argument("head width must be positive");
    LayerShape l{LayerKind::kDense, features, w};
    l.weight_offset = offset;
    offset += l.weight_count();
    l.bias_offset = offset;
    offset += l.out;
    layers.push_back(l);
    features = w;
  }
  return layers;
}

inline std::size_t parameter_count(const std::vector<LayerShape>& layers) {
  return layers.empty() ? 0 : layers.back().bias_offset + layers.back().out;
}

/// Forward and backward passes of the regressor over a flat parameter
/// vector. Templated on the scalar so the float production path and a double
/// reference path share one implementation.
template <typename T>
class ConvNet {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using ConstMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using Map = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  /// Activations cached by forward() for backward(). Conv activations are
  /// stored channels x (batch * side * side), dense ones features x batch.
  struct Workspace {
    std::size_t batch = 0;
    std::vector<Matrix> cols;  // im2col input of each conv layer
    std::vector<Matrix> pre;   // pre-activation of every layer
    std::vector<Matrix> post;  // post-activation of every layer (last: output)
    Matrix pooled;             // features x batch entering the head
  };

  explicit ConvNet(Architecture arch) : arch_(std::move(arch)), layers_(layer_table(arch_)) {}

  const Architecture& architecture() const { return arch_; }
  const std::vector<LayerShape>& layers() const { return layers_; }
  std::size_t parameter_count() const { return terrain_energy::parameter_count(layers_); }
  std::size_t conv_layer_count() const { return arch_.conv_channels.size(); }

  /// He-uniform weights (+-sqrt(6/fan_in)) ahead of each ReLU so activations
  /// keep their scale with depth, +-sqrt(3/fan_in) on the linear output
  /// layer, zero biases.
  std::vector<T> initial_parameters(std::uint64_t seed) const {
    std::vector<T> params(parameter_count(), T(0));
    Engine eng(seed);
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const auto& l = layers_[li];
      const double gain = li + 1 == layers_.size() ? 3.0 : 6.0;
      const double bound = std::sqrt(gain / static_cast<double>(l.fan_in()));
      for (std::size_t i = 0; i < l.weight_count(); ++i) {
        params[l.weight_offset + i] = static_cast<T>(uniform(eng, -bound, bound));
      }
    }
    return params;
  }

  /// `inputs` holds `batch` normalized patches, each input_n^2 row-major.
  /// Returns the 1 x batch output row.
  const Matrix& forward(std::span<const T> params, std::span<const T> inputs, std::size_t batch,
                        Workspace& ws) const {
    const std::size_t n = arch_.input_n;
    if (inputs.size() != batch * n * n) throw std::invalid_argument("input size mismatch");
    ws.batch = batch;
    ws.cols.resize(conv_layer_count());
    ws.pre.resize(layers_.size());
    ws.post.resize(layers_.size());

    // Input as a 1 x (batch * n * n) activation.
    Matrix x = Eigen::Map<const Matrix>(inputs.data(), 1, static_cast<Eigen::Index>(batch * n * n));
    const Matrix* current = &x;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const auto& l = layers_[li];
      const ConstMap w(params.data() + l.weight_offset, static_cast<Eigen::Index>(l.out),
                       static_cast<Eigen::Index>(l.fan_in()));
      const Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(
          params.data() + l.bias_offset, static_cast<Eigen::Index>(l.out));
      if (l.kind == LayerKind::kConv3x3) {
        im2col(*current, l, batch, ws.cols[li]);
        ws.pre[li].noalias() = w * ws.cols[li];
      } else {
        if (li == conv_layer_count()) {
          pool(*current, li == 0 ? n : layers_[li - 1].out_side, batch, li == 0, ws.pooled);
          current = &ws.pooled;
        }
        ws.pre[li].noalias() = w * (*current);
      }
      ws.pre[li].colwise() += b;
      if (li + 1 == layers_.size()) {
        ws.post[li] = ws.pre[li];
      } else {
        ws.post[li] = ws.pre[li].cwiseMax(T(0));
      }
      current = &ws.post[li];
    }
    return ws.post.back();
  }

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output)
  /// (1 x batch). With `conv_grads` false the convolution parameters get no
  /// gradient and the backward pass stops at the head.
  void backward(std::span<const T> params, const Workspace& ws, const Matrix& d_output,
                std::span<T> grad, bool conv_grads = true) const {
    const std::size_t batch = ws.batch;
    Matrix delta = d_output;  // gradient w.r.t. the pre-activation of layer li
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const auto& l = layers_[li];
      const bool is_conv = l.kind == LayerKind::kConv3x3;
      if (is_conv && !conv_grads) break;
      if (li + 1 != layers_.size()) {
        delta = delta.cwiseProduct(
            ws.pre[li].unaryExpr([](T v) { return v > T(0) ? T(1) : T(0); }));
      }
      Map gw(grad.data() + l.weight_offset, static_cast<Eigen::Index>(l.out),
             static_cast<Eigen::Index>(l.fan_in()));
      Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> gb(grad.data() + l.bias_offset,
                                                         static_cast<Eigen::Index>(l.out));
      const ConstMap w(params.data() + l.weight_offset, static_cast<Eigen::Index>(l.out),
                       static_cast<Eigen::Index>(l.fan_in()));
      gb += delta.rowwise().sum();
      if (is_conv) {
        gw.noalias() += delta * ws.cols[li].transpose();
        if (li == 0) break;
        Matrix d_cols = w.transpose() * delta;
        col2im(d_cols, l, batch, delta);
        continue;
      }
      const Matrix& input = li == conv_layer_count() ? ws.pooled : ws.post[li - 1];
      gw.noalias() += delta * input.transpose();
      if (li == 0) break;
      if (li == conv_layer_count() && !conv_grads) break;
      Matrix d_input = w.transpose() * delta;
      if (li == conv_layer_count()) {
        unpool(d_input, layers_[li - 1].out_side, batch, delta);
      } else {
        delta = std::move(d_input);
      }
    }
  }

 private:
  // Columns of `cols`: one per (sample, out_y, out_x); rows: (channel, ky, kx).
  static void im2col(const Matrix& in, const LayerShape& l, std::size_t batch, Matrix& cols) {
    const std::size_t si = l.in_side;
    const std::size_t so = l.out_side;
    cols.setZero(static_cast<Eigen::Index>(l.in * 9), static_cast<Eigen::Index>(batch * so * so));
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t oy = 0; oy < so; ++oy) {
        for (std::size_t ox = 0; ox < so; ++ox) {
          const auto col = static_cast<Eigen::Index>((b * so + oy) * so + ox);
          for (std::size_t ky = 0; ky < 3; ++ky) {
            const long iy = static_cast<long>(2 * oy + ky) - 1;
            if (iy < 0 || iy >= static_cast<long>(si)) continue;
            for (std::size_t kx = 0; kx < 3; ++kx) {
              const long ix = static_cast<long>(2 * ox + kx) - 1;
              if (ix < 0 || ix >= static_cast<long>(si)) continue;
              const auto src = static_cast<Eigen::Index>((b * si + static_cast<std::size_t>(iy)) * si +
                                                         static_cast<std::size_t>(ix));
              for (std::size_t c = 0; c < l.in; ++c) {
                cols(static_cast<Eigen::Index>(c * 9 + ky * 3 + kx), col) =
                    in(static_cast<Eigen::Index>(c), src);
              }
            }
          }
        }
      }
    }
  }

  static void col2im(const Matrix& d_cols, const LayerShape& l, std::size_t batch, Matrix& d_in) {
    const std::size_t si = l.in_side;
    const std::size_t so = l.out_side;
    d_in.setZero(static_cast<Eigen::Index>(l.in), static_cast<Eigen::Index>(batch * si * si));
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t oy = 0; oy < so; ++oy) {
        for (std::size_t ox = 0; ox < so; ++ox) {
          const auto col = static_cast<Eigen::Index>((b * so + oy) * so + ox);
          for (std::size_t ky = 0; ky < 3; ++ky) {
            const long iy = static_cast<long>(2 * oy + ky) - 1;
            if (iy < 0 || iy >= static_cast<long>(si)) continue;
            for (std::size_t kx = 0; kx < 3; ++kx) {
              const long ix = static_cast<long>(2 * ox + kx) - 1;
              if (ix < 0 || ix >= static_cast<long>(si)) continue;
              const auto dst = static_cast<Eigen::Index>((b * si + static_cast<std::size_t>(iy)) * si +
                                                         static_cast<std::size_t>(ix));
              for (std::size_t c = 0; c < l.in; ++c) {
                d_in(static_cast<Eigen::Index>(c), dst) +=
                    d_cols(static_cast<Eigen::Index>(c * 9 + ky * 3 + kx), col);
              }
            }
          }
        }
      }
    }
  }

  // Global spatial average; with `flatten` (no conv layers) the raw patch is
  // reshaped into one feature column per sample instead.
  static void pool(const Matrix& in, std::size_t side, std::size_t batch, bool flatten,
                   Matrix& out) {
    const auto hw = static_cast<Eigen::Index>(side * side);
    if (flatten) {
      out = Eigen::Map<const Matrix>(in.data(), hw, static_cast<Eigen::Index>(batch));
      return;
    }
    out.resize(in.rows(), static_cast<Eigen::Index>(batch));
    for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(batch); ++b) {
      out.col(b) = in.middleCols(b * hw, hw).rowwise().sum() / static_cast<T>(hw);
    }
  }

  static void unpool(const Matrix& d_pooled, std::size_t side, std::size_t batch, Matrix& d_in) {
    const auto hw = static_cast<Eigen::Index>(side * side);
    d_in.resize(d_pooled.rows(), hw * static_cast<Eigen::Index>(batch));
    for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(batch); ++b) {
      d_in.middleCols(b * hw, hw) = (d_pooled.col(b) / static_cast<T>(hw)).replicate(1, hw);
    }
  }

  Architecture arch_;
  std::vector<LayerShape> layers_;
};

}  // namespace terrain_energy

#endif  // TERRAIN_ENERGY_CONV_NET_HPP
