#pragma once

// Aggregation GNN: a stack of causal 1-D convolutions applied identically at
// every node to that node's aggregation sequence.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wagnn/linalg.hpp"

namespace wagnn::aggnn {

struct LayerShape {
  std::size_t in_features = 1;
  std::size_t out_features = 1;
  std::size_t taps = 1;
  bool operator==(const LayerShape&) const = default;
};

/// Layer spec with `layers` layers, `features` hidden features and `taps`
/// taps per filter. Input and readout layers have a single feature.
std::vector<LayerShape> uniform_layers(std::size_t layers, std::size_t features, std::size_t taps);

/// Ten single-feature layers of ten taps each (100 parameters).
std::vector<LayerShape> default_layers();

/// Shared filter taps alpha_l^{fg}[k] for every layer, stored contiguously.
/// Gradients use the same type.
class FilterTensor {
 public:
  FilterTensor() = default;
  explicit FilterTensor(std::vector<LayerShape> layers);

  const std::vector<LayerShape>& layers() const { return layers_; }
  std::size_t size() const { return taps_.size(); }

  double& tap(std::size_t layer, std::size_t f, std::size_t g, std::size_t k) {
    return taps_[index(layer, f, g, k)];
  }
  double tap(std::size_t layer, std::size_t f, std::size_t g, std::size_t k) const {
    return taps_[index(layer, f, g, k)];
  }

  std::span<double> flat() { return taps_; }
  std::span<const double> flat() const { return taps_; }

  FilterTensor zeros_like() const { return FilterTensor(layers_); }
  bool same_shape(const FilterTensor& other) const { return layers_ == other.layers_; }

  /// this += scale * other
  void add_scaled(const FilterTensor& other, double scale);
  void scale(double factor);
  double norm() const;

  bool operator==(const FilterTensor&) const = default;

 private:
  std::size_t index(std::size_t layer, std::size_t f, std::size_t g, std::size_t k) const {
    const auto& s = layers_[layer];
    return offsets_[layer] + (f * s.in_features + g) * s.taps + k;
  }

  std::vector<LayerShape> layers_;
  std::vector<std::size_t> offsets_;
  Vector taps_;
};

/// Intermediate values kept for backpropagation. `inputs[l]` is the input of
/// layer l (features x length), `pre[l]` its pre-activation output.
struct LayerActivations {
  std::size_t length = 0;
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre;
};

struct ForwardResult {
  double z = 0.0;
  LayerActivations acts;
};

/// Causal zero-padded convolutions keeping the input length; ReLU on every
/// layer but the last; scalar readout is the mean of the final sequence.
ForwardResult forward(const FilterTensor& A, std::span<const double> y);

/// Forward pass returning only the readout.
double evaluate(const FilterTensor& A, std::span<const double> y);

/// d(upstream * z)/dA for the activations of a matching forward call.
FilterTensor backward(const FilterTensor& A, const LayerActivations& acts, double upstream);

/// Taps i.i.d. uniform in [-scale/sqrt(K_l), scale/sqrt(K_l)].
FilterTensor init_filters(const std::vector<LayerShape>& layers, double scale, std::uint64_t seed);

/// Uniform init as above, then every hidden layer is shrunk by `hidden_shrink`
/// and gets +1 on its lead tap (feature f reads input f mod in_features), so
/// the hidden stack starts close to the identity map. A plain uniform init
/// leaves most random draws with a readout that is identically zero.
FilterTensor init_near_identity(const std::vector<LayerShape>& layers, double scale, double hidden_shrink,
                                std::uint64_t seed);

/// Text format: header, one "in out taps" line per layer, then every tap with
/// 17 significant digits.
std::string to_text(const FilterTensor& A);
FilterTensor from_text(const std::string& text);
void save_filters(const FilterTensor& A, const std::filesystem::path& path);
FilterTensor load_filters(const std::filesystem::path& path);

}  // namespace wagnn::aggnn
