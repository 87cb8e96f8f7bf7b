#include "wagnn/aggnn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "wagnn/rng.hpp"

namespace wagnn::aggnn {

namespace {

constexpr const char* kTextMagic = "wagnn-filter-tensor";
constexpr int kTextVersion = 1;

void validate_layers(const std::vector<LayerShape>& layers) {
  if (layers.empty()) throw std::invalid_argument("filter tensor needs at least one layer");
  if (layers.front().in_features != 1) throw ShapeError("first layer must take a single input feature");
  if (layers.back().out_features != 1) throw ShapeError("last layer must produce a single feature");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& s = layers[l];
    if (s.in_features == 0 || s.out_features == 0 || s.taps == 0)
      throw ShapeError("layer " + std::to_string(l) + " has a zero dimension");
    if (l > 0 && layers[l - 1].out_features != s.in_features)
      throw ShapeError("layer " + std::to_string(l) + " input features do not match previous output");
  }
}

}  // namespace

std::vector<LayerShape> uniform_layers(std::size_t layers, std::size_t features, std::size_t taps) {
  if (layers == 0) throw std::invalid_argument("empty layer spec");
  std::vector<LayerShape> out(layers, LayerShape{features, features, taps});
  out.front().in_features = 1;
  out.back().out_features = 1;
  return out;
}

std::vector<LayerShape> default_layers() { return uniform_layers(10, 1, 10); }

FilterTensor::FilterTensor(std::vector<LayerShape> layers) : layers_(std::move(layers)) {
  validate_layers(layers_);
  std::size_t total = 0;
  offsets_.reserve(layers_.size());
  for (const auto& s : layers_) {
    offsets_.push_back(total);
    total += s.in_features * s.out_features * s.taps;
  }
  taps_.assign(total, 0.0);
}

void FilterTensor::add_scaled(const FilterTensor& other, double scale) {
  if (!same_shape(other)) throw ShapeError("filter tensors differ in shape");
  for (std::size_t i = 0; i < taps_.size(); ++i) taps_[i] += scale * other.taps_[i];
}

void FilterTensor::scale(double factor) {
  for (auto& t : taps_) t *= factor;
}

double FilterTensor::norm() const {
  double acc = 0.0;
  for (double t : taps_) acc += t * t;
  return std::sqrt(acc);
}

ForwardResult forward(const FilterTensor& A, std::span<const double> y) {
  if (y.empty()) throw std::invalid_argument("aggregation sequence must have length >= 1");
  const auto& layers = A.layers();
  if (layers.empty()) throw ShapeError("filter tensor has no layers");
  const std::size_t n = y.size();

  ForwardResult res;
  auto& acts = res.acts;
  acts.length = n;
  acts.inputs.reserve(layers.size());
  acts.pre.reserve(layers.size());

  Matrix input(1, n);
  for (std::size_t t = 0; t < n; ++t) input(0, t) = y[t];

  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& s = layers[l];
    if (input.rows() != s.in_features) throw ShapeError("feature count mismatch at layer " + std::to_string(l));
    Matrix v(s.out_features, n);
    for (std::size_t f = 0; f < s.out_features; ++f)
      for (std::size_t g = 0; g < s.in_features; ++g)
        for (std::size_t t = 0; t < n; ++t) {
          double acc = 0.0;
          const std::size_t kmax = std::min(s.taps, t + 1);
          for (std::size_t k = 0; k < kmax; ++k) acc += A.tap(l, f, g, k) * input(g, t - k);
          v(f, t) += acc;
        }
    acts.inputs.push_back(std::move(input));
    input = v;
    if (l + 1 < layers.size())
      for (auto& e : input.flat()) e = e > 0.0 ? e : 0.0;
    acts.pre.push_back(std::move(v));
  }

  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) sum += input(0, t);
  res.z = sum / static_cast<double>(n);
  return res;
}

double evaluate(const FilterTensor& A, std::span<const double> y) { return forward(A, y).z; }

FilterTensor backward(const FilterTensor& A, const LayerActivations& acts, double upstream) {
  const auto& layers = A.layers();
  if (acts.inputs.size() != layers.size() || acts.pre.size() != layers.size())
    throw ShapeError("activations do not match the filter tensor depth");
  const std::size_t n = acts.length;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (acts.inputs[l].rows() != layers[l].in_features || acts.inputs[l].cols() != n ||
        acts.pre[l].rows() != layers[l].out_features || acts.pre[l].cols() != n)
      throw ShapeError("stale activations at layer " + std::to_string(l));
  }

  FilterTensor grad = A.zeros_like();
  if (upstream == 0.0) return grad;

  // d z / d(final output)[t] = upstream / n
  Matrix grad_out(1, n, upstream / static_cast<double>(n));
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& s = layers[l];
    const Matrix& pre = acts.pre[l];
    const Matrix& in = acts.inputs[l];
    Matrix grad_v = grad_out;
    if (l + 1 < layers.size()) {
      for (std::size_t f = 0; f < s.out_features; ++f)
        for (std::size_t t = 0; t < n; ++t)
          if (!(pre(f, t) > 0.0)) grad_v(f, t) = 0.0;
    }
    Matrix grad_in(s.in_features, n);
    for (std::size_t f = 0; f < s.out_features; ++f)
      for (std::size_t g = 0; g < s.in_features; ++g)
        for (std::size_t k = 0; k < s.taps && k < n; ++k) {
          double acc = 0.0;
          const double a = A.tap(l, f, g, k);
          for (std::size_t t = k; t < n; ++t) {
            acc += grad_v(f, t) * in(g, t - k);
            grad_in(g, t - k) += a * grad_v(f, t);
          }
          grad.tap(l, f, g, k) += acc;
        }
    grad_out = std::move(grad_in);
  }
  return grad;
}

FilterTensor init_filters(const std::vector<LayerShape>& layers, double scale, std::uint64_t seed) {
  if (!(scale > 0.0)) throw std::invalid_argument("init scale must be positive");
  FilterTensor A(layers);
  rng::Stream stream(seed, rng::Tag::init);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& s = layers[l];
    const double bound = scale / std::sqrt(static_cast<double>(s.taps));
    for (std::size_t f = 0; f < s.out_features; ++f)
      for (std::size_t g = 0; g < s.in_features; ++g)
        for (std::size_t k = 0; k < s.taps; ++k) A.tap(l, f, g, k) = stream.uniform(-bound, bound);
  }
  return A;
}

FilterTensor init_near_identity(const std::vector<LayerShape>& layers, double scale, double hidden_shrink,
                                std::uint64_t seed) {
  if (!(hidden_shrink >= 0.0)) throw std::invalid_argument("hidden_shrink must be nonnegative");
  FilterTensor A = init_filters(layers, scale, seed);
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const auto& s = layers[l];
    for (std::size_t f = 0; f < s.out_features; ++f) {
      for (std::size_t g = 0; g < s.in_features; ++g)
        for (std::size_t k = 0; k < s.taps; ++k) A.tap(l, f, g, k) *= hidden_shrink;
      A.tap(l, f, f % s.in_features, 0) += 1.0;
    }
  }
  return A;
}

std::string to_text(const FilterTensor& A) {
  std::ostringstream out;
  out << kTextMagic << ' ' << kTextVersion << '\n';
  out << "layers " << A.layers().size() << '\n';
  for (const auto& s : A.layers()) out << s.in_features << ' ' << s.out_features << ' ' << s.taps << '\n';
  out << "taps " << A.size() << '\n';
  char buf[40];
  for (double t : A.flat()) {
    std::snprintf(buf, sizeof buf, "%.17g", t);
    out << buf << '\n';
  }
  return out.str();
}

FilterTensor from_text(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kTextMagic || version != kTextVersion)
    throw std::invalid_argument("not a filter tensor file");
  std::string word;
  std::size_t n_layers = 0;
  if (!(in >> word >> n_layers) || word != "layers" || n_layers == 0)
    throw std::invalid_argument("filter tensor: bad layer header");
  std::vector<LayerShape> layers(n_layers);
  for (auto& s : layers)
    if (!(in >> s.in_features >> s.out_features >> s.taps)) throw std::invalid_argument("filter tensor: bad layer line");
  FilterTensor A(layers);
  std::size_t n_taps = 0;
  if (!(in >> word >> n_taps) || word != "taps" || n_taps != A.size())
    throw std::invalid_argument("filter tensor: tap count does not match layer spec");
  for (auto& t : A.flat()) {
    std::string token;
    if (!(in >> token)) throw std::invalid_argument("filter tensor: truncated tap list");
    try {
      t = std::stod(token);
    } catch (const std::exception&) {
      throw std::invalid_argument("filter tensor: bad tap value '" + token + "'");
    }
  }
  return A;
}

void save_filters(const FilterTensor& A, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_text(A);
}

FilterTensor load_filters(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

}  // namespace wagnn::aggnn
