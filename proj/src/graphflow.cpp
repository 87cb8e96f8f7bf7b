#include "wagnn/graphflow.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "wagnn/rng.hpp"

namespace wagnn::graphflow {

GraphShift sparsify(const Matrix& gain, double eta0, const NodeMask& active) {
  if (!gain.square()) throw ShapeError("sparsify: gain must be square");
  if (active.size() != gain.cols()) throw ShapeError("sparsify: active mask size mismatch");
  if (!(eta0 >= 0.0)) throw std::invalid_argument("sparsify: eta0 must be nonnegative");
  GraphShift gs{Matrix(gain.rows(), gain.cols()), eta0};
  for (std::size_t i = 0; i < gain.rows(); ++i)
    for (std::size_t j = 0; j < gain.cols(); ++j)
      if (active[j] && gain(i, j) >= eta0) gs.h_tilde(i, j) = gain(i, j);
  return gs;
}

Vector shift(const GraphShift& gs, std::span<const double> signal) { return matvec(gs.h_tilde, signal); }

AggregationState AggregationState::cold(std::size_t m, std::size_t K) {
  if (K < 1) throw std::invalid_argument("invalid parameter: aggregation length K must be >= 1");
  return {K, Matrix(m, K), Matrix(m, K)};
}

AggregationState advance_aggregation(const AggregationState& st, const GraphShift& gs, std::span<const double> x_now) {
  if (st.K < 1) throw std::invalid_argument("invalid parameter: aggregation length K must be >= 1");
  const std::size_t m = st.nodes();
  if (gs.h_tilde.rows() != m || gs.h_tilde.cols() != m) throw ShapeError("advance_aggregation: GSO size mismatch");
  if (x_now.size() != m) throw ShapeError("advance_aggregation: state vector size mismatch");

  AggregationState next{st.K, Matrix(m, st.K), st.y};
  for (std::size_t i = 0; i < m; ++i) {
    next.y(i, 0) = x_now[i];
    const auto h_row = gs.h_tilde.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double h = h_row[j];
      if (h == 0.0) continue;
      for (std::size_t k = 1; k < st.K; ++k) next.y(i, k) += h * st.y(j, k - 1);
    }
  }
  return next;
}

void dump_csv(std::ostream& out, const AggregationState& st, std::uint64_t t, bool header) {
  if (header) out << "t,node,k,value\n";
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < st.nodes(); ++i)
    for (std::size_t k = 0; k < st.K; ++k) out << t << ',' << i << ',' << k << ',' << st.y(i, k) << '\n';
  out.precision(old_precision);
}

// ---------------------------------------------------------------------------

ActivationSchedule::ActivationSchedule(ActivationMode mode, std::size_t m, std::vector<NodeMask> subsets,
                                       std::uint64_t seed)
    : mode_(mode), m_(m), subsets_(std::move(subsets)), seed_(seed) {}

ActivationSchedule ActivationSchedule::synchronous(std::size_t m) {
  return ActivationSchedule(ActivationMode::synchronous, m, {NodeMask(m, true)}, 0);
}

ActivationSchedule ActivationSchedule::asynchronous(std::size_t m, std::size_t n_subsets, double mean_active,
                                                    std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("activation schedule needs m >= 1");
  if (n_subsets == 0) throw std::invalid_argument("configuration error: asynchronous schedule needs subsets");
  if (!(mean_active > 0.0)) throw std::invalid_argument("configuration error: mean active count must be positive");
  std::vector<NodeMask> subsets;
  subsets.reserve(n_subsets);
  std::vector<std::size_t> nodes(m);
  for (std::size_t s = 0; s < n_subsets; ++s) {
    rng::Stream stream(seed, rng::Tag::activation, {0, s});
    const auto size = std::clamp<std::size_t>(stream.poisson(mean_active), 1, m);
    std::iota(nodes.begin(), nodes.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `size` slots are a uniform subset.
    for (std::size_t i = 0; i < size; ++i) {
      const std::size_t pick = i + static_cast<std::size_t>(stream.uniform() * static_cast<double>(m - i));
      std::swap(nodes[i], nodes[std::min(pick, m - 1)]);
    }
    NodeMask mask(m, false);
    for (std::size_t i = 0; i < size; ++i) mask[nodes[i]] = true;
    subsets.push_back(std::move(mask));
  }
  return ActivationSchedule(ActivationMode::asynchronous, m, std::move(subsets), seed);
}

ActivationSchedule ActivationSchedule::from_subsets(std::size_t m, std::vector<NodeMask> subsets, std::uint64_t seed) {
  if (subsets.empty()) throw std::invalid_argument("configuration error: empty subset list");
  for (const auto& s : subsets)
    if (s.size() != m) throw ShapeError("activation subset size mismatch");
  return ActivationSchedule(ActivationMode::asynchronous, m, std::move(subsets), seed);
}

const NodeMask& ActivationSchedule::sample(std::uint64_t t) const {
  if (mode_ == ActivationMode::synchronous) return subsets_.front();
  if (subsets_.empty()) throw std::invalid_argument("configuration error: empty subset list");
  rng::Stream stream(seed_, rng::Tag::activation, {1, t});
  const auto idx = static_cast<std::size_t>(stream.uniform() * static_cast<double>(subsets_.size()));
  return subsets_[std::min(idx, subsets_.size() - 1)];
}

std::size_t count_active(const NodeMask& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

}  // namespace wagnn::graphflow
