#pragma once

#include "repeatmix/mixer.hpp"
#include "repeatmix/sampler.hpp"
#include "repeatmix/temporal_graph.hpp"
#include "repeatmix/tensor.hpp"

#include <cmath>
#include <vector>

namespace repeatmix {

struct TimeEncoderConfig {
  int d_T = 100;
  double alpha = 10.0;
  double beta = 10.0;

  /// alpha = beta = sqrt(d_T)
  static TimeEncoderConfig with_dim(int d_T) {
    const double s = std::sqrt(static_cast<double>(d_T));
    return {d_T, s, s};
  }

  void validate() const {
    if (d_T < 1) throw std::invalid_argument("time encoding width must be >= 1");
    if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("time encoding alpha and beta must be > 0");
  }
};

/// Fixed cosine map of a time gap: sqrt(1/d_T) * cos(w_i * dt) with
/// w_i = alpha^(-(i-1)/beta).
class TimeEncoder {
 public:
  TimeEncoder() : TimeEncoder(TimeEncoderConfig{}) {}
  explicit TimeEncoder(const TimeEncoderConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    frequencies_.resize(static_cast<std::size_t>(cfg_.d_T));
    for (int i = 0; i < cfg_.d_T; ++i) {
      frequencies_[static_cast<std::size_t>(i)] = std::pow(cfg_.alpha, -static_cast<double>(i) / cfg_.beta);
    }
    scale_ = std::sqrt(1.0 / static_cast<double>(cfg_.d_T));
  }

  [[nodiscard]] const TimeEncoderConfig& config() const { return cfg_; }
  [[nodiscard]] const std::vector<double>& frequencies() const { return frequencies_; }
  [[nodiscard]] double scale() const { return scale_; }

  template <typename OutRow>
  void encode_into(double dt, OutRow&& out) const {
    for (int i = 0; i < cfg_.d_T; ++i) {
      out(i) = static_cast<typename std::decay_t<OutRow>::Scalar>(scale_ * std::cos(frequencies_[static_cast<std::size_t>(i)] * dt));
    }
  }

  template <typename Scalar = double>
  [[nodiscard]] RowVector<Scalar> encode(double dt) const {
    if (!(dt >= 0.0)) throw std::invalid_argument("time gap must be non-negative");
    RowVector<Scalar> v(cfg_.d_T);
    encode_into(dt, v);
    return v;
  }

 private:
  TimeEncoderConfig cfg_;
  std::vector<double> frequencies_;
  double scale_ = 1.0;
};

template <typename Scalar = double>
RowVector<Scalar> time_encode(double dt, const TimeEncoderConfig& cfg) {
  return TimeEncoder(cfg).encode<Scalar>(dt);
}

enum class Segment { A, B };

struct EncoderConfig {
  Eigen::Index d_node = 172;
  Eigen::Index d_edge = 172;
  TimeEncoderConfig time = TimeEncoderConfig::with_dim(100);
  int d_segment = 32;
  int K = 32;
  bool no_time_encoding = false;

  /// d = d_N + d_E + d_T
  [[nodiscard]] Eigen::Index feature_width() const { return d_node + d_edge + time.d_T; }
  [[nodiscard]] Eigen::Index width() const { return feature_width() + d_segment; }
};

template <typename Scalar>
struct EncodedSequence {
  Matrix<Scalar> matrix;
  RowMask mask;
  Segment segment = Segment::A;
};

template <typename Scalar>
struct EncodedPair {
  Matrix<Scalar> matrix;
  RowMask mask;
};

/// Row r = node_features[b] | edge_features[e] | time_encode(t - t_k) | segment
/// for the r-th sampled event; rows past the sample are zero and masked out.
template <typename Scalar>
EncodedSequence<Scalar> assemble(const TemporalGraph& g, const NeighborSample& s, Timestamp t, Segment segment,
                                 const Matrix<Scalar>& segment_embedding, const EncoderConfig& cfg,
                                 const TimeEncoder& time_encoder) {
  if (s.entries.size() > static_cast<std::size_t>(cfg.K)) throw ShapeError("sample longer than K");
  if (g.node_feature_dim() != cfg.d_node || g.edge_feature_dim() != cfg.d_edge) {
    throw ShapeError("graph feature widths do not match the encoder configuration");
  }
  if (segment_embedding.size() != cfg.d_segment) throw ShapeError("segment embedding width mismatch");
  EncodedSequence<Scalar> out;
  out.segment = segment;
  out.matrix = Matrix<Scalar>::Zero(cfg.K, cfg.width());
  out.mask.assign(static_cast<std::size_t>(cfg.K), false);
  const Eigen::Index d_t = cfg.time.d_T;
  for (std::size_t r = 0; r < s.entries.size(); ++r) {
    const auto& e = s.entries[r];
    const auto row = static_cast<Eigen::Index>(r);
    if (e.counterpart < 0 || e.counterpart >= g.node_count() || e.edge_index < 0 ||
        e.edge_index >= static_cast<EdgeIndex>(g.interaction_count())) {
      throw std::out_of_range("sampled entry references a feature row out of range");
    }
    if (!(e.t < t)) throw std::invalid_argument("sampled event is not strictly before the query time");
    auto out_row = out.matrix.row(row);
    out_row.segment(0, cfg.d_node) = g.node_features().row(e.counterpart).template cast<Scalar>();
    out_row.segment(cfg.d_node, cfg.d_edge) = g.edge_features().row(e.edge_index).template cast<Scalar>();
    if (!cfg.no_time_encoding) time_encoder.encode_into(t - e.t, out_row.segment(cfg.d_node + cfg.d_edge, d_t));
    if (cfg.d_segment > 0) out_row.tail(cfg.d_segment) = segment_embedding.row(0);
    out.mask[r] = true;
  }
  return out;
}

template <typename Scalar>
EncodedPair<Scalar> concat_pair(const EncodedSequence<Scalar>& a, const EncodedSequence<Scalar>& b) {
  if (a.matrix.cols() != b.matrix.cols()) throw ShapeError("concat_pair: width mismatch");
  EncodedPair<Scalar> out;
  out.matrix.resize(a.matrix.rows() + b.matrix.rows(), a.matrix.cols());
  out.matrix.topRows(a.matrix.rows()) = a.matrix;
  out.matrix.bottomRows(b.matrix.rows()) = b.matrix;
  out.mask = a.mask;
  out.mask.insert(out.mask.end(), b.mask.begin(), b.mask.end());
  return out;
}

}  // namespace repeatmix
