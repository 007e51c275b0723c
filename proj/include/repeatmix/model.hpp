#pragma once

#include "repeatmix/feature_encoder.hpp"
#include "repeatmix/fusion.hpp"
#include "repeatmix/mixer.hpp"
#include "repeatmix/param_store.hpp"
#include "repeatmix/sampler.hpp"

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>

namespace repeatmix {

struct Ablations {
  bool no_time_encoding = false;
  bool no_segment_embedding = false;
  bool separate_encoding = false;

  friend bool operator==(const Ablations&, const Ablations&) = default;
};

struct ModelConfig {
  bool use_second_order = true;  ///< false gives the first-order-only variant
  Fusion fusion = Fusion::adaptive;
  Ablations ablations;
  Strategy first_order_strategy = Strategy::repeat_first;
};

/// Everything needed to rebuild the parameter layout of a model.
struct RepeatMixerConfig {
  EncoderConfig encoder;
  MixerConfig mixer;  ///< layers, d_model, theta_o, theta_c, ln_eps; token_len/input_width are derived
  SamplerConfig sampler;
  ModelConfig model;
};

template <typename Scalar>
struct EdgeRepresentation {
  RowVector<Scalar> z_e;
  RowVector<Scalar> z_f;
  RowVector<Scalar> z_h;
  double w_f = 1.0;
  double w_h = 0.0;
};

/// Sampled sequences for one query edge (u, v, t).
struct QuerySamples {
  NeighborSample u1;
  NeighborSample v1;
  std::optional<NeighborSample> u2;
  std::optional<NeighborSample> v2;
};

struct SampleCounters {
  std::atomic<std::uint64_t> first_order{0};
  std::atomic<std::uint64_t> second_order{0};
};

template <typename Scalar>
class RepeatMixer {
 public:
  using Mat = Matrix<Scalar>;
  using Row = RowVector<Scalar>;

  struct PassTape {
    typename Mixer<Scalar>::Tape mixer;
    std::vector<Segment> row_segment;
  };

  struct PairTape {
    std::vector<PassTape> first;
    std::optional<PassTape> second_u;
    std::optional<PassTape> second_v;
    Row pooled_u;  // second-order branch means
    Row pooled_v;
    Row z_f;
    Row z_h;
    Row z_e;
    Row head_pre;
    Row head_act;
    double w_f = 1.0;
    double w_h = 0.0;
  };

  struct PairResult {
    Scalar logit = 0;
    EdgeRepresentation<Scalar> repr;
    PairTape tape;
  };

  RepeatMixer(const RepeatMixerConfig& cfg, ParamStore<Scalar>& store) : cfg_(resolve(cfg)), time_(cfg_.encoder.time) {
    cfg_.sampler.validate();
    const int d_s = cfg_.encoder.d_segment;
    const double seg_bound = d_s > 0 ? std::sqrt(1.0 / d_s) : 0.0;
    seg_a_ = store.add("segment.a", 1, d_s, ParamInit::uniform(seg_bound));
    seg_b_ = store.add("segment.b", 1, d_s, ParamInit::uniform(seg_bound));
    MixerConfig first = cfg_.mixer;
    first.token_len = cfg_.model.ablations.separate_encoding ? cfg_.encoder.K : 2 * cfg_.encoder.K;
    first_ = Mixer<Scalar>("first.", first, store);
    if (cfg_.model.use_second_order) {
      MixerConfig second = cfg_.mixer;
      second.token_len = 2 * cfg_.encoder.K;
      second_ = Mixer<Scalar>("second.", second, store);
    }
    const Eigen::Index d = cfg_.mixer.d_model;
    const Eigen::Index head_in = head_input_width();
    head_w1_ = store.add("head.w1", head_in, d, ParamInit::fan_in(head_in));
    head_b1_ = store.add("head.b1", 1, d, ParamInit::zeros());
    head_w2_ = store.add("head.w2", d, 1, ParamInit::fan_in(d));
    head_b2_ = store.add("head.b2", 1, 1, ParamInit::zeros());
  }

  [[nodiscard]] const RepeatMixerConfig& config() const { return cfg_; }
  [[nodiscard]] const TimeEncoder& time_encoder() const { return time_; }
  [[nodiscard]] Eigen::Index head_input_width() const {
    const bool concat = cfg_.model.use_second_order && cfg_.model.fusion == Fusion::concatenation;
    return concat ? 2 * cfg_.mixer.d_model : cfg_.mixer.d_model;
  }
  [[nodiscard]] ParamId segment_param(Segment s) const { return s == Segment::A ? seg_a_ : seg_b_; }

  /// Draws the first-order sequences of both endpoints and, when the model
  /// uses them, the second-order ones.
  QuerySamples gather_samples(const TemporalGraph& g, NodeId u, NodeId v, Cutoff cutoff, SamplerRng& rng,
                              SampleCounters* counters = nullptr) const {
    const auto& sc = cfg_.sampler;
    const Strategy strategy = cfg_.model.first_order_strategy;
    QuerySamples s{sample_first_order(g, strategy, u, v, cutoff, sc, rng),
                   sample_first_order(g, strategy, v, u, cutoff, sc, rng), std::nullopt, std::nullopt};
    if (counters) counters->first_order += 2;
    if (cfg_.model.use_second_order) {
      s.u2 = sample_repeat_second(g, u, s.u1, s.v1, cutoff, sc);
      s.v2 = sample_repeat_second(g, v, s.v1, s.u1, cutoff, sc);
      if (counters) counters->second_order += 2;
    }
    return s;
  }

  EncodedSequence<Scalar> encode(const ParamStore<Scalar>& store, const TemporalGraph& g, const NeighborSample& s,
                                 Timestamp t, Segment seg) const {
    return assemble<Scalar>(g, s, t, seg, store.value(segment_param(seg)), cfg_.encoder, time_);
  }

  /// First-order representation: mean of the first K mixer rows over the
  /// paired sequence (or the average of two separate passes under SepE).
  Row first_order_repr(const ParamStore<Scalar>& store, const EncodedSequence<Scalar>& u1,
                       const EncodedSequence<Scalar>& v1, std::vector<PassTape>& tapes) const {
    const int K = cfg_.encoder.K;
    if (cfg_.model.ablations.separate_encoding) {
      Row pooled = Row::Zero(cfg_.mixer.d_model);
      for (const auto* seq : {&u1, &v1}) {
        auto out = first_.forward(store, seq->matrix, seq->mask);
        pooled += Scalar(0.5) * out.output.colwise().mean();
        tapes.push_back({std::move(out.tape), std::vector<Segment>(static_cast<std::size_t>(K), seq->segment)});
      }
      return pooled;
    }
    const auto pair = concat_pair(u1, v1);
    auto out = first_.forward(store, pair.matrix, pair.mask);
    Row pooled = out.output.topRows(K).colwise().mean();
    tapes.push_back({std::move(out.tape), row_segments(u1.segment, v1.segment)});
    return pooled;
  }

  /// Gated second-order representation sigmoid(H_u) * tanh(H_v) from the
  /// branch inputs [Z_u2 | A ; Z_v1 | B] and [Z_v2 | A ; Z_u1 | B].
  Row second_order_repr(const ParamStore<Scalar>& store, const EncodedSequence<Scalar>& u2,
                        const EncodedSequence<Scalar>& v1b, const EncodedSequence<Scalar>& v2,
                        const EncodedSequence<Scalar>& u1b, PairTape& tape) const {
    const int K = cfg_.encoder.K;
    const auto pu = concat_pair(u2, v1b);
    auto out_u = second_.forward(store, pu.matrix, pu.mask);
    tape.pooled_u = out_u.output.topRows(K).colwise().mean();
    tape.second_u = PassTape{std::move(out_u.tape), row_segments(u2.segment, v1b.segment)};
    const auto pv = concat_pair(v2, u1b);
    auto out_v = second_.forward(store, pv.matrix, pv.mask);
    tape.pooled_v = out_v.output.topRows(K).colwise().mean();
    tape.second_v = PassTape{std::move(out_v.tape), row_segments(v2.segment, u1b.segment)};
    return gate(tape.pooled_u, tape.pooled_v);
  }

  static Row gate(const Row& hu, const Row& hv) {
    Row z(hu.size());
    for (Eigen::Index i = 0; i < hu.size(); ++i) z(i) = sigmoid(hu(i)) * std::tanh(hv(i));
    return z;
  }

  /// Head: logit = GeLU(z W1 + b1) W2 + b2.
  Scalar head_logit(const ParamStore<Scalar>& store, const Row& z, PairTape* tape = nullptr) const {
    require_shape(z, 1, head_input_width(), "head input");
    Row pre = z * store.value(head_w1_);
    pre += store.value(head_b1_).row(0);
    Row act = gelu_of(pre);
    const Scalar logit = (act * store.value(head_w2_))(0, 0) + store.value(head_b2_)(0, 0);
    if (tape) {
      tape->head_pre = std::move(pre);
      tape->head_act = std::move(act);
    }
    return logit;
  }

  Scalar predict_link(const ParamStore<Scalar>& store, const Row& z) const { return sigmoid(head_logit(store, z)); }

  PairResult forward(const ParamStore<Scalar>& store, const TemporalGraph& g, Timestamp t,
                     const QuerySamples& s) const {
    PairResult r;
    auto& tape = r.tape;
    const int K = cfg_.encoder.K;
    const auto u1 = encode(store, g, s.u1, t, Segment::A);
    const auto v1 = encode(store, g, s.v1, t, Segment::B);
    tape.z_f = first_order_repr(store, u1, v1, tape.first);
    if (cfg_.model.use_second_order) {
      if (!s.u2 || !s.v2) throw std::invalid_argument("second-order samples missing");
      const auto u2 = encode(store, g, *s.u2, t, Segment::A);
      const auto v2 = encode(store, g, *s.v2, t, Segment::A);
      const auto u1b = encode(store, g, s.u1, t, Segment::B);
      tape.z_h = second_order_repr(store, u2, v1, v2, u1b, tape);
      const auto dt_u1 = interval_sequence(s.u1, t, K);
      const auto dt_v1 = interval_sequence(s.v1, t, K);
      const auto dt_u2 = interval_sequence(*s.u2, t, K);
      const auto dt_v2 = interval_sequence(*s.v2, t, K);
      const auto w = fusion_weights(dt_u1, dt_v1, dt_u2, dt_v2);
      switch (cfg_.model.fusion) {
        case Fusion::adaptive:
          tape.w_f = w.w_f;
          tape.w_h = w.w_h;
          tape.z_e = static_cast<Scalar>(w.w_f) * tape.z_f + static_cast<Scalar>(w.w_h) * tape.z_h;
          break;
        case Fusion::summation:
          tape.w_f = tape.w_h = 1.0;
          tape.z_e = tape.z_f + tape.z_h;
          break;
        case Fusion::concatenation:
          tape.w_f = tape.w_h = 1.0;
          tape.z_e.resize(2 * cfg_.mixer.d_model);
          tape.z_e << tape.z_f, tape.z_h;
          break;
      }
    } else {
      tape.z_e = tape.z_f;
      tape.w_f = 1.0;
      tape.w_h = 0.0;
    }
    r.logit = head_logit(store, tape.z_e, &tape);
    r.repr = {tape.z_e, tape.z_f, tape.z_h, tape.w_f, tape.w_h};
    return r;
  }

  /// Accumulates d(logit) * d(logit)/d(theta) into `grads`. Fusion weights
  /// are constants.
  void backward(const ParamStore<Scalar>& store, const PairTape& tape, Scalar d_logit, Gradients<Scalar>& grads) const {
    const int K = cfg_.encoder.K;
    // Head.
    grads[head_b2_](0, 0) += d_logit;
    grads[head_w2_] += d_logit * tape.head_act.transpose();
    Row d_pre = d_logit * store.value(head_w2_).col(0).transpose();
    d_pre.array() *= gelu_derivative_of(tape.head_pre).array();
    grads[head_w1_].noalias() += tape.z_e.transpose() * d_pre;
    grads[head_b1_] += d_pre;
    const Row d_ze = d_pre * store.value(head_w1_).transpose();

    Row d_zf;
    if (cfg_.model.use_second_order) {
      const Eigen::Index d = cfg_.mixer.d_model;
      Row d_zh;
      switch (cfg_.model.fusion) {
        case Fusion::adaptive:
          d_zf = static_cast<Scalar>(tape.w_f) * d_ze;
          d_zh = static_cast<Scalar>(tape.w_h) * d_ze;
          break;
        case Fusion::summation:
          d_zf = d_ze;
          d_zh = d_ze;
          break;
        case Fusion::concatenation:
          d_zf = d_ze.head(d);
          d_zh = d_ze.tail(d);
          break;
      }
      Row d_hu(d), d_hv(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const Scalar s = sigmoid(tape.pooled_u(i));
        const Scalar th = std::tanh(tape.pooled_v(i));
        d_hu(i) = d_zh(i) * th * s * (Scalar(1) - s);
        d_hv(i) = d_zh(i) * s * (Scalar(1) - th * th);
      }
      pass_backward(store, second_, *tape.second_u, pooled_cotangent(d_hu, K, 2 * K), grads);
      pass_backward(store, second_, *tape.second_v, pooled_cotangent(d_hv, K, 2 * K), grads);
    } else {
      d_zf = d_ze;
    }

    if (cfg_.model.ablations.separate_encoding) {
      for (const auto& pt : tape.first) {
        pass_backward(store, first_, pt, pooled_cotangent(Row(Scalar(0.5) * d_zf), K, K), grads);
      }
    } else {
      pass_backward(store, first_, tape.first.front(), pooled_cotangent(d_zf, K, 2 * K), grads);
    }
  }

 private:
  static RepeatMixerConfig resolve(RepeatMixerConfig cfg) {
    if (cfg.model.ablations.no_segment_embedding) cfg.encoder.d_segment = 0;
    if (cfg.model.ablations.no_time_encoding) cfg.encoder.no_time_encoding = true;
    cfg.sampler.K = cfg.encoder.K;
    cfg.mixer.input_width = static_cast<int>(cfg.encoder.width());
    return cfg;
  }

  std::vector<Segment> row_segments(Segment top, Segment bottom) const {
    const auto K = static_cast<std::size_t>(cfg_.encoder.K);
    std::vector<Segment> rows(K, top);
    rows.insert(rows.end(), K, bottom);
    return rows;
  }

  // Cotangent of "mean of the first K rows" for a token_len-row output.
  static Mat pooled_cotangent(const Row& d_pooled, int K, int token_len) {
    Mat d = Mat::Zero(token_len, d_pooled.size());
    d.topRows(K).rowwise() = d_pooled / static_cast<Scalar>(K);
    return d;
  }

  void pass_backward(const ParamStore<Scalar>& store, const Mixer<Scalar>& mixer, const PassTape& pt,
                     const Mat& d_out, Gradients<Scalar>& grads) const {
    const Mat dx = mixer.backward(store, pt.mixer, d_out, grads);
    const int d_s = cfg_.encoder.d_segment;
    if (d_s == 0) return;
    for (std::size_t r = 0; r < pt.row_segment.size(); ++r) {
      if (!pt.mixer.mask[r]) continue;
      grads[segment_param(pt.row_segment[r])] += dx.row(static_cast<Eigen::Index>(r)).tail(d_s);
    }
  }

  RepeatMixerConfig cfg_;
  TimeEncoder time_;
  ParamId seg_a_, seg_b_;
  Mixer<Scalar> first_;
  Mixer<Scalar> second_;
  ParamId head_w1_, head_b1_, head_w2_, head_b2_;
};

}  // namespace repeatmix
