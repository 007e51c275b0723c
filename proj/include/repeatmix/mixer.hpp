#pragma once

#include "repeatmix/param_store.hpp"
#include "repeatmix/tensor.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace repeatmix {

using RowMask = std::vector<bool>;

struct MixerConfig {
  int layers = 2;
  int d_model = 172;
  double theta_o = 0.4;  ///< token-FFN hidden width / d_model
  double theta_c = 4.0;  ///< channel-FFN hidden width / d_model
  int token_len = 64;    ///< rows of the input (2K for paired sequences)
  int input_width = 0;   ///< columns of the input
  double ln_eps = 1e-5;

  [[nodiscard]] int token_hidden() const { return static_cast<int>(std::lround(theta_o * d_model)); }
  [[nodiscard]] int channel_hidden() const { return static_cast<int>(std::lround(theta_c * d_model)); }

  void validate() const {
    if (layers < 0) throw std::invalid_argument("mixer layer count must be >= 0");
    if (d_model < 1 || token_len < 1 || input_width < 1) {
      throw std::invalid_argument("mixer d_model, token_len and input_width must be >= 1");
    }
    if (token_hidden() < 1 || channel_hidden() < 1) {
      throw std::invalid_argument("mixer hidden widths round to zero; increase theta_o/theta_c or d_model");
    }
  }
};

/// MLP-Mixer encoder over a (token_len x input_width) matrix:
///   H0 = X W_e
///   O  = H + FFN_token(LN_token(H))      LN and FFN along the token axis
///   H' = O + FFN_channel(LN_channel(O))  LN and FFN along the channel axis
/// with FFN(I) = GeLU(I W1 + b1) W2 + b2 and masked rows zeroed after every
/// layer.
template <typename Scalar>
class Mixer {
 public:
  using Mat = Matrix<Scalar>;

  struct LayerParams {
    ParamId tok_gamma, tok_beta, tok_w1, tok_b1, tok_w2, tok_b2;
    ParamId ch_gamma, ch_beta, ch_w1, ch_b1, ch_w2, ch_b2;
  };

  struct LayerTape {
    Mat in;
    Mat tok_xhat;    // normalized input, per-column statistics
    Mat tok_rstd;    // 1 x d_model
    Mat tok_in;      // LN_token output transposed: d_model x token_len
    Mat tok_pre;     // d_model x token_hidden
    Mat tok_act;
    Mat mid;         // O
    Mat ch_xhat;     // per-row statistics
    Mat ch_rstd;     // token_len x 1
    Mat ch_in;       // LN_channel output
    Mat ch_pre;      // token_len x channel_hidden
    Mat ch_act;
  };

  struct Tape {
    Mat input;
    RowMask mask;
    std::vector<LayerTape> layers;
  };

  struct Output {
    Mat output;
    Tape tape;
  };

  Mixer() = default;

  Mixer(const std::string& prefix, const MixerConfig& cfg, ParamStore<Scalar>& store) : cfg_(cfg) {
    cfg_.validate();
    const Eigen::Index T = cfg_.token_len, D = cfg_.d_model;
    const Eigen::Index ho = cfg_.token_hidden(), hc = cfg_.channel_hidden();
    w_e_ = store.add(prefix + "w_e", cfg_.input_width, D, ParamInit::fan_in(cfg_.input_width));
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = prefix + "layer" + std::to_string(l) + ".";
      LayerParams lp;
      lp.tok_gamma = store.add(p + "token_ln.gamma", 1, T, ParamInit::ones());
      lp.tok_beta = store.add(p + "token_ln.beta", 1, T, ParamInit::zeros());
      lp.tok_w1 = store.add(p + "token_ffn.w1", T, ho, ParamInit::fan_in(T));
      lp.tok_b1 = store.add(p + "token_ffn.b1", 1, ho, ParamInit::zeros());
      lp.tok_w2 = store.add(p + "token_ffn.w2", ho, T, ParamInit::fan_in(ho));
      lp.tok_b2 = store.add(p + "token_ffn.b2", 1, T, ParamInit::zeros());
      lp.ch_gamma = store.add(p + "channel_ln.gamma", 1, D, ParamInit::ones());
      lp.ch_beta = store.add(p + "channel_ln.beta", 1, D, ParamInit::zeros());
      lp.ch_w1 = store.add(p + "channel_ffn.w1", D, hc, ParamInit::fan_in(D));
      lp.ch_b1 = store.add(p + "channel_ffn.b1", 1, hc, ParamInit::zeros());
      lp.ch_w2 = store.add(p + "channel_ffn.w2", hc, D, ParamInit::fan_in(hc));
      lp.ch_b2 = store.add(p + "channel_ffn.b2", 1, D, ParamInit::zeros());
      layers_.push_back(lp);
    }
  }

  [[nodiscard]] const MixerConfig& config() const { return cfg_; }
  [[nodiscard]] ParamId input_projection() const { return w_e_; }
  [[nodiscard]] const std::vector<LayerParams>& layer_params() const { return layers_; }

  Output forward(const ParamStore<Scalar>& store, const Mat& x, const RowMask& mask) const {
    require_shape(x, cfg_.token_len, cfg_.input_width, "mixer input");
    if (mask.size() != static_cast<std::size_t>(cfg_.token_len)) throw ShapeError("mixer mask length mismatch");
    Output out;
    out.tape.input = x;
    out.tape.mask = mask;
    Mat h;
    h.noalias() = x * store.value(w_e_);
    out.tape.layers.reserve(layers_.size());
    for (const auto& lp : layers_) {
      LayerTape lt;
      lt.in = h;
      token_forward(store, lp, lt);
      channel_forward(store, lp, lt);
      h = lt.mid;
      h.noalias() += ffn_out(lt.ch_act, store.value(lp.ch_w2), store.value(lp.ch_b2));
      zero_masked(h, mask);
      out.tape.layers.push_back(std::move(lt));
    }
    require_finite(h, "mixer output");
    out.output = std::move(h);
    return out;
  }

  /// Accumulates parameter gradients into `grads` and returns d(input).
  Mat backward(const ParamStore<Scalar>& store, const Tape& tape, const Mat& d_out, Gradients<Scalar>& grads) const {
    require_shape(d_out, cfg_.token_len, cfg_.d_model, "mixer cotangent");
    if (tape.layers.size() != layers_.size()) throw ShapeError("mixer tape does not match the layer stack");
    Mat dh = d_out;
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const auto& lp = layers_[li];
      const auto& lt = tape.layers[li];
      zero_masked(dh, tape.mask);
      dh = channel_backward(store, lp, lt, dh, grads);
      dh = token_backward(store, lp, lt, dh, grads);
    }
    grads[w_e_].noalias() += tape.input.transpose() * dh;
    Mat dx;
    dx.noalias() = dh * store.value(w_e_).transpose();
    return dx;
  }

 private:
  static Mat ffn_out(const Mat& act, const Mat& w2, const Mat& b2) {
    Mat y;
    y.noalias() = act * w2;
    y.rowwise() += b2.row(0);
    return y;
  }

  static void zero_masked(Mat& m, const RowMask& mask) {
    for (std::size_t r = 0; r < mask.size(); ++r) {
      if (!mask[r]) m.row(static_cast<Eigen::Index>(r)).setZero();
    }
  }

  void token_forward(const ParamStore<Scalar>& store, const LayerParams& lp, LayerTape& lt) const {
    const Mat& h = lt.in;
    const Mat mu = h.colwise().mean();
    Mat centered = h.rowwise() - mu.row(0);
    const Mat var = centered.cwiseAbs2().colwise().mean();
    lt.tok_rstd = (var.array() + static_cast<Scalar>(cfg_.ln_eps)).rsqrt().matrix();
    lt.tok_xhat = (centered.array().rowwise() * lt.tok_rstd.row(0).array()).matrix();
    const auto gamma = store.value(lp.tok_gamma).row(0).transpose();
    const auto beta = store.value(lp.tok_beta).row(0).transpose();
    Mat normed = (lt.tok_xhat.array().colwise() * gamma.array()).matrix();
    normed.colwise() += beta;
    lt.tok_in = normed.transpose();
    lt.tok_pre.noalias() = lt.tok_in * store.value(lp.tok_w1);
    lt.tok_pre.rowwise() += store.value(lp.tok_b1).row(0);
    lt.tok_act = gelu_of(lt.tok_pre);
    lt.mid = h;
    lt.mid.noalias() += ffn_out(lt.tok_act, store.value(lp.tok_w2), store.value(lp.tok_b2)).transpose();
  }

  void channel_forward(const ParamStore<Scalar>& store, const LayerParams& lp, LayerTape& lt) const {
    const Mat& o = lt.mid;
    const Mat mu = o.rowwise().mean();
    Mat centered = o.colwise() - mu.col(0);
    const Mat var = centered.cwiseAbs2().rowwise().mean();
    lt.ch_rstd = (var.array() + static_cast<Scalar>(cfg_.ln_eps)).rsqrt().matrix();
    lt.ch_xhat = (centered.array().colwise() * lt.ch_rstd.col(0).array()).matrix();
    lt.ch_in = (lt.ch_xhat.array().rowwise() * store.value(lp.ch_gamma).row(0).array()).matrix();
    lt.ch_in.rowwise() += store.value(lp.ch_beta).row(0);
    lt.ch_pre.noalias() = lt.ch_in * store.value(lp.ch_w1);
    lt.ch_pre.rowwise() += store.value(lp.ch_b1).row(0);
    lt.ch_act = gelu_of(lt.ch_pre);
  }

  Mat channel_backward(const ParamStore<Scalar>& store, const LayerParams& lp, const LayerTape& lt, const Mat& dh,
                       Gradients<Scalar>& grads) const {
    grads[lp.ch_w2].noalias() += lt.ch_act.transpose() * dh;
    grads[lp.ch_b2] += dh.colwise().sum();
    Mat dpre;
    dpre.noalias() = dh * store.value(lp.ch_w2).transpose();
    dpre.array() *= gelu_derivative_of(lt.ch_pre).array();
    grads[lp.ch_w1].noalias() += lt.ch_in.transpose() * dpre;
    grads[lp.ch_b1] += dpre.colwise().sum();
    Mat dnormed;
    dnormed.noalias() = dpre * store.value(lp.ch_w1).transpose();
    grads[lp.ch_gamma] += dnormed.cwiseProduct(lt.ch_xhat).colwise().sum();
    grads[lp.ch_beta] += dnormed.colwise().sum();
    const Mat dxhat = (dnormed.array().rowwise() * store.value(lp.ch_gamma).row(0).array()).matrix();
    // Row-wise LayerNorm backward.
    const Mat mean_d = dxhat.rowwise().mean();
    const Mat mean_dx = dxhat.cwiseProduct(lt.ch_xhat).rowwise().mean();
    Mat inner = dxhat.colwise() - mean_d.col(0);
    inner -= (lt.ch_xhat.array().colwise() * mean_dx.col(0).array()).matrix();
    Mat d_mid = dh;
    d_mid += (inner.array().colwise() * lt.ch_rstd.col(0).array()).matrix();
    return d_mid;
  }

  Mat token_backward(const ParamStore<Scalar>& store, const LayerParams& lp, const LayerTape& lt, const Mat& d_mid,
                     Gradients<Scalar>& grads) const {
    const Mat dy = d_mid.transpose();  // d_model x token_len
    grads[lp.tok_w2].noalias() += lt.tok_act.transpose() * dy;
    grads[lp.tok_b2] += dy.colwise().sum();
    Mat dpre;
    dpre.noalias() = dy * store.value(lp.tok_w2).transpose();
    dpre.array() *= gelu_derivative_of(lt.tok_pre).array();
    grads[lp.tok_w1].noalias() += lt.tok_in.transpose() * dpre;
    grads[lp.tok_b1] += dpre.colwise().sum();
    Mat d_in;
    d_in.noalias() = dpre * store.value(lp.tok_w1).transpose();  // d_model x token_len
    const Mat dnormed = d_in.transpose();                         // token_len x d_model
    grads[lp.tok_gamma] += dnormed.cwiseProduct(lt.tok_xhat).rowwise().sum().transpose();
    grads[lp.tok_beta] += dnormed.rowwise().sum().transpose();
    const auto gamma = store.value(lp.tok_gamma).row(0).transpose();
    const Mat dxhat = (dnormed.array().colwise() * gamma.array()).matrix();
    // Column-wise LayerNorm backward.
    const Mat mean_d = dxhat.colwise().mean();
    const Mat mean_dx = dxhat.cwiseProduct(lt.tok_xhat).colwise().mean();
    Mat inner = dxhat.rowwise() - mean_d.row(0);
    inner -= (lt.tok_xhat.array().rowwise() * mean_dx.row(0).array()).matrix();
    Mat dh = d_mid;
    dh += (inner.array().rowwise() * lt.tok_rstd.row(0).array()).matrix();
    return dh;
  }

  MixerConfig cfg_;
  ParamId w_e_;
  std::vector<LayerParams> layers_;
};

}  // namespace repeatmix
