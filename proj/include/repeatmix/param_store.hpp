#pragma once

#include "repeatmix/tensor.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace repeatmix {

struct ParamId {
  std::size_t index = 0;
  friend bool operator==(ParamId, ParamId) = default;
};

struct ParamInit {
  enum class Kind { uniform, zeros, ones };
  Kind kind = Kind::zeros;
  double bound = 0.0;

  /// uniform(-sqrt(1/fan_in), +sqrt(1/fan_in))
  static ParamInit fan_in(Eigen::Index fan_in) {
    return {Kind::uniform, std::sqrt(1.0 / static_cast<double>(std::max<Eigen::Index>(fan_in, 1)))};
  }
  static ParamInit uniform(double bound) { return {Kind::uniform, bound}; }
  static ParamInit zeros() { return {Kind::zeros, 0.0}; }
  static ParamInit ones() { return {Kind::ones, 0.0}; }
};

/// Gradient accumulators shaped like the parameters of one store.
template <typename Scalar>
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(std::vector<Matrix<Scalar>> tensors) : tensors_(std::move(tensors)) {}

  Matrix<Scalar>& operator[](ParamId id) { return tensors_[id.index]; }
  const Matrix<Scalar>& operator[](ParamId id) const { return tensors_[id.index]; }
  [[nodiscard]] std::size_t size() const { return tensors_.size(); }

  void set_zero() {
    for (auto& t : tensors_) t.setZero();
  }
  Gradients& operator+=(const Gradients& other) {
    for (std::size_t i = 0; i < tensors_.size(); ++i) tensors_[i] += other.tensors_[i];
    return *this;
  }
  Gradients& operator*=(Scalar s) {
    for (auto& t : tensors_) t *= s;
    return *this;
  }

 private:
  std::vector<Matrix<Scalar>> tensors_;
};

/// Named trainable tensors with their gradient buffers and Adam moments.
template <typename Scalar>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Matrix<Scalar> value;
    ParamInit init;
    Matrix<Scalar> first_moment;
    Matrix<Scalar> second_moment;
  };

  ParamId add(std::string name, Eigen::Index rows, Eigen::Index cols, ParamInit init) {
    if (index_.contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
    const ParamId id{entries_.size()};
    index_.emplace(name, id);
    Entry e{std::move(name), Matrix<Scalar>::Zero(rows, cols), init, Matrix<Scalar>::Zero(rows, cols),
            Matrix<Scalar>::Zero(rows, cols)};
    entries_.push_back(std::move(e));
    grads_dirty_ = true;
    return id;
  }

  /// Draws every tensor in registration order from one seeded stream.
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& e : entries_) {
      switch (e.init.kind) {
        case ParamInit::Kind::zeros: e.value.setZero(); break;
        case ParamInit::Kind::ones: e.value.setOnes(); break;
        case ParamInit::Kind::uniform: {
          std::uniform_real_distribution<double> dist(-e.init.bound, e.init.bound);
          for (Eigen::Index i = 0; i < e.value.size(); ++i) e.value.data()[i] = static_cast<Scalar>(dist(rng));
          break;
        }
      }
      e.first_moment.setZero();
      e.second_moment.setZero();
    }
    gradients().set_zero();
  }

  [[nodiscard]] const Matrix<Scalar>& value(ParamId id) const { return entries_[id.index].value; }
  Matrix<Scalar>& value(ParamId id) { return entries_[id.index].value; }

  [[nodiscard]] std::optional<ParamId> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  [[nodiscard]] ParamId at(const std::string& name) const {
    auto id = find(name);
    if (!id) throw std::out_of_range("no parameter named '" + name + "'");
    return *id;
  }

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] const Entry& entry(std::size_t i) const { return entries_[i]; }
  Entry& entry(std::size_t i) { return entries_[i]; }

  [[nodiscard]] Eigen::Index scalar_count() const {
    Eigen::Index n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  /// A fresh zeroed accumulator with this store's shapes.
  [[nodiscard]] Gradients<Scalar> make_gradients() const {
    std::vector<Matrix<Scalar>> t;
    t.reserve(entries_.size());
    for (const auto& e : entries_) t.push_back(Matrix<Scalar>::Zero(e.value.rows(), e.value.cols()));
    return Gradients<Scalar>(std::move(t));
  }

  /// The store's own gradient buffer, consumed by `adam_step`.
  Gradients<Scalar>& gradients() {
    if (grads_dirty_) {
      grads_ = make_gradients();
      grads_dirty_ = false;
    }
    return grads_;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, ParamId> index_;
  Gradients<Scalar> grads_;
  bool grads_dirty_ = true;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update from the store's gradient buffer (step >= 1),
/// which is zeroed afterwards.
template <typename Scalar>
void adam_step(ParamStore<Scalar>& store, const AdamConfig& cfg, std::int64_t step) {
  if (step < 1) throw std::invalid_argument("adam step counter must start at 1");
  auto& grads = store.gradients();
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!grads[ParamId{i}].allFinite()) {
      throw NumericError("non-finite gradient in tensor '" + store.entry(i).name + "'");
    }
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const auto b1 = static_cast<Scalar>(cfg.beta1);
  const auto b2 = static_cast<Scalar>(cfg.beta2);
  const auto lr = static_cast<Scalar>(cfg.lr);
  const auto eps = static_cast<Scalar>(cfg.eps);
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& e = store.entry(i);
    const auto& g = grads[ParamId{i}];
    e.first_moment = b1 * e.first_moment + (Scalar(1) - b1) * g;
    e.second_moment = b2 * e.second_moment + (Scalar(1) - b2) * g.cwiseAbs2();
    const auto m_hat = (e.first_moment.array() / static_cast<Scalar>(c1));
    const auto v_hat = (e.second_moment.array() / static_cast<Scalar>(c2));
    e.value.array() -= lr * m_hat / (v_hat.sqrt() + eps);
  }
  grads.set_zero();
}

}  // namespace repeatmix
