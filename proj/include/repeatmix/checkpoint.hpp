#pragma once

#include "repeatmix/binary_io.hpp"
#include "repeatmix/param_store.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace repeatmix {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix<double> value;
};

struct Checkpoint {
  std::string config_text;
  int epoch = 0;
  double best_val = 0.0;
  std::vector<NamedTensor> tensors;
};

template <typename Scalar>
Checkpoint make_checkpoint(const ParamStore<Scalar>& store, std::string config_text, int epoch, double best_val) {
  Checkpoint c{std::move(config_text), epoch, best_val, {}};
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& e = store.entry(i);
    c.tensors.push_back({e.name, e.value.template cast<double>()});
  }
  return c;
}

inline void save_checkpoint(const Checkpoint& c, std::ostream& out) {
  using binary::write;
  binary::write_magic(out, "RMXC");
  write<std::uint32_t>(out, kCheckpointVersion);
  binary::write_string(out, c.config_text);
  write<std::int64_t>(out, c.epoch);
  write<double>(out, c.best_val);
  write<std::uint64_t>(out, c.tensors.size());
  for (const auto& t : c.tensors) {
    binary::write_string(out, t.name);
    write<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.rows()));
    write<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.cols()));
    for (Eigen::Index i = 0; i < t.value.size(); ++i) write<double>(out, t.value.data()[i]);
  }
  if (!out) throw binary::FormatError("failed writing checkpoint");
}

inline Checkpoint load_checkpoint(std::istream& in) {
  using binary::read;
  binary::expect_magic(in, "RMXC", "checkpoint");
  const auto version = read<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw binary::FormatError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  c.config_text = binary::read_string(in);
  c.epoch = static_cast<int>(read<std::int64_t>(in));
  c.best_val = read<double>(in);
  const auto n = read<std::uint64_t>(in);
  if (n > 1u << 20) throw binary::FormatError("checkpoint tensor count out of range");
  for (std::uint64_t k = 0; k < n; ++k) {
    NamedTensor t;
    t.name = binary::read_string(in, 4096);
    const auto rows = read<std::uint64_t>(in);
    const auto cols = read<std::uint64_t>(in);
    if (rows > 1u << 24 || cols > 1u << 24 || rows * cols > 1ull << 31) {
      throw binary::FormatError("tensor '" + t.name + "' shape out of range");
    }
    t.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < t.value.size(); ++i) t.value.data()[i] = read<double>(in);
    c.tensors.push_back(std::move(t));
  }
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw binary::FormatError("cannot open " + path.string() + " for writing");
  save_checkpoint(c, out);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw binary::FormatError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

/// Copies tensors into `store`; names, count and shapes must all agree.
template <typename Scalar>
void restore(const Checkpoint& c, ParamStore<Scalar>& store) {
  if (c.tensors.size() != store.size()) {
    throw std::invalid_argument("checkpoint has " + std::to_string(c.tensors.size()) + " tensors, model expects " +
                                std::to_string(store.size()));
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& e = store.entry(i);
    const auto& t = c.tensors[i];
    if (t.name != e.name || t.value.rows() != e.value.rows() || t.value.cols() != e.value.cols()) {
      throw std::invalid_argument("checkpoint tensor '" + t.name + "' does not match model parameter '" + e.name + "'");
    }
    e.value = t.value.template cast<Scalar>();
  }
}

}  // namespace repeatmix
