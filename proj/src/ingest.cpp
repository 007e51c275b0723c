#include "repeatmix/ingest.hpp"

#include "repeatmix/binary_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <string_view>
#include <unordered_map>

namespace repeatmix {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end && !s.empty();
}

bool parse_real(std::string_view s, double& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end && !s.empty();
}

struct RawRow {
  std::int64_t src;
  std::int64_t dst;
  double t;
  std::optional<double> label;
  std::vector<double> features;
};

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, ptr};
}

}  // namespace

TemporalGraph ingest_csv(std::istream& edges, const IngestConfig& config, std::istream* node_features) {
  if (config.edge_feature_dim < 0 || config.node_feature_dim < 0) {
    throw IngestError("feature dimensions must be non-negative", 0);
  }
  std::vector<RawRow> rows;
  std::optional<std::size_t> arity;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(edges, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view);
    if (first_content) {
      first_content = false;
      std::int64_t probe;
      if (config.header == HeaderMode::present ||
          (config.header == HeaderMode::detect && !parse_int(fields[0], probe))) {
        continue;
      }
    }
    if (fields.size() < 3) throw IngestError("expected at least src,dst,timestamp", line_no);
    RawRow row;
    if (!parse_int(fields[0], row.src) || !parse_int(fields[1], row.dst)) {
      throw IngestError("node ids must be integers", line_no);
    }
    if (!parse_real(fields[2], row.t) || !std::isfinite(row.t)) {
      throw IngestError("malformed timestamp '" + std::string(fields[2]) + "'", line_no);
    }
    if (row.t < 0.0) throw IngestError("negative timestamp", line_no);
    if (fields.size() >= 4 && !fields[3].empty()) {
      double label;
      if (!parse_real(fields[3], label)) throw IngestError("malformed label", line_no);
      row.label = label;
    }
    const std::size_t k = fields.size() > 4 ? fields.size() - 4 : 0;
    if (!arity) {
      arity = k;
    } else if (*arity != k) {
      throw IngestError("row has " + std::to_string(k) + " feature columns, expected " +
                            std::to_string(*arity),
                        line_no);
    }
    row.features.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      if (!parse_real(fields[4 + i], row.features[i])) {
        throw IngestError("malformed feature column " + std::to_string(i + 1), line_no);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IngestError("edge file contains no interactions", 0);

  std::stable_sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) { return a.t < b.t; });

  std::unordered_map<std::int64_t, NodeId> src_map;
  std::unordered_map<std::int64_t, NodeId> dst_map;
  NodeId node_count = 0;
  NodeId source_count = 0;
  if (config.bipartite) {
    std::set<std::int64_t> srcs;
    std::set<std::int64_t> dsts;
    for (const auto& r : rows) {
      srcs.insert(r.src);
      dsts.insert(r.dst);
    }
    for (auto id : srcs) src_map.emplace(id, node_count++);
    source_count = node_count;
    for (auto id : dsts) dst_map.emplace(id, node_count++);
  } else {
    std::set<std::int64_t> ids;
    for (const auto& r : rows) {
      ids.insert(r.src);
      ids.insert(r.dst);
    }
    for (auto id : ids) src_map.emplace(id, node_count++);
    source_count = node_count;
  }
  const auto& dst_lookup = config.bipartite ? dst_map : src_map;

  std::vector<Interaction> interactions;
  interactions.reserve(rows.size());
  FeatureTable edge_features = FeatureTable::Zero(static_cast<Eigen::Index>(rows.size()), config.edge_feature_dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    interactions.push_back({src_map.at(r.src), dst_lookup.at(r.dst), r.t, static_cast<EdgeIndex>(i), r.label});
    const auto copy = std::min<Eigen::Index>(config.edge_feature_dim, static_cast<Eigen::Index>(r.features.size()));
    for (Eigen::Index c = 0; c < copy; ++c) edge_features(static_cast<Eigen::Index>(i), c) = r.features[static_cast<std::size_t>(c)];
  }

  FeatureTable nodes = FeatureTable::Zero(node_count, config.node_feature_dim);
  if (node_features != nullptr) {
    line_no = 0;
    while (std::getline(*node_features, line)) {
      ++line_no;
      const auto view = trim(line);
      if (view.empty()) continue;
      const auto fields = split_fields(view);
      std::int64_t id;
      if (!parse_int(fields[0], id)) {
        if (line_no == 1) continue;  // header
        throw IngestError("node feature row needs an integer node id", line_no);
      }
      if (id < 0 || id >= node_count) throw IngestError("node feature row for unknown node", line_no);
      const auto copy = std::min<Eigen::Index>(config.node_feature_dim, static_cast<Eigen::Index>(fields.size()) - 1);
      for (Eigen::Index c = 0; c < copy; ++c) {
        double v;
        if (!parse_real(fields[static_cast<std::size_t>(c) + 1], v)) {
          throw IngestError("malformed node feature", line_no);
        }
        nodes(id, c) = v;
      }
    }
  }

  return TemporalGraph(std::move(interactions), node_count, std::move(nodes), std::move(edge_features),
                       config.bipartite, source_count);
}

void write_csv(const TemporalGraph& g, std::ostream& out) {
  const NodeId shift = g.bipartite() ? g.source_count() : 0;
  for (const auto& e : g.interactions()) {
    out << e.src << ',' << (e.dst - shift) << ',' << format_real(e.t) << ',';
    if (e.label) out << format_real(*e.label);
    for (Eigen::Index c = 0; c < g.edge_feature_dim(); ++c) out << ',' << format_real(g.edge_features()(e.edge_index, c));
    out << '\n';
  }
}

double repeat_behavior_ratio(const TemporalGraph& g) {
  if (g.interaction_count() == 0) return 0.0;
  std::set<std::pair<NodeId, NodeId>> seen;
  std::size_t repeats = 0;
  for (const auto& e : g.interactions()) {
    if (!seen.emplace(e.src, e.dst).second) ++repeats;
  }
  return static_cast<double>(repeats) / static_cast<double>(g.interaction_count());
}

void save_graph_cache(const TemporalGraph& g, std::ostream& out) {
  using binary::write;
  binary::write_magic(out, "RMXG");
  write<std::uint32_t>(out, kGraphCacheVersion);
  write<std::uint64_t>(out, static_cast<std::uint64_t>(g.node_count()));
  write<std::uint64_t>(out, g.interaction_count());
  write<std::uint64_t>(out, static_cast<std::uint64_t>(g.node_feature_dim()));
  write<std::uint64_t>(out, static_cast<std::uint64_t>(g.edge_feature_dim()));
  write<std::uint64_t>(out, static_cast<std::uint64_t>(g.source_count()));
  write<std::uint8_t>(out, g.bipartite() ? 1 : 0);
  for (const auto& e : g.interactions()) write<std::uint64_t>(out, static_cast<std::uint64_t>(e.src));
  for (const auto& e : g.interactions()) write<std::uint64_t>(out, static_cast<std::uint64_t>(e.dst));
  for (const auto& e : g.interactions()) write<double>(out, e.t);
  for (const auto& e : g.interactions()) {
    write<double>(out, e.label ? *e.label : std::numeric_limits<double>::quiet_NaN());
  }
  for (Eigen::Index i = 0; i < g.node_features().size(); ++i) write<double>(out, g.node_features().data()[i]);
  for (Eigen::Index i = 0; i < g.edge_features().size(); ++i) write<double>(out, g.edge_features().data()[i]);
  if (!out) throw binary::FormatError("failed writing graph cache");
}

void save_graph_cache(const TemporalGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw binary::FormatError("cannot open " + path.string() + " for writing");
  save_graph_cache(g, out);
}

TemporalGraph load_graph_cache(std::istream& in) {
  using binary::read;
  binary::expect_magic(in, "RMXG", "graph cache");
  const auto version = read<std::uint32_t>(in);
  if (version != kGraphCacheVersion) {
    throw binary::FormatError("graph cache version " + std::to_string(version) + " unsupported (expected " +
                              std::to_string(kGraphCacheVersion) + ")");
  }
  const auto node_count = read<std::uint64_t>(in);
  const auto edge_count = read<std::uint64_t>(in);
  const auto d_n = read<std::uint64_t>(in);
  const auto d_e = read<std::uint64_t>(in);
  const auto source_count = read<std::uint64_t>(in);
  const bool bipartite = read<std::uint8_t>(in) != 0;
  constexpr std::uint64_t kSanity = 1ull << 34;
  if (node_count > kSanity || edge_count > kSanity || d_n > 1u << 20 || d_e > 1u << 20) {
    throw binary::FormatError("graph cache header out of range");
  }
  std::vector<Interaction> interactions(edge_count);
  for (std::uint64_t i = 0; i < edge_count; ++i) {
    interactions[i].src = static_cast<NodeId>(read<std::uint64_t>(in));
    interactions[i].edge_index = static_cast<EdgeIndex>(i);
  }
  for (auto& e : interactions) e.dst = static_cast<NodeId>(read<std::uint64_t>(in));
  for (auto& e : interactions) e.t = read<double>(in);
  for (auto& e : interactions) {
    const double label = read<double>(in);
    if (!std::isnan(label)) e.label = label;
  }
  FeatureTable nodes(static_cast<Eigen::Index>(node_count), static_cast<Eigen::Index>(d_n));
  for (Eigen::Index i = 0; i < nodes.size(); ++i) nodes.data()[i] = read<double>(in);
  FeatureTable edges(static_cast<Eigen::Index>(edge_count), static_cast<Eigen::Index>(d_e));
  for (Eigen::Index i = 0; i < edges.size(); ++i) edges.data()[i] = read<double>(in);
  try {
    return TemporalGraph(std::move(interactions), static_cast<NodeId>(node_count), std::move(nodes),
                         std::move(edges), bipartite, static_cast<NodeId>(source_count));
  } catch (const GraphError& e) {
    throw binary::FormatError(std::string("corrupt graph cache: ") + e.what());
  }
}

TemporalGraph load_graph_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw binary::FormatError("cannot open graph cache " + path.string());
  return load_graph_cache(in);
}

}  // namespace repeatmix
