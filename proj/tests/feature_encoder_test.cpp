#include "repeatmix/feature_encoder.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace repeatmix;

TEST(TimeEncode, ZeroGapDefaultWidth) {
  const auto x = time_encode(0.0, TimeEncoderConfig{});
  ASSERT_EQ(x.size(), 100);
  for (Eigen::Index i = 0; i < x.size(); ++i) EXPECT_EQ(x(i), 0.1);
}

TEST(TimeEncode, DefaultsFollowWidth) {
  const auto c = TimeEncoderConfig::with_dim(100);
  EXPECT_DOUBLE_EQ(c.alpha, 10.0);
  EXPECT_DOUBLE_EQ(c.beta, 10.0);
}

TEST(TimeEncode, PiWithSmallWidth) {
  const auto x = time_encode(std::numbers::pi, {4, 2.0, 2.0});
  EXPECT_NEAR(x(0), -0.5, 1e-15);
  // remaining entries follow w_i = 2^(-(i-1)/2)
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(x(i), 0.5 * std::cos(std::pow(2.0, -i / 2.0) * std::numbers::pi), 1e-15);
  const auto z = time_encode(0.0, {4, 2.0, 2.0});
  for (int i = 0; i < 4; ++i) EXPECT_EQ(z(i), 0.5);
}

TEST(TimeEncode, BoundedAndContinuous) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> gap(0.0, 1e7);
  const TimeEncoder enc(TimeEncoderConfig::with_dim(100));
  const double bound = std::sqrt(1.0 / 100);
  const double max_w = *std::max_element(enc.frequencies().begin(), enc.frequencies().end());
  for (int i = 0; i < 1000; ++i) {
    const double dt = gap(rng);
    const auto a = enc.encode(dt);
    const double next = dt + 1e-3;
    const auto b = enc.encode(next);
    EXPECT_LE(a.cwiseAbs().maxCoeff(), bound);
    // |cos(x) - cos(y)| <= |x - y|, times the scale, plus argument rounding
    const double rounding = 4 * max_w * next * std::numeric_limits<double>::epsilon();
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), bound * (max_w * (next - dt) + rounding));
    EXPECT_EQ(a, enc.encode(dt));
  }
  EXPECT_THROW(enc.encode(-1.0), std::invalid_argument);
}

TEST(TimeEncode, InvalidConfig) {
  EXPECT_THROW(TimeEncoder({0, 1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(TimeEncoder({4, 0.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(TimeEncoder({4, 1.0, -1.0}), std::invalid_argument);
}

namespace {

EncoderConfig small_config(int K, Eigen::Index d_node, Eigen::Index d_edge) {
  EncoderConfig c;
  c.d_node = d_node;
  c.d_edge = d_edge;
  c.time = {4, 2.0, 2.0};
  c.d_segment = 3;
  c.K = K;
  return c;
}

TemporalGraph featured_graph() {
  std::vector<Interaction> xs{{0, 1, 1.0, 0, {}}, {0, 2, 2.0, 1, {}}, {1, 2, 3.0, 2, {}}};
  FeatureTable nodes(3, 2);
  nodes << 1, 2, 3, 4, 5, 6;
  FeatureTable edges(3, 1);
  edges << 10, 20, 30;
  return TemporalGraph(xs, 3, nodes, edges, false, 3);
}

}  // namespace

TEST(Assemble, EmptySampleIsAllZero) {
  const auto g = featured_graph();
  const auto cfg = small_config(4, 2, 1);
  const TimeEncoder enc(cfg.time);
  const Matrix<double> seg = Matrix<double>::Constant(1, 3, 0.7);
  const auto e = assemble<double>(g, NeighborSample{}, 5.0, Segment::A, seg, cfg, enc);
  EXPECT_EQ(e.matrix.rows(), 4);
  EXPECT_EQ(e.matrix.cols(), 2 + 1 + 4 + 3);
  EXPECT_TRUE(e.matrix.isZero(0.0));
  EXPECT_EQ(std::count(e.mask.begin(), e.mask.end(), true), 0);
}

TEST(Assemble, RowLayout) {
  const auto g = featured_graph();
  const auto cfg = small_config(3, 2, 1);
  const TimeEncoder enc(cfg.time);
  Matrix<double> seg(1, 3);
  seg << 0.1, 0.2, 0.3;
  const auto s = sample_recent(g, 0, 5.0, 3);  // (1, 1.0, 0), (2, 2.0, 1)
  const auto e = assemble<double>(g, s, 5.0, Segment::B, seg, cfg, enc);
  EXPECT_EQ(e.segment, Segment::B);
  EXPECT_EQ(e.mask, (RowMask{true, true, false}));
  Matrix<double> expect(1, 10);
  expect << 3, 4, 10, 0, 0, 0, 0, 0.1, 0.2, 0.3;
  expect.block(0, 3, 1, 4) = enc.encode(4.0);
  EXPECT_EQ(e.matrix.row(0), expect.row(0));
  EXPECT_EQ(e.matrix(1, 0), 5);
  EXPECT_EQ(e.matrix(1, 2), 20);
  EXPECT_TRUE(e.matrix.row(2).isZero(0.0));
}

TEST(Assemble, ZeroFeatureRowsCarryTimeAndSegment) {
  const auto g = fixtures::make_graph({{0, 1, 1.0}}, 2, 2, 2);
  const auto cfg = small_config(2, 2, 2);
  const TimeEncoder enc(cfg.time);
  const Matrix<double> seg = Matrix<double>::Constant(1, 3, -0.5);
  const auto e = assemble<double>(g, sample_recent(g, 0, 3.0, 2), 3.0, Segment::A, seg, cfg, enc);
  EXPECT_TRUE(e.matrix.row(0).head(4).isZero(0.0));
  EXPECT_EQ(e.matrix.row(0).segment(4, 4), enc.encode(2.0));
  EXPECT_EQ(e.matrix.row(0).tail(3), seg.row(0));
}

TEST(Assemble, NoTimeEncodingZeroesBlock) {
  const auto g = featured_graph();
  auto cfg = small_config(3, 2, 1);
  cfg.no_time_encoding = true;
  const TimeEncoder enc(cfg.time);
  const Matrix<double> seg = Matrix<double>::Constant(1, 3, 1.0);
  const auto e = assemble<double>(g, sample_recent(g, 0, 5.0, 3), 5.0, Segment::A, seg, cfg, enc);
  EXPECT_TRUE(e.matrix.block(0, 3, 3, 4).isZero(0.0));
  EXPECT_EQ(e.matrix(0, 0), 3);
}

TEST(Assemble, NoSegmentWidth) {
  const auto g = featured_graph();
  auto cfg = small_config(3, 2, 1);
  cfg.d_segment = 0;
  const TimeEncoder enc(cfg.time);
  const auto e = assemble<double>(g, sample_recent(g, 0, 5.0, 3), 5.0, Segment::A, Matrix<double>(1, 0), cfg, enc);
  EXPECT_EQ(e.matrix.cols(), 7);
}

TEST(Assemble, OrderFollowsSample) {
  const auto g = featured_graph();
  const auto cfg = small_config(2, 2, 1);
  const TimeEncoder enc(cfg.time);
  const Matrix<double> seg = Matrix<double>::Zero(1, 3);
  auto s = sample_recent(g, 0, 5.0, 2);
  const auto a = assemble<double>(g, s, 5.0, Segment::A, seg, cfg, enc);
  std::reverse(s.entries.begin(), s.entries.end());
  const auto b = assemble<double>(g, s, 5.0, Segment::A, seg, cfg, enc);
  EXPECT_EQ(a.matrix.row(0), b.matrix.row(1));
  EXPECT_EQ(a.matrix.row(1), b.matrix.row(0));
}

TEST(Assemble, Preconditions) {
  const auto g = featured_graph();
  const auto cfg = small_config(1, 2, 1);
  const TimeEncoder enc(cfg.time);
  const Matrix<double> seg = Matrix<double>::Zero(1, 3);
  EXPECT_THROW(assemble<double>(g, sample_recent(g, 0, 5.0, 2), 5.0, Segment::A, seg, cfg, enc), ShapeError);
  NeighborSample bad;
  bad.entries = {{7, 1.0, 0}};
  EXPECT_THROW(assemble<double>(g, bad, 5.0, Segment::A, seg, cfg, enc), std::out_of_range);
  NeighborSample late;
  late.entries = {{1, 5.0, 0}};
  EXPECT_THROW(assemble<double>(g, late, 5.0, Segment::A, seg, cfg, enc), std::invalid_argument);
}

TEST(ConcatPair, StacksRowsAndMasks) {
  EncodedSequence<double> a{Matrix<double>::Constant(5, 3, 1.0), RowMask{true, true, false, false, false}, Segment::A};
  EncodedSequence<double> b{Matrix<double>::Constant(5, 3, 2.0), RowMask{true, false, false, false, false}, Segment::B};
  const auto p = concat_pair(a, b);
  EXPECT_EQ(p.matrix.rows(), 10);
  EXPECT_TRUE((p.matrix.topRows(5).array() == 1.0).all());
  EXPECT_TRUE((p.matrix.bottomRows(5).array() == 2.0).all());
  EXPECT_EQ(p.mask, (RowMask{true, true, false, false, false, true, false, false, false, false}));
  EncodedSequence<double> z{Matrix<double>::Zero(2, 3), RowMask(2, false), Segment::A};
  EXPECT_TRUE(concat_pair(z, z).matrix.isZero(0.0));
  EncodedSequence<double> wide{Matrix<double>::Zero(2, 4), RowMask(2, false), Segment::B};
  EXPECT_THROW(concat_pair(z, wide), ShapeError);
}
