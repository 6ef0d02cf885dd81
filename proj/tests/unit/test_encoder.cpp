#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "echoea/checkpoint.hpp"
#include "echoea/encoder.hpp"
#include "echoea/error.hpp"
#include "echoea/synth.hpp"
#include "support.hpp"

using namespace echoea;
using echoea::testing::make_kg;
using echoea::testing::random_matrix;

namespace {

EncoderConfig small_config(int d_e = 4, int d_r = 3) {
  EncoderConfig c;
  c.d_e = d_e;
  c.d_r = d_r;
  return c;
}

HighwayGate<Matrix> zero_gate(int d) { return {Matrix::Zero(d, d), Matrix::Zero(1, d)}; }

}  // namespace

TEST(Gcn, SingleEntityIsIdentity) {
  auto adj = build_adjacency(make_kg(1, {}));
  Matrix x(1, 2);
  x << 3, -1;
  EXPECT_TRUE(gcn_forward(x, adj, Matrix::Identity(2, 2), Activation::kIdentity).isApprox(x));
}

TEST(Gcn, TwoNodesAverage) {
  auto adj = build_adjacency(make_kg(2, {{0, 0, 1}}));
  Matrix x(2, 2);
  x << 2, 0, 0, 2;
  Matrix out = gcn_forward(x, adj, Matrix::Identity(2, 2), Activation::kIdentity);
  EXPECT_TRUE(out.isApprox(Matrix::Ones(2, 2), 1e-12));
}

TEST(Gcn, ConstantRowsOnThreeCycleAreFixed) {
  auto adj = build_adjacency(make_kg(3, {{0, 0, 1}, {1, 0, 2}, {2, 0, 0}}));
  Matrix x(3, 2);
  x.rowwise() = Eigen::RowVector2d(0.7, -1.2);
  EXPECT_TRUE(gcn_forward(x, adj, Matrix::Identity(2, 2), Activation::kIdentity).isApprox(x, 1e-12));
}

TEST(Gcn, ShapeMismatchThrows) {
  auto adj = build_adjacency(make_kg(2, {}));
  EXPECT_THROW(gcn_forward(Matrix::Zero(3, 2), adj, Matrix::Identity(2, 2), Activation::kTanh),
               ArgumentError);
  EXPECT_THROW(gcn_forward(Matrix::Zero(2, 2), adj, Matrix::Identity(3, 3), Activation::kTanh),
               ArgumentError);
}

TEST(Highway, FixedPointAndMidpoint) {
  std::mt19937_64 rng(2);
  Matrix a = random_matrix(3, 4, rng);
  Matrix b = random_matrix(3, 4, rng);
  HighwayGate<Matrix> gate{random_matrix(4, 4, rng), random_matrix(1, 4, rng)};
  EXPECT_TRUE(highway(a, a, gate).isApprox(a));
  EXPECT_TRUE(highway(a, b, zero_gate(4)).isApprox((a + b) / 2));
  EXPECT_THROW(highway(a, Matrix::Zero(2, 4), gate), ArgumentError);
}

TEST(Highway, OutputBetweenInputs) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    Matrix a = random_matrix(5, 3, rng, -3, 3);
    Matrix b = random_matrix(5, 3, rng, -3, 3);
    HighwayGate<Matrix> gate{random_matrix(3, 3, rng, -2, 2), random_matrix(1, 3, rng)};
    Matrix o = highway(a, b, gate);
    EXPECT_TRUE(((o.array() >= a.cwiseMin(b).array() - 1e-15) &&
                 (o.array() <= a.cwiseMax(b).array() + 1e-15))
                    .all());
  }
}

TEST(Gat, IdenticalNeighboursGetUniformWeights) {
  auto adj = build_adjacency(make_kg(4, {{0, 0, 1}, {0, 0, 2}, {0, 0, 3}}));
  Matrix x = Matrix::Ones(4, 3);
  std::mt19937_64 rng(1);
  auto out = gat_forward(x, gat_neighborhoods(adj), random_matrix(6, 1, rng));
  // Row 0 has 4 neighbours including itself.
  for (int e = 0; e < 4; ++e) EXPECT_NEAR(out.attention(e, 0), 0.25, 1e-12);
}

TEST(Gat, SingleNeighbourCopiesIt) {
  Neighborhoods nb = Neighborhoods::from_lists({{1}, {0}});
  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  std::mt19937_64 rng(1);
  auto out = gat_forward(x, nb, random_matrix(4, 1, rng));
  EXPECT_TRUE(out.output.row(0).isApprox(x.row(1)));
  EXPECT_TRUE(out.output.row(1).isApprox(x.row(0)));
}

TEST(Gat, StarRowsSumToOneInsideConvexHull) {
  auto adj = build_adjacency(make_kg(3, {{0, 0, 1}, {0, 0, 2}}));
  auto nb = gat_neighborhoods(adj);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    Matrix x = random_matrix(3, 1, rng, -2, 2);
    auto out = gat_forward(x, nb, random_matrix(2, 1, rng, -2, 2));
    const auto& off = *nb.offsets;
    for (int i = 0; i < 3; ++i) {
      double s = 0, lo = 1e9, hi = -1e9;
      for (int e = off[i]; e < off[i + 1]; ++e) {
        s += out.attention(e, 0);
        lo = std::min(lo, x((*nb.sources)[e], 0));
        hi = std::max(hi, x((*nb.sources)[e], 0));
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
      EXPECT_GE(out.output(i, 0), lo - 1e-12);
      EXPECT_LE(out.output(i, 0), hi + 1e-12);
    }
  }
}

TEST(Gat, EmptyNeighbourhoodGetsSelfLoop) {
  Neighborhoods nb = Neighborhoods::from_lists({{}, {0}});
  Matrix x(2, 1);
  x << 5, 7;
  auto out = gat_forward(x, nb, Matrix::Ones(2, 1));
  EXPECT_DOUBLE_EQ(out.output(0, 0), 5.0);
}

TEST(Pan, EmptyPipelineReturnsInput) {
  auto kg = make_kg(3, {{0, 0, 1}});
  auto c = small_config();
  c.pan_gcn_layers = 0;
  c.pan_gat_layers = 0;
  auto g = EncoderGraph::build(kg, build_adjacency(kg));
  std::mt19937_64 rng(1);
  Matrix x = random_matrix(3, 4, rng);
  EXPECT_EQ(pan_forward(x, g, initialize_params(c, 1), c, Mode::kInfer, nullptr), x);
}

TEST(Pan, InferenceDeterministicAndTrainReplayable) {
  auto kg = make_kg(4, {{0, 0, 1}, {1, 1, 2}, {3, 0, 2}});
  auto c = small_config();
  c.dropout_rate = 0.5;
  auto g = EncoderGraph::build(kg, build_adjacency(kg));
  auto p = initialize_params(c, 3);
  std::mt19937_64 rng(1);
  Matrix x = random_matrix(4, 4, rng);
  EXPECT_EQ(pan_forward(x, g, p, c, Mode::kInfer, nullptr), pan_forward(x, g, p, c, Mode::kInfer, nullptr));
  Rng r1(42), r2(42), r3(43);
  Matrix t1 = pan_forward(x, g, p, c, Mode::kTrain, &r1);
  EXPECT_EQ(t1, pan_forward(x, g, p, c, Mode::kTrain, &r2));
  EXPECT_NE(t1, pan_forward(x, g, p, c, Mode::kTrain, &r3));
}

namespace {

/// Toy with relation 0 = {(0,1), (2,1)} and relation 1 = {(1,2), (0,2)},
/// identity projections, d_e = d_r = 2.
struct EchoToy {
  KnowledgeGraph kg = make_kg(3, {{0, 0, 1}, {2, 0, 1}, {1, 1, 2}, {0, 1, 2}});
  EncoderGraph graph = EncoderGraph::build(kg, build_adjacency(kg));
  EncoderConfig config = small_config(2, 2);
  ModelParams params = initialize_params(config, 1);
  Matrix x{{1, 0}, {0, 1}, {2, 1}};

  EchoToy() {
    params.head_proj = Matrix::Identity(2, 2);
    params.tail_proj = Matrix::Identity(2, 2);
    params.relation_attention = Matrix{{0.5}, {-0.3}, {0.2}, {0.1}};
    params.echo_attention[0] = Matrix{{0.3}, {-0.2}, {0.4}, {0.6}};
  }
};

}  // namespace

TEST(RelationRepr, TwoTripleSoftmaxMatchesOracle) {
  EchoToy t;
  auto r = relation_repr(t.x, t.graph, t.params, t.config);
  EXPECT_NEAR(r.head(0, 0), 1.5498339973124777, 1e-12);
  EXPECT_NEAR(r.head(0, 1), 0.54983399731247784, 1e-12);
  EXPECT_NEAR(r.tail(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(r.tail(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(r.head(1, 0), 0.6899744811276125, 1e-12);
  EXPECT_NEAR(r.tail(1, 0), 2.0, 1e-12);
}

TEST(RelationRepr, SingleTripleAndSharedHeadFeature) {
  auto kg = make_kg(3, {{0, 0, 1}, {1, 1, 2}, {2, 1, 0}});
  auto g = EncoderGraph::build(kg, build_adjacency(kg));
  auto c = small_config(3, 2);
  auto p = initialize_params(c, 4);
  std::mt19937_64 rng(1);
  Matrix x = random_matrix(3, 3, rng);
  auto r = relation_repr(x, g, p, c);
  EXPECT_TRUE(r.head.row(0).isApprox(x.row(0) * p.head_proj));

  x.row(1) = x.row(2);  // both heads of relation 1 share one feature
  r = relation_repr(x, g, p, c);
  EXPECT_TRUE(r.head.row(1).isApprox(x.row(1) * p.head_proj, 1e-12));
}

TEST(RelationRepr, UnusedRelationIsZero) {
  KnowledgeGraphBuilder b;
  b.add_entity(0, "a");
  b.add_entity(1, "b");
  b.intern_relation(0);
  b.intern_relation(1);
  b.add_rel_triple(0, 0, 1);
  auto kg = std::move(b).build();
  auto c = small_config(2, 2);
  auto r = relation_repr(Matrix::Ones(2, 2), EncoderGraph::build(kg, build_adjacency(kg)),
                         initialize_params(c, 1), c);
  EXPECT_TRUE(r.head.row(1).isZero());
  EXPECT_TRUE(r.tail.row(1).isZero());
}

TEST(Echo, TwoRelationMixMatchesOracle) {
  EchoToy t;
  auto r = relation_repr(t.x, t.graph, t.params, t.config);
  auto e = echo_forward(t.x, r, t.graph, t.params, t.config);
  EXPECT_NEAR(e.parts[0](0, 0), 1.2227390021488973, 1e-12);
  EXPECT_NEAR(e.parts[0](0, 1), 0.45860961516738019, 1e-12);
  EXPECT_EQ(e.output.cols(), 2 + 2 * 2);
}

TEST(Echo, SingleRelationEchoesItExactly) {
  EchoToy t;
  auto r = relation_repr(t.x, t.graph, t.params, t.config);
  auto e = echo_forward(t.x, r, t.graph, t.params, t.config);
  // Entity 2 heads relation 0 only.
  EXPECT_TRUE(e.parts[0].row(2).isApprox(r.head.row(0)));
  EXPECT_TRUE(e.parts[1].row(2).isApprox(r.tail.row(0)));
}

TEST(Echo, IsolatedEntityGetsZeroParts) {
  auto kg = make_kg(3, {{0, 0, 1}});
  auto g = EncoderGraph::build(kg, build_adjacency(kg));
  auto c = small_config(2, 2);
  auto p = initialize_params(c, 1);
  Matrix x = Matrix::Ones(3, 2);
  auto e = echo_forward(x, relation_repr(x, g, p, c), g, p, c);
  EXPECT_TRUE(e.output.row(2).tail(4).isZero());
}

TEST(Can, DoublesWidthAndMatchesStandaloneGat) {
  auto kg = make_kg(3, {{0, 0, 1}, {1, 0, 2}});
  auto g = EncoderGraph::build(kg, build_adjacency(kg));
  auto c = small_config(2, 1);
  auto p = initialize_params(c, 9);
  std::mt19937_64 rng(3);
  Matrix x = random_matrix(3, c.echo_width(), rng);
  Matrix out = can_forward(x, g, p, c);
  ASSERT_EQ(out.cols(), 2 * x.cols());
  EXPECT_EQ(out.leftCols(x.cols()), x);
  EXPECT_EQ(out.rightCols(x.cols()), gat_forward(x, g.gat, p.can_attention, c.leaky_slope).output);
}

TEST(Can, SingleEntityDuplicates) {
  auto kg = make_kg(1, {});
  auto g = EncoderGraph::build(kg, build_adjacency(kg));
  auto c = small_config(2, 1);
  Matrix x{{1, 2, 3, 4}};
  Matrix out = can_forward(x, g, initialize_params(c, 1), c);
  EXPECT_TRUE(out.leftCols(4).isApprox(x));
  EXPECT_TRUE(out.rightCols(4).isApprox(x));
}

TEST(Encode, WidthsFollowSwitches) {
  auto kg = make_kg(4, {{0, 0, 1}, {1, 1, 2}, {2, 0, 3}});
  std::mt19937_64 rng(1);
  for (int mask = 0; mask < 8; ++mask) {
    auto c = small_config(4, 2);
    c.use_pan = mask & 1;
    c.use_en = mask & 2;
    c.use_can = mask & 4;
    Matrix out = encode(kg, random_matrix(4, 4, rng), initialize_params(c, 1), c, Mode::kInfer);
    EXPECT_EQ(out.cols(), c.output_width());
  }
  auto c = small_config(4, 2);
  EXPECT_EQ(c.output_width(), 2 * (4 + 2 * 2));
}

TEST(Encode, RejectsWrongInputWidth) {
  auto kg = make_kg(2, {{0, 0, 1}});
  auto c = small_config(4, 2);
  EXPECT_THROW(encode(kg, Matrix::Zero(2, 3), initialize_params(c, 1), c, Mode::kInfer),
               ArgumentError);
}

TEST(Encode, EquivariantUnderTheSynthBijection) {
  SynthOptions o;
  o.n_entities = 30;
  o.noise = 0.0;
  o.embedding_dim = 6;
  auto d = synth_kg_pair(o);
  auto c = small_config(6, 3);
  auto p = initialize_params(c, 5);
  // Same features on both sides, moved by the ground-truth bijection.
  Matrix x2(d.kg2.num_entities(), 6);
  for (const auto& pr : d.seeds.pairs()) x2.row(pr.right) = d.embeddings1->row(pr.left);
  Matrix o1 = encode(d.kg1, *d.embeddings1, p, c, Mode::kInfer);
  Matrix o2 = encode(d.kg2, x2, p, c, Mode::kInfer);
  double worst = 0;
  for (const auto& pr : d.seeds.pairs())
    worst = std::max(worst, (o1.row(pr.left) - o2.row(pr.right)).cwiseAbs().maxCoeff());
  EXPECT_LT(worst, 1e-5);
}

TEST(Config, ValidatesDims) {
  auto c = small_config();
  c.d_r = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = small_config();
  c.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Params, InitialShapes) {
  auto c = small_config(5, 2);
  auto p = initialize_params(c, 1);
  EXPECT_EQ(p.gcn_weights.size(), 1U);
  EXPECT_EQ(p.gcn_weights[0].rows(), 5);
  EXPECT_EQ(p.gat_attention.size(), 2U);
  EXPECT_EQ(p.gat_attention[0].rows(), 10);
  EXPECT_EQ(p.echo_attention[0].rows(), 7);
  EXPECT_EQ(p.can_attention.rows(), 2 * c.echo_width());
  EXPECT_NO_THROW(check_shapes(p, c));
  p.head_proj = Matrix::Zero(1, 1);
  EXPECT_THROW(check_shapes(p, c), ArgumentError);
}

TEST(Checkpoint, RoundTripsAsFloat32) {
  auto c = small_config(3, 2);
  c.activation = Activation::kRelu;
  Checkpoint ck{c, initialize_params(c, 7), {}};
  ck.extras["embeddings.kg1"] = Matrix::Constant(2, 3, 0.5);
  auto path = std::filesystem::temp_directory_path() / "echoea_ck.bin";
  save_checkpoint(path, ck);
  auto back = load_checkpoint(path);
  EXPECT_EQ(back.config.d_e, 3);
  EXPECT_EQ(back.config.activation, Activation::kRelu);
  EXPECT_EQ(back.extras.at("embeddings.kg1"), ck.extras.at("embeddings.kg1"));
  std::vector<Matrix> a, b;
  ck.params.for_each([&](const std::string&, const Matrix& m) { a.push_back(m); });
  back.params.for_each([&](const std::string&, const Matrix& m) { b.push_back(m); });
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[i].cast<float>().cast<double>().isApprox(b[i])) << i;
  }
}

TEST(Checkpoint, RejectsGarbage) {
  auto path = std::filesystem::temp_directory_path() / "echoea_bad.bin";
  std::ofstream(path) << "not a checkpoint";
  EXPECT_THROW(load_checkpoint(path), Error);
  EXPECT_THROW(load_checkpoint("/nonexistent/ck.bin"), LoadError);
}
