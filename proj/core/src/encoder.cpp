#include "echoea/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "echoea/error.hpp"

namespace echoea {

using autodiff::Tape;

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

const char* to_string(Activation activation) noexcept {
  switch (activation) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "identity";
}

void EncoderConfig::validate() const {
  std::vector<std::string> bad;
  if (d_e <= 0) bad.push_back("d_e");
  if (d_r <= 0) bad.push_back("d_r");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) bad.push_back("dropout_rate");
  if (pan_gcn_layers < 0) bad.push_back("pan_gcn_layers");
  if (pan_gat_layers < 0) bad.push_back("pan_gat_layers");
  if (!(leaky_slope >= 0.0)) bad.push_back("leaky_slope");
  if (!bad.empty()) {
    throw ValidationError(fmt::format("invalid encoder config: {}", fmt::join(bad, ", ")));
  }
}

namespace {

Matrix uniform(Eigen::Index rows, Eigen::Index cols, double limit, Rng& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  return m;
}

HighwayGate<Matrix> make_gate(int d, Rng& rng) {
  return {uniform(d, d, 1.0 / std::sqrt(static_cast<double>(d)), rng), Matrix::Zero(1, d)};
}

Matrix attention_vector(int length, Rng& rng) {
  return uniform(length, 1, 1.0 / std::sqrt(static_cast<double>(length)), rng);
}

}  // namespace

ModelParams initialize_params(const EncoderConfig& config, std::uint64_t rng_seed) {
  config.validate();
  Rng rng(rng_seed);
  const int de = config.d_e;
  const int dr = config.d_r;
  ModelParams p;
  for (int l = 0; l < config.pan_gcn_layers; ++l) {
    p.gcn_weights.push_back(Matrix::Identity(de, de) + uniform(de, de, 0.01, rng));
  }
  p.gcn_gate = make_gate(de, rng);
  for (int l = 0; l < config.pan_gat_layers; ++l) {
    p.gat_attention.push_back(attention_vector(2 * de, rng));
    p.gat_gates.push_back(make_gate(de, rng));
  }
  const double proj_limit = 1.0 / std::sqrt(static_cast<double>(de));
  p.head_proj = uniform(de, dr, proj_limit, rng);
  p.tail_proj = uniform(de, dr, proj_limit, rng);
  p.relation_attention = attention_vector(2 * dr, rng);
  for (auto& a : p.echo_attention) a = attention_vector(de + dr, rng);
  p.echo_head_gate = make_gate(dr, rng);
  p.echo_tail_gate = make_gate(dr, rng);
  p.can_attention = attention_vector(2 * config.echo_width(), rng);
  return p;
}

BoundParams bind(Tape& tape, const ModelParams& params, bool trainable) {
  auto put = [&](const Matrix& m) { return trainable ? tape.parameter(m) : tape.constant(m); };
  auto put_gate = [&](const HighwayGate<Matrix>& g) {
    return HighwayGate<Var>{put(g.weight), put(g.bias)};
  };
  BoundParams b;
  for (const auto& w : params.gcn_weights) b.gcn_weights.push_back(put(w));
  b.gcn_gate = put_gate(params.gcn_gate);
  for (const auto& a : params.gat_attention) b.gat_attention.push_back(put(a));
  for (const auto& g : params.gat_gates) b.gat_gates.push_back(put_gate(g));
  b.head_proj = put(params.head_proj);
  b.tail_proj = put(params.tail_proj);
  b.relation_attention = put(params.relation_attention);
  for (std::size_t i = 0; i < 4; ++i) b.echo_attention[i] = put(params.echo_attention[i]);
  b.echo_head_gate = put_gate(params.echo_head_gate);
  b.echo_tail_gate = put_gate(params.echo_tail_gate);
  b.can_attention = put(params.can_attention);
  return b;
}

ModelParams gradients(const Tape& tape, const BoundParams& bound) {
  std::vector<Matrix> grads;
  bound.for_each([&](const std::string&, const Var& v) { grads.push_back(tape.grad(v)); });
  ModelParams out;
  out.gcn_weights.resize(bound.gcn_weights.size());
  out.gat_attention.resize(bound.gat_attention.size());
  out.gat_gates.resize(bound.gat_gates.size());
  std::size_t i = 0;
  out.for_each([&](const std::string&, Matrix& m) { m = std::move(grads[i++]); });
  return out;
}

void check_shapes(const ModelParams& p, const EncoderConfig& c) {
  auto expect = [](const Matrix& m, Eigen::Index r, Eigen::Index cols, const char* what) {
    if (m.rows() != r || m.cols() != cols) {
      throw ArgumentError(fmt::format("{} has shape {}x{}, expected {}x{}", what, m.rows(),
                                      m.cols(), r, cols));
    }
  };
  if (p.gcn_weights.size() != static_cast<std::size_t>(c.pan_gcn_layers) ||
      p.gat_attention.size() != static_cast<std::size_t>(c.pan_gat_layers) ||
      p.gat_gates.size() != p.gat_attention.size()) {
    throw ArgumentError("parameter layer counts disagree with the encoder config");
  }
  for (const auto& w : p.gcn_weights) expect(w, c.d_e, c.d_e, "GCN weight");
  expect(p.gcn_gate.weight, c.d_e, c.d_e, "GCN gate weight");
  expect(p.gcn_gate.bias, 1, c.d_e, "GCN gate bias");
  for (std::size_t l = 0; l < p.gat_attention.size(); ++l) {
    expect(p.gat_attention[l], 2 * c.d_e, 1, "GAT attention");
    expect(p.gat_gates[l].weight, c.d_e, c.d_e, "GAT gate weight");
    expect(p.gat_gates[l].bias, 1, c.d_e, "GAT gate bias");
  }
  expect(p.head_proj, c.d_e, c.d_r, "head projection");
  expect(p.tail_proj, c.d_e, c.d_r, "tail projection");
  expect(p.relation_attention, 2 * c.d_r, 1, "relation attention");
  for (const auto& a : p.echo_attention) expect(a, c.d_e + c.d_r, 1, "echo attention");
  expect(p.echo_head_gate.weight, c.d_r, c.d_r, "echo head gate weight");
  expect(p.echo_tail_gate.weight, c.d_r, c.d_r, "echo tail gate weight");
  expect(p.can_attention, 2 * c.echo_width(), 1, "CAN attention");
}

Neighborhoods Neighborhoods::from_lists(const std::vector<std::vector<int>>& lists) {
  std::vector<int> offsets{0};
  std::vector<int> sources;
  std::vector<int> targets;
  for (std::size_t t = 0; t < lists.size(); ++t) {
    for (int s : lists[t]) {
      sources.push_back(s);
      targets.push_back(static_cast<int>(t));
    }
    offsets.push_back(static_cast<int>(sources.size()));
  }
  return {autodiff::make_index_list(std::move(offsets)),
          autodiff::make_index_list(std::move(sources)),
          autodiff::make_index_list(std::move(targets))};
}

Neighborhoods gat_neighborhoods(const AdjacencyStructure& adj) {
  const auto& m = adj.self_loop_adjacency;
  std::vector<std::vector<int>> lists(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.outerSize(); ++i) {
    for (autodiff::SparseMatrix::InnerIterator it(m, i); it; ++it) {
      lists[i].push_back(static_cast<int>(it.col()));
    }
    if (lists[i].empty()) lists[i].push_back(static_cast<int>(i));
  }
  return Neighborhoods::from_lists(lists);
}

autodiff::SparseMatrix normalized_adjacency(const AdjacencyStructure& adj) {
  autodiff::SparseMatrix out = adj.self_loop_adjacency;
  for (Eigen::Index i = 0; i < out.outerSize(); ++i) {
    for (autodiff::SparseMatrix::InnerIterator it(out, i); it; ++it) {
      it.valueRef() /= std::sqrt(static_cast<double>(adj.degree[it.row()]) *
                                 static_cast<double>(adj.degree[it.col()]));
    }
  }
  return out;
}

EncoderGraph EncoderGraph::build(const KnowledgeGraph& kg, const AdjacencyStructure& adj) {
  EncoderGraph g;
  g.num_entities = static_cast<int>(kg.num_entities());
  g.num_relations = static_cast<int>(kg.num_relations());
  g.norm_adjacency = std::make_shared<const autodiff::SparseMatrix>(normalized_adjacency(adj));
  g.gat = gat_neighborhoods(adj);

  auto triples = kg.rel_triples();
  std::sort(triples.begin(), triples.end(), [](const RelTriple& a, const RelTriple& b) {
    return std::tie(a.relation, a.head, a.tail) < std::tie(b.relation, b.head, b.tail);
  });
  std::vector<std::vector<int>> heads_by_rel(kg.num_relations());
  std::vector<int> tails;
  for (const auto& t : triples) {
    heads_by_rel[t.relation].push_back(t.head);
    tails.push_back(t.tail);
  }
  g.by_relation = Neighborhoods::from_lists(heads_by_rel);
  g.relation_tails = autodiff::make_index_list(std::move(tails));

  std::vector<std::vector<int>> head_lists(kg.num_entities());
  std::vector<std::vector<int>> tail_lists(kg.num_entities());
  for (std::size_t e = 0; e < adj.neighbor_lists.size(); ++e) {
    for (const auto& n : adj.neighbor_lists[e]) {
      (n.direction == Direction::kHeadToTail ? head_lists : tail_lists)[e].push_back(n.relation);
    }
  }
  g.head_role = Neighborhoods::from_lists(head_lists);
  g.tail_role = Neighborhoods::from_lists(tail_lists);
  return g;
}

// --- recording API ----------------------------------------------------------

namespace {

/// softmax over segments of leaky(a_l . left[left_idx] + a_r . right[right_idx]).
Var attention_weights(Var left, const IndexList& left_idx, Var right,
                      const IndexList& right_idx, Var attention, const IndexList& offsets,
                      double slope) {
  Var a_left = autodiff::slice_rows(attention, 0, left.cols());
  Var a_right = autodiff::slice_rows(attention, left.cols(), right.cols());
  Var sl = autodiff::gather_rows(autodiff::matmul(left, a_left), left_idx);
  Var sr = autodiff::gather_rows(autodiff::matmul(right, a_right), right_idx);
  Var logits = autodiff::leaky_relu(autodiff::add(sl, sr), slope);
  return autodiff::segment_softmax(logits, offsets);
}

void record(AttentionTrace* trace, std::string_view name, Var weights, const IndexList& offsets) {
  if (trace) trace->entries.push_back({std::string(name), weights.value(), offsets});
}

}  // namespace

Var apply_activation(Var x, Activation activation) {
  switch (activation) {
    case Activation::kIdentity: return x;
    case Activation::kRelu: return autodiff::relu(x);
    case Activation::kTanh: return autodiff::tanh(x);
    case Activation::kSigmoid: return autodiff::sigmoid(x);
  }
  return x;
}

Var gcn_layer(Var x, const std::shared_ptr<const autodiff::SparseMatrix>& norm_adj, Var weight,
              Activation activation) {
  return apply_activation(autodiff::matmul(autodiff::spmm(norm_adj, x), weight), activation);
}

Var highway_layer(Var xa, Var xb, const HighwayGate<Var>& gate) {
  Var alpha = autodiff::sigmoid(autodiff::add_row(autodiff::matmul(xa, gate.weight), gate.bias));
  return autodiff::add(xa, autodiff::hadamard(alpha, autodiff::sub(xb, xa)));
}

Var gat_layer(Var x, const Neighborhoods& nb, Var attention, double slope,
              AttentionTrace* trace, std::string_view name) {
  Var alpha = attention_weights(x, nb.targets, x, nb.sources, attention, nb.offsets, slope);
  record(trace, name, alpha, nb.offsets);
  return autodiff::segment_aggregate(alpha, x, nb.sources, nb.offsets);
}

Var pan_forward(Var x0, const EncoderGraph& graph, const BoundParams& params,
                const EncoderConfig& config, Mode mode, Rng* rng, AttentionTrace* trace) {
  Var x = x0;
  if (!params.gcn_weights.empty()) {
    Var g = x0;
    for (const auto& w : params.gcn_weights) {
      g = gcn_layer(g, graph.norm_adjacency, w, config.activation);
    }
    x = highway_layer(x0, g, params.gcn_gate);
  }
  if (mode == Mode::kTrain && config.dropout_rate > 0.0) {
    if (rng == nullptr) throw ArgumentError("training mode with dropout needs an rng");
    const double keep = 1.0 - config.dropout_rate;
    std::bernoulli_distribution draw(keep);
    Matrix mask(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < mask.cols(); ++c)
      for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = draw(*rng) ? 1.0 / keep : 0.0;
    x = autodiff::mul_const(x, mask);
  }
  for (std::size_t l = 0; l < params.gat_attention.size(); ++l) {
    Var y = gat_layer(x, graph.gat, params.gat_attention[l], config.leaky_slope, trace,
                      fmt::format("pan.gat.{}", l));
    x = highway_layer(x, y, params.gat_gates[l]);
  }
  return x;
}

RelationVars relation_repr(Var x_pan, const EncoderGraph& graph, const BoundParams& params,
                           const EncoderConfig& config, AttentionTrace* trace) {
  Var xh = autodiff::matmul(x_pan, params.head_proj);
  Var xt = autodiff::matmul(x_pan, params.tail_proj);
  const auto& rel = graph.by_relation;
  Var alpha = attention_weights(xh, rel.sources, xt, graph.relation_tails,
                                params.relation_attention, rel.offsets, config.leaky_slope);
  record(trace, "en.relation", alpha, rel.offsets);
  return {autodiff::segment_aggregate(alpha, xh, rel.sources, rel.offsets),
          autodiff::segment_aggregate(alpha, xt, graph.relation_tails, rel.offsets)};
}

Var echo_forward(Var x_pan, const RelationVars& relations, const EncoderGraph& graph,
                 const BoundParams& params, const EncoderConfig& config,
                 AttentionTrace* trace, std::array<Var, 4>* parts) {
  static constexpr std::array<const char*, 4> kNames = {"en.echo.h_rh", "en.echo.h_rt",
                                                        "en.echo.t_rh", "en.echo.t_rt"};
  std::array<Var, 4> echoed;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& role = i < 2 ? graph.head_role : graph.tail_role;
    Var rel = (i % 2 == 0) ? relations.head : relations.tail;
    Var alpha = attention_weights(x_pan, role.targets, rel, role.sources,
                                  params.echo_attention[i], role.offsets, config.leaky_slope);
    record(trace, kNames[i], alpha, role.offsets);
    echoed[i] = autodiff::segment_aggregate(alpha, rel, role.sources, role.offsets);
  }
  if (parts) *parts = echoed;
  const std::array<Var, 3> cat = {x_pan,
                                  highway_layer(echoed[0], echoed[1], params.echo_head_gate),
                                  highway_layer(echoed[2], echoed[3], params.echo_tail_gate)};
  return autodiff::concat_cols(cat);
}

Var can_forward(Var x_en, const EncoderGraph& graph, const BoundParams& params,
                const EncoderConfig& config, AttentionTrace* trace) {
  Var y = gat_layer(x_en, graph.gat, params.can_attention, config.leaky_slope, trace, "can.gat");
  const std::array<Var, 2> cat = {x_en, y};
  return autodiff::concat_cols(cat);
}

Var encode(Var x0, const EncoderGraph& graph, const BoundParams& params,
           const EncoderConfig& config, Mode mode, Rng* rng, AttentionTrace* trace) {
  if (x0.cols() != config.d_e) {
    throw ArgumentError(fmt::format("initial embeddings have {} columns, d_e is {}", x0.cols(),
                                    config.d_e));
  }
  if (x0.rows() != graph.num_entities) {
    throw ArgumentError(fmt::format("initial embeddings have {} rows, the KG has {} entities",
                                    x0.rows(), graph.num_entities));
  }
  Var x = config.use_pan ? pan_forward(x0, graph, params, config, mode, rng, trace) : x0;
  if (config.use_en) {
    auto rel = relation_repr(x, graph, params, config, trace);
    x = echo_forward(x, rel, graph, params, config, trace);
  }
  if (config.use_can) x = can_forward(x, graph, params, config, trace);
  return x;
}

// --- matrix API -------------------------------------------------------------

Matrix gcn_forward(const Matrix& x, const AdjacencyStructure& adj, const Matrix& weight,
                   Activation activation) {
  if (static_cast<std::size_t>(x.rows()) != adj.size()) {
    throw ArgumentError("gcn_forward: feature rows must equal the adjacency size");
  }
  if (weight.rows() != weight.cols() || weight.rows() != x.cols()) {
    throw ArgumentError("gcn_forward: weight must be square with side equal to the feature dim");
  }
  Tape tape;
  auto a = std::make_shared<const autodiff::SparseMatrix>(normalized_adjacency(adj));
  return gcn_layer(tape.constant(x), a, tape.constant(weight), activation).value();
}

Matrix highway(const Matrix& xa, const Matrix& xb, const HighwayGate<Matrix>& gate) {
  if (xa.rows() != xb.rows() || xa.cols() != xb.cols()) {
    throw ArgumentError("highway: inputs must have the same shape");
  }
  if (gate.weight.rows() != xa.cols() || gate.weight.cols() != xa.cols() ||
      gate.bias.rows() != 1 || gate.bias.cols() != xa.cols()) {
    throw ArgumentError("highway: gate dimensions do not match the inputs");
  }
  Tape tape;
  return highway_layer(tape.constant(xa), tape.constant(xb),
                       {tape.constant(gate.weight), tape.constant(gate.bias)})
      .value();
}

GatOutput gat_forward(const Matrix& x, const Neighborhoods& nb, const Matrix& attention,
                      double slope) {
  if (attention.rows() != 2 * x.cols() || attention.cols() != 1) {
    throw ArgumentError("gat_forward: attention vector must have length 2 * feature dim");
  }
  if (nb.num_targets() != static_cast<std::size_t>(x.rows())) {
    throw ArgumentError("gat_forward: neighbourhoods do not match the feature rows");
  }
  // Entities with no neighbours attend to themselves.
  const auto& off = *nb.offsets;
  std::vector<std::vector<int>> lists(nb.num_targets());
  bool patched = false;
  for (std::size_t t = 0; t < lists.size(); ++t) {
    for (int k = off[t]; k < off[t + 1]; ++k) lists[t].push_back((*nb.sources)[k]);
    if (lists[t].empty()) {
      lists[t].push_back(static_cast<int>(t));
      patched = true;
    }
  }
  const Neighborhoods use = patched ? Neighborhoods::from_lists(lists) : nb;

  Tape tape;
  AttentionTrace trace;
  Var out = gat_layer(tape.constant(x), use, tape.constant(attention), slope, &trace);
  return {out.value(), trace.entries.front().weights};
}

Matrix pan_forward(const Matrix& x0, const EncoderGraph& graph, const ModelParams& params,
                   const EncoderConfig& config, Mode mode, Rng* rng) {
  Tape tape;
  auto bound = bind(tape, params, false);
  return pan_forward(tape.constant(x0), graph, bound, config, mode, rng).value();
}

RelationRepr relation_repr(const Matrix& x_pan, const EncoderGraph& graph,
                           const ModelParams& params, const EncoderConfig& config) {
  if (params.head_proj.rows() != x_pan.cols() || params.tail_proj.rows() != x_pan.cols()) {
    throw ArgumentError("relation_repr: projection shapes do not match the features");
  }
  Tape tape;
  auto bound = bind(tape, params, false);
  AttentionTrace trace;
  auto rel = relation_repr(tape.constant(x_pan), graph, bound, config, &trace);
  return {rel.head.value(), rel.tail.value(), trace.entries.front().weights};
}

EchoOutput echo_forward(const Matrix& x_pan, const RelationRepr& relations,
                        const EncoderGraph& graph, const ModelParams& params,
                        const EncoderConfig& config) {
  Tape tape;
  auto bound = bind(tape, params, false);
  AttentionTrace trace;
  std::array<Var, 4> parts;
  Var out = echo_forward(tape.constant(x_pan),
                         {tape.constant(relations.head), tape.constant(relations.tail)}, graph,
                         bound, config, &trace, &parts);
  EchoOutput result;
  result.output = out.value();
  for (std::size_t i = 0; i < 4; ++i) {
    result.parts[i] = parts[i].value();
    result.attention[i] = trace.entries[i].weights;
  }
  return result;
}

Matrix can_forward(const Matrix& x_en, const EncoderGraph& graph, const ModelParams& params,
                   const EncoderConfig& config) {
  Tape tape;
  auto bound = bind(tape, params, false);
  return can_forward(tape.constant(x_en), graph, bound, config).value();
}

Matrix encode(const EncoderGraph& graph, const Matrix& x0, const ModelParams& params,
              const EncoderConfig& config, Mode mode, Rng* rng, AttentionTrace* trace) {
  check_shapes(params, config);
  Tape tape;
  auto bound = bind(tape, params, false);
  return encode(tape.constant(x0), graph, bound, config, mode, rng, trace).value();
}

Matrix encode(const KnowledgeGraph& kg, const Matrix& x0, const ModelParams& params,
              const EncoderConfig& config, Mode mode, Rng* rng) {
  const auto adj = build_adjacency(kg, true);
  return encode(EncoderGraph::build(kg, adj), x0, params, config, mode, rng);
}

}  // namespace echoea
