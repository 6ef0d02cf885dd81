#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "echoea/knowledge_graph.hpp"
#include "echoea/tape.hpp"

namespace echoea {

using autodiff::IndexList;
using autodiff::Matrix;
using autodiff::Var;

enum class Activation { kIdentity, kRelu, kTanh, kSigmoid };

Activation parse_activation(std::string_view name);
const char* to_string(Activation activation) noexcept;

enum class Mode { kTrain, kInfer };

struct EncoderConfig {
  int d_e = 300;
  int d_r = 100;
  double dropout_rate = 0.05;
  int pan_gcn_layers = 1;
  int pan_gat_layers = 2;
  Activation activation = Activation::kTanh;
  double leaky_slope = 0.2;
  bool use_pan = true;
  bool use_en = true;
  bool use_can = true;

  /// Throws ValidationError on non-positive dims or dropout outside [0, 1).
  void validate() const;

  int echo_width() const noexcept { return use_en ? d_e + 2 * d_r : d_e; }
  int output_width() const noexcept { return use_can ? 2 * echo_width() : echo_width(); }
};

/// alpha = sigmoid(xa * weight + bias); out = (1 - alpha) * xa + alpha * xb.
template <typename T>
struct HighwayGate {
  T weight;  ///< d x d
  T bias;    ///< 1 x d
};

/// Every trainable weight of the encoder. Instantiated with Matrix for
/// storage and with Var while a forward pass is being recorded.
template <typename T>
struct ParamSet {
  std::vector<T> gcn_weights;               ///< d_e x d_e per GCN layer
  HighwayGate<T> gcn_gate;                  ///< mixes PAN input with GCN output
  std::vector<T> gat_attention;             ///< 2 d_e x 1 per PAN GAT layer
  std::vector<HighwayGate<T>> gat_gates;    ///< mixes each GAT layer's input and output
  T head_proj;                              ///< d_e x d_r
  T tail_proj;                              ///< d_e x d_r
  T relation_attention;                     ///< 2 d_r x 1
  /// (d_e + d_r) x 1 each, for (head role, r^h), (head role, r^t),
  /// (tail role, r^h), (tail role, r^t).
  std::array<T, 4> echo_attention;
  HighwayGate<T> echo_head_gate;            ///< d_r, balances r^h / r^t for the head role
  HighwayGate<T> echo_tail_gate;            ///< d_r, same for the tail role
  T can_attention;                          ///< 2 w x 1, w = echo width

  /// Calls fn(name, member) for every parameter group in a fixed order.
  template <typename Fn>
  void for_each(Fn&& fn) {
    visit(*this, fn);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    visit(*this, fn);
  }

 private:
  template <typename Self, typename Fn>
  static void visit(Self& self, Fn& fn) {
    for (std::size_t i = 0; i < self.gcn_weights.size(); ++i)
      fn("pan.gcn." + std::to_string(i) + ".weight", self.gcn_weights[i]);
    fn(std::string("pan.gcn_gate.weight"), self.gcn_gate.weight);
    fn(std::string("pan.gcn_gate.bias"), self.gcn_gate.bias);
    for (std::size_t i = 0; i < self.gat_attention.size(); ++i) {
      fn("pan.gat." + std::to_string(i) + ".attention", self.gat_attention[i]);
      fn("pan.gat." + std::to_string(i) + ".gate.weight", self.gat_gates[i].weight);
      fn("pan.gat." + std::to_string(i) + ".gate.bias", self.gat_gates[i].bias);
    }
    fn(std::string("en.head_proj"), self.head_proj);
    fn(std::string("en.tail_proj"), self.tail_proj);
    fn(std::string("en.relation_attention"), self.relation_attention);
    static constexpr std::array<const char*, 4> kEcho = {"h_rh", "h_rt", "t_rh", "t_rt"};
    for (std::size_t i = 0; i < 4; ++i)
      fn(std::string("en.echo_attention.") + kEcho[i], self.echo_attention[i]);
    fn(std::string("en.head_gate.weight"), self.echo_head_gate.weight);
    fn(std::string("en.head_gate.bias"), self.echo_head_gate.bias);
    fn(std::string("en.tail_gate.weight"), self.echo_tail_gate.weight);
    fn(std::string("en.tail_gate.bias"), self.echo_tail_gate.bias);
    fn(std::string("can.attention"), self.can_attention);
  }
};

using ModelParams = ParamSet<Matrix>;
using BoundParams = ParamSet<Var>;

/// Identity-plus-noise GCN weights; attention vectors, projections and gate
/// weights uniform in +-1/sqrt(fan_in); gate biases zero.
ModelParams initialize_params(const EncoderConfig& config, std::uint64_t rng_seed);

/// Puts every group on `tape`, as parameters or as constants.
BoundParams bind(autodiff::Tape& tape, const ModelParams& params, bool trainable);

/// Reads the gradients of a bound set after Tape::backward().
ModelParams gradients(const autodiff::Tape& tape, const BoundParams& bound);

/// Throws ArgumentError when a group's shape disagrees with `config`.
void check_shapes(const ModelParams& params, const EncoderConfig& config);

/// CSR neighbourhoods: targets t gather from sources[offsets[t]..offsets[t+1]).
struct Neighborhoods {
  IndexList offsets;
  IndexList sources;
  IndexList targets;  ///< per-edge target, parallel to sources

  static Neighborhoods from_lists(const std::vector<std::vector<int>>& lists);
  std::size_t num_targets() const { return offsets->size() - 1; }
};

/// GAT neighbourhoods from the rows of M + I. A row that is somehow empty
/// gets a self loop.
Neighborhoods gat_neighborhoods(const AdjacencyStructure& adj);

/// D^-1/2 (M + I) D^-1/2.
autodiff::SparseMatrix normalized_adjacency(const AdjacencyStructure& adj);

/// Per-KG structure the encoder consumes, built once and reused every epoch.
struct EncoderGraph {
  int num_entities = 0;
  int num_relations = 0;
  std::shared_ptr<const autodiff::SparseMatrix> norm_adjacency;
  Neighborhoods gat;
  /// Relation triples grouped by relation: targets are relation ids,
  /// sources are head entities; `tails` is parallel to sources.
  Neighborhoods by_relation;
  IndexList relation_tails;
  /// For each entity, the list of relations of triples where it is head
  /// (resp. tail); duplicates across distinct partners are kept.
  Neighborhoods head_role;
  Neighborhoods tail_role;

  static EncoderGraph build(const KnowledgeGraph& kg, const AdjacencyStructure& adj);
};

/// Optional sink for attention distributions produced during a forward pass.
struct AttentionTrace {
  struct Entry {
    std::string name;
    Matrix weights;  ///< E x 1
    IndexList offsets;
  };
  std::vector<Entry> entries;
};

/// Random state for dropout; only consulted in Mode::kTrain.
using Rng = std::mt19937_64;

// --- Recording API (used by training and gradient checks) -------------------

Var apply_activation(Var x, Activation activation);
Var gcn_layer(Var x, const std::shared_ptr<const autodiff::SparseMatrix>& norm_adj, Var weight,
              Activation activation);
Var highway_layer(Var xa, Var xb, const HighwayGate<Var>& gate);
Var gat_layer(Var x, const Neighborhoods& nb, Var attention, double slope,
              AttentionTrace* trace = nullptr, std::string_view name = "gat");

Var pan_forward(Var x0, const EncoderGraph& graph, const BoundParams& params,
                const EncoderConfig& config, Mode mode, Rng* rng,
                AttentionTrace* trace = nullptr);

struct RelationVars {
  Var head;  ///< |R| x d_r
  Var tail;  ///< |R| x d_r
};
RelationVars relation_repr(Var x_pan, const EncoderGraph& graph, const BoundParams& params,
                           const EncoderConfig& config, AttentionTrace* trace = nullptr);
Var echo_forward(Var x_pan, const RelationVars& relations, const EncoderGraph& graph,
                 const BoundParams& params, const EncoderConfig& config,
                 AttentionTrace* trace = nullptr, std::array<Var, 4>* parts = nullptr);
Var can_forward(Var x_en, const EncoderGraph& graph, const BoundParams& params,
                const EncoderConfig& config, AttentionTrace* trace = nullptr);

/// PAN -> relation_repr -> EN -> CAN, honouring the use_* switches.
/// `rng` may be null in Mode::kInfer.
Var encode(Var x0, const EncoderGraph& graph, const BoundParams& params,
           const EncoderConfig& config, Mode mode, Rng* rng,
           AttentionTrace* trace = nullptr);

// --- Matrix API -------------------------------------------------------------

Matrix gcn_forward(const Matrix& x, const AdjacencyStructure& adj, const Matrix& weight,
                   Activation activation);
Matrix highway(const Matrix& xa, const Matrix& xb, const HighwayGate<Matrix>& gate);

struct GatOutput {
  Matrix output;
  Matrix attention;  ///< per edge, CSR order of the neighbourhoods
};
GatOutput gat_forward(const Matrix& x, const Neighborhoods& nb, const Matrix& attention,
                      double slope = 0.2);

Matrix pan_forward(const Matrix& x0, const EncoderGraph& graph, const ModelParams& params,
                   const EncoderConfig& config, Mode mode, Rng* rng);

struct RelationRepr {
  Matrix head;
  Matrix tail;
  Matrix attention;  ///< per triple, grouped by relation
};
RelationRepr relation_repr(const Matrix& x_pan, const EncoderGraph& graph,
                           const ModelParams& params, const EncoderConfig& config);
struct EchoOutput {
  Matrix output;  ///< [x_pan | highway(h_rh, h_rt) | highway(t_rh, t_rt)]
  /// Echoed parts before the highway gates, ordered h_rh, h_rt, t_rh, t_rt.
  std::array<Matrix, 4> parts;
  /// Attention per role-list entry, same order as `parts`.
  std::array<Matrix, 4> attention;
};
EchoOutput echo_forward(const Matrix& x_pan, const RelationRepr& relations,
                        const EncoderGraph& graph, const ModelParams& params,
                        const EncoderConfig& config);
Matrix can_forward(const Matrix& x_en, const EncoderGraph& graph, const ModelParams& params,
                   const EncoderConfig& config);
Matrix encode(const KnowledgeGraph& kg, const Matrix& x0, const ModelParams& params,
              const EncoderConfig& config, Mode mode, Rng* rng = nullptr);
Matrix encode(const EncoderGraph& graph, const Matrix& x0, const ModelParams& params,
              const EncoderConfig& config, Mode mode, Rng* rng = nullptr,
              AttentionTrace* trace = nullptr);

}  // namespace echoea
