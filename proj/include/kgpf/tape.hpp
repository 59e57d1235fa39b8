#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgpf/rng.hpp"
#include "kgpf/tensor.hpp"

namespace kgpf {

// Ordered store of named trainable tensors. Indices are stable and double as
// the parameter ids gradients are keyed by.
class ParamSet {
 public:
  int add(std::string name, Tensor value);
  int index_of(std::string_view name) const;
  std::size_t count() const { return values_.size(); }
  Tensor& value(int id) { return values_[id]; }
  const Tensor& value(int id) const { return values_[id]; }
  const std::string& name(int id) const { return names_[id]; }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

using NodeId = std::int32_t;

// Reverse-mode gradient tape for one rollout. Records the forward graph of
// vector-valued nodes (scalars are length-1 vectors) and plays it backwards.
class Tape {
 public:
  NodeId constant(Tensor v);
  // Leaf for params.value(id); repeated use within one tape shares the node,
  // so gradients through multiple uses accumulate.
  NodeId param(const ParamSet& params, int id);

  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  // Vector times scalar node.
  NodeId scale(NodeId v, NodeId s);
  NodeId matvec(NodeId w, NodeId x);
  NodeId dot(NodeId a, NodeId b);
  NodeId concat(NodeId a, NodeId b);
  NodeId slice(NodeId a, std::size_t offset, std::size_t len);
  // out[i] = dot(concat(row_a[rows[i].first], row_b[rows[i].second]), v).
  // The matrices are referenced, not copied, and receive no gradient; they
  // must outlive the tape.
  NodeId rows_matvec(NodeId v, const Tensor& mat_a, const Tensor& mat_b,
                     std::vector<std::pair<std::int32_t, std::int32_t>> rows);
  NodeId sigmoid(NodeId a);
  NodeId tanh(NodeId a);
  NodeId softmax(NodeId a);
  // Log-probabilities over unmasked entries; masked entries come out -inf.
  // At least one mask entry must be set.
  NodeId masked_log_softmax(NodeId scores, const std::vector<std::uint8_t>& mask);
  NodeId pick(NodeId a, std::size_t index);

  // The reference is invalidated by recording further nodes; copy it first
  // when interleaving reads with new ops.
  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  std::size_t node_count() const { return nodes_.size(); }

  // Reverse sweep from a scalar loss node, seeding d(loss)/d(loss) = seed.
  // Returns gradients aligned with `params` (zero tensors for untouched
  // parameters). Accumulation order is the reverse recording order, so the
  // result is deterministic.
  std::vector<Tensor> backward(NodeId loss, const ParamSet& params,
                               double seed = 1.0) const;
  // As above but adds into an existing gradient vector (scaled by seed).
  void backward_into(NodeId loss, const ParamSet& params, double seed,
                     std::vector<Tensor>& grads) const;

 private:
  enum class Op : std::uint8_t {
    kConst,
    kParam,
    kAdd,
    kMul,
    kScale,
    kMatVec,
    kRowsMatVec,
    kDot,
    kConcat,
    kSlice,
    kSigmoid,
    kTanh,
    kSoftmax,
    kMaskedLogSoftmax,
    kPick,
  };
  struct Node {
    Op op;
    NodeId a = -1, b = -1;
    std::uint32_t aux0 = 0, aux1 = 0;
    Tensor value;
    const Tensor* mat_a = nullptr;  // kRowsMatVec only
    const Tensor* mat_b = nullptr;
    std::vector<std::pair<std::int32_t, std::int32_t>> rows;
    // False for constants and anything computed purely from constants;
    // backward skips those subgraphs.
    bool needs_grad = false;
  };

  NodeId push(Node n);

  std::vector<Node> nodes_;
  std::unordered_map<int, NodeId> param_nodes_;
};

// Zero-initialized gradient vector matching the parameter shapes.
std::vector<Tensor> zero_grads(const ParamSet& params);

// Scalar LSTM cell parameters: packed gate weights over [x; h_prev].
// Gate order in the packed rows: input, forget, candidate, output.
struct LstmSpec {
  int w;  // 4*hidden x (input + hidden)
  int b;  // 4*hidden; forget block initialized to 1.0
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
};

// Registers LSTM parameters in `params`, drawing initial weights from rng
// (uniform +-1/sqrt(fan_in)); forget-gate biases start at 1.0.
LstmSpec make_lstm(ParamSet& params, const std::string& prefix,
                   std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

// One LSTM step on the tape; returns h, writes the new cell state to *c_out.
NodeId lstm_step(Tape& tape, const ParamSet& params, const LstmSpec& lstm,
                 NodeId x, NodeId h_prev, NodeId c_prev, NodeId* c_out);

// Uniform +-1/sqrt(fan_in) initialization.
Tensor init_uniform(std::size_t rows, std::size_t cols, Rng& rng);

struct FdReport {
  double max_rel_err = 0.0;   // over coordinates with |analytic| >= 1e-8
  double max_abs_err = 0.0;   // over flat coordinates (absolute fallback)
  std::size_t coords_checked = 0;
  int worst_param = -1;
  std::size_t worst_coord = 0;
};

// Central finite differences of f against analytic gradients on a sampled
// coordinate subset (>= min_coords when available). Restores params.
FdReport finite_difference_check(const std::function<double(const ParamSet&)>& f,
                                 ParamSet& params,
                                 const std::vector<Tensor>& analytic, double eps,
                                 Rng& rng, std::size_t min_coords = 64);

}  // namespace kgpf
