#include "kgpf/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace kgpf {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

int ParamSet::add(std::string name, Tensor value) {
  if (index_of(name) >= 0) throw std::runtime_error("ParamSet: duplicate name " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return static_cast<int>(values_.size()) - 1;
}

int ParamSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

NodeId Tape::push(Node n) {
  if (n.op == Op::kParam) {
    n.needs_grad = true;
  } else if (n.op != Op::kConst) {
    n.needs_grad = (n.a >= 0 && nodes_[n.a].needs_grad) ||
                   (n.b >= 0 && nodes_[n.b].needs_grad);
  }
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

NodeId Tape::constant(Tensor v) {
  return push({Op::kConst, -1, -1, 0, 0, std::move(v)});
}

NodeId Tape::param(const ParamSet& params, int id) {
  auto it = param_nodes_.find(id);
  if (it != param_nodes_.end()) return it->second;
  NodeId node = push({Op::kParam, -1, -1, static_cast<std::uint32_t>(id), 0,
                      params.value(id)});
  param_nodes_.emplace(id, node);
  return node;
}

NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& va = nodes_[a].value;
  const Tensor& vb = nodes_[b].value;
  if (va.size() != vb.size()) throw std::runtime_error("tape add: length mismatch");
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += vb.data[i];
  return push({Op::kAdd, a, b, 0, 0, std::move(out)});
}

NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& va = nodes_[a].value;
  const Tensor& vb = nodes_[b].value;
  if (va.size() != vb.size()) throw std::runtime_error("tape mul: length mismatch");
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= vb.data[i];
  return push({Op::kMul, a, b, 0, 0, std::move(out)});
}

NodeId Tape::scale(NodeId v, NodeId s) {
  const Tensor& vv = nodes_[v].value;
  const double sv = nodes_[s].value.data.at(0);
  Tensor out = vv;
  for (double& x : out.data) x *= sv;
  return push({Op::kScale, v, s, 0, 0, std::move(out)});
}

NodeId Tape::matvec(NodeId w, NodeId x) {
  Tensor out;
  kgpf::matvec(nodes_[w].value, nodes_[x].value, out);
  return push({Op::kMatVec, w, x, 0, 0, std::move(out)});
}

NodeId Tape::rows_matvec(NodeId v, const Tensor& mat_a, const Tensor& mat_b,
                         std::vector<std::pair<std::int32_t, std::int32_t>> rows) {
  const Tensor& x = nodes_[v].value;
  const std::size_t ca = mat_a.cols(), cb = mat_b.cols();
  if (x.size() != ca + cb)
    throw std::runtime_error("rows_matvec: vector length mismatch");
  Tensor out = Tensor::vector(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* ra = mat_a.data.data() + static_cast<std::size_t>(rows[i].first) * ca;
    const double* rb = mat_b.data.data() + static_cast<std::size_t>(rows[i].second) * cb;
    double acc = 0.0;
    for (std::size_t j = 0; j < ca; ++j) acc += ra[j] * x.data[j];
    for (std::size_t j = 0; j < cb; ++j) acc += rb[j] * x.data[ca + j];
    out.data[i] = acc;
  }
  Node n{Op::kRowsMatVec, v, -1, 0, 0, std::move(out)};
  n.mat_a = &mat_a;
  n.mat_b = &mat_b;
  n.rows = std::move(rows);
  return push(std::move(n));
}

NodeId Tape::dot(NodeId a, NodeId b) {
  Tensor out = Tensor::scalar(kgpf::dot(nodes_[a].value, nodes_[b].value));
  return push({Op::kDot, a, b, 0, 0, std::move(out)});
}

NodeId Tape::concat(NodeId a, NodeId b) {
  const Tensor& va = nodes_[a].value;
  const Tensor& vb = nodes_[b].value;
  Tensor out = Tensor::vector(va.size() + vb.size());
  std::copy(va.data.begin(), va.data.end(), out.data.begin());
  std::copy(vb.data.begin(), vb.data.end(), out.data.begin() + va.size());
  return push({Op::kConcat, a, b, 0, 0, std::move(out)});
}

NodeId Tape::slice(NodeId a, std::size_t offset, std::size_t len) {
  const Tensor& va = nodes_[a].value;
  if (offset + len > va.size()) throw std::runtime_error("tape slice: out of range");
  Tensor out = Tensor::vector(len);
  std::copy(va.data.begin() + offset, va.data.begin() + offset + len, out.data.begin());
  return push({Op::kSlice, a, -1, static_cast<std::uint32_t>(offset),
               static_cast<std::uint32_t>(len), std::move(out)});
}

NodeId Tape::sigmoid(NodeId a) {
  Tensor out = kgpf::sigmoid(nodes_[a].value);
  return push({Op::kSigmoid, a, -1, 0, 0, std::move(out)});
}

NodeId Tape::tanh(NodeId a) {
  Tensor out = kgpf::tanh_t(nodes_[a].value);
  return push({Op::kTanh, a, -1, 0, 0, std::move(out)});
}

NodeId Tape::softmax(NodeId a) {
  Tensor out = kgpf::softmax(nodes_[a].value);
  return push({Op::kSoftmax, a, -1, 0, 0, std::move(out)});
}

NodeId Tape::masked_log_softmax(NodeId scores, const std::vector<std::uint8_t>& mask) {
  const Tensor& s = nodes_[scores].value;
  if (mask.size() != s.size())
    throw std::runtime_error("masked_log_softmax: mask length mismatch");
  double mx = kNegInf;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (mask[i] && s.data[i] > mx) mx = s.data[i];
  }
  if (mx == kNegInf) throw std::runtime_error("masked_log_softmax: all entries masked");
  double z = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (mask[i]) z += std::exp(s.data[i] - mx);
  }
  const double logz = std::log(z) + mx;
  Tensor out = Tensor::vector(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    out.data[i] = mask[i] ? s.data[i] - logz : kNegInf;
  return push({Op::kMaskedLogSoftmax, scores, -1, 0, 0, std::move(out)});
}

NodeId Tape::pick(NodeId a, std::size_t index) {
  const Tensor& va = nodes_[a].value;
  if (index >= va.size()) throw std::runtime_error("tape pick: index out of range");
  Tensor out = Tensor::scalar(va.data[index]);
  return push({Op::kPick, a, -1, static_cast<std::uint32_t>(index), 0, std::move(out)});
}

std::vector<Tensor> zero_grads(const ParamSet& params) {
  std::vector<Tensor> grads(params.count());
  for (std::size_t i = 0; i < params.count(); ++i) {
    grads[i] = params.value(static_cast<int>(i));
    grads[i].fill(0.0);
  }
  return grads;
}

std::vector<Tensor> Tape::backward(NodeId loss, const ParamSet& params,
                                   double seed) const {
  std::vector<Tensor> grads = zero_grads(params);
  backward_into(loss, params, seed, grads);
  return grads;
}

void Tape::backward_into(NodeId loss, const ParamSet& params, double seed,
                         std::vector<Tensor>& grads) const {
  if (nodes_[loss].value.size() != 1)
    throw std::runtime_error("backward: loss must be scalar");

  if (!nodes_[loss].needs_grad) return;

  std::vector<Tensor> g(nodes_.size());
  std::vector<char> touched(nodes_.size(), 0);
  auto grad_of = [&](NodeId id) -> Tensor& {
    if (!touched[id]) {
      g[id] = Tensor::vector(nodes_[id].value.size());
      touched[id] = 1;
    }
    return g[id];
  };
  grad_of(loss).data[0] = seed;

  for (NodeId id = loss; id >= 0; --id) {
    if (!touched[id] || !nodes_[id].needs_grad) continue;
    const Node& n = nodes_[id];
    const Tensor& go = g[id];
    const bool need_a = n.a >= 0 && nodes_[n.a].needs_grad;
    const bool need_b = n.b >= 0 && nodes_[n.b].needs_grad;
    switch (n.op) {
      case Op::kConst:
        break;
      case Op::kParam: {
        Tensor& dst = grads[n.aux0];
        for (std::size_t i = 0; i < go.size(); ++i) dst.data[i] += go.data[i];
        break;
      }
      case Op::kAdd: {
        if (need_a) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t i = 0; i < go.size(); ++i) ga.data[i] += go.data[i];
        }
        if (need_b) {
          Tensor& gb = grad_of(n.b);
          for (std::size_t i = 0; i < go.size(); ++i) gb.data[i] += go.data[i];
        }
        break;
      }
      case Op::kMul: {
        const Tensor& va = nodes_[n.a].value;
        const Tensor& vb = nodes_[n.b].value;
        if (need_a) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t i = 0; i < go.size(); ++i) ga.data[i] += go.data[i] * vb.data[i];
        }
        if (need_b) {
          Tensor& gb = grad_of(n.b);
          for (std::size_t i = 0; i < go.size(); ++i) gb.data[i] += go.data[i] * va.data[i];
        }
        break;
      }
      case Op::kScale: {
        const Tensor& vv = nodes_[n.a].value;
        const double sv = nodes_[n.b].value.data[0];
        if (need_a) {
          Tensor& gv = grad_of(n.a);
          for (std::size_t i = 0; i < go.size(); ++i) gv.data[i] += go.data[i] * sv;
        }
        if (need_b) {
          double acc = 0.0;
          for (std::size_t i = 0; i < go.size(); ++i) acc += go.data[i] * vv.data[i];
          grad_of(n.b).data[0] += acc;
        }
        break;
      }
      case Op::kMatVec: {
        const Tensor& w = nodes_[n.a].value;
        const Tensor& x = nodes_[n.b].value;
        const std::size_t r = w.shape[0], c = w.shape[1];
        if (need_a) {
          Tensor& gw = grad_of(n.a);
          for (std::size_t i = 0; i < r; ++i) {
            const double gi = go.data[i];
            if (gi == 0.0) continue;
            double* gwrow = gw.data.data() + i * c;
            for (std::size_t j = 0; j < c; ++j) gwrow[j] += gi * x.data[j];
          }
        }
        if (need_b) {
          Tensor& gx = grad_of(n.b);
          for (std::size_t i = 0; i < r; ++i) {
            const double gi = go.data[i];
            if (gi == 0.0) continue;
            const double* wrow = w.data.data() + i * c;
            for (std::size_t j = 0; j < c; ++j) gx.data[j] += gi * wrow[j];
          }
        }
        break;
      }
      case Op::kRowsMatVec: {
        Tensor& gv = grad_of(n.a);
        const std::size_t ca = n.mat_a->cols(), cb = n.mat_b->cols();
        for (std::size_t i = 0; i < n.rows.size(); ++i) {
          const double gi = go.data[i];
          if (gi == 0.0) continue;
          const double* ra =
              n.mat_a->data.data() + static_cast<std::size_t>(n.rows[i].first) * ca;
          const double* rb =
              n.mat_b->data.data() + static_cast<std::size_t>(n.rows[i].second) * cb;
          for (std::size_t j = 0; j < ca; ++j) gv.data[j] += gi * ra[j];
          for (std::size_t j = 0; j < cb; ++j) gv.data[ca + j] += gi * rb[j];
        }
        break;
      }
      case Op::kDot: {
        const Tensor& va = nodes_[n.a].value;
        const Tensor& vb = nodes_[n.b].value;
        const double gs = go.data[0];
        if (need_a) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t i = 0; i < va.size(); ++i) ga.data[i] += gs * vb.data[i];
        }
        if (need_b) {
          Tensor& gb = grad_of(n.b);
          for (std::size_t i = 0; i < va.size(); ++i) gb.data[i] += gs * va.data[i];
        }
        break;
      }
      case Op::kConcat: {
        const std::size_t na = nodes_[n.a].value.size();
        if (need_a) {
          Tensor& ga = grad_of(n.a);
          for (std::size_t i = 0; i < na; ++i) ga.data[i] += go.data[i];
        }
        if (need_b) {
          Tensor& gb = grad_of(n.b);
          for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] += go.data[na + i];
        }
        break;
      }
      case Op::kSlice: {
        Tensor& ga = grad_of(n.a);
        for (std::size_t i = 0; i < n.aux1; ++i) ga.data[n.aux0 + i] += go.data[i];
        break;
      }
      case Op::kSigmoid: {
        Tensor& ga = grad_of(n.a);
        for (std::size_t i = 0; i < go.size(); ++i) {
          const double y = n.value.data[i];
          ga.data[i] += go.data[i] * y * (1.0 - y);
        }
        break;
      }
      case Op::kTanh: {
        Tensor& ga = grad_of(n.a);
        for (std::size_t i = 0; i < go.size(); ++i) {
          const double y = n.value.data[i];
          ga.data[i] += go.data[i] * (1.0 - y * y);
        }
        break;
      }
      case Op::kSoftmax: {
        Tensor& ga = grad_of(n.a);
        double s = 0.0;
        for (std::size_t i = 0; i < go.size(); ++i) s += go.data[i] * n.value.data[i];
        for (std::size_t i = 0; i < go.size(); ++i)
          ga.data[i] += n.value.data[i] * (go.data[i] - s);
        break;
      }
      case Op::kMaskedLogSoftmax: {
        Tensor& ga = grad_of(n.a);
        double s = 0.0;
        for (std::size_t i = 0; i < go.size(); ++i) s += go.data[i];
        for (std::size_t i = 0; i < go.size(); ++i) {
          if (n.value.data[i] == kNegInf) continue;
          ga.data[i] += go.data[i] - std::exp(n.value.data[i]) * s;
        }
        break;
      }
      case Op::kPick: {
        Tensor& ga = grad_of(n.a);
        ga.data[n.aux0] += go.data[0];
        break;
      }
    }
  }
  (void)params;
}

Tensor init_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.data) v = (2.0 * rng.uniform() - 1.0) * bound;
  return t;
}

LstmSpec make_lstm(ParamSet& params, const std::string& prefix,
                   std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
  LstmSpec spec;
  spec.input_dim = input_dim;
  spec.hidden_dim = hidden_dim;
  spec.w = params.add(prefix + ".w",
                      init_uniform(4 * hidden_dim, input_dim + hidden_dim, rng));
  Tensor bias = Tensor::vector(4 * hidden_dim);
  // Forget gates start open.
  for (std::size_t i = hidden_dim; i < 2 * hidden_dim; ++i) bias.data[i] = 1.0;
  spec.b = params.add(prefix + ".b", std::move(bias));
  return spec;
}

NodeId lstm_step(Tape& tape, const ParamSet& params, const LstmSpec& lstm,
                 NodeId x, NodeId h_prev, NodeId c_prev, NodeId* c_out) {
  const std::size_t h = lstm.hidden_dim;
  if (tape.value(x).size() != lstm.input_dim ||
      tape.value(h_prev).size() != h || tape.value(c_prev).size() != h)
    throw std::runtime_error("lstm_step: shape mismatch");
  NodeId xs = tape.concat(x, h_prev);
  NodeId z = tape.add(tape.matvec(tape.param(params, lstm.w), xs),
                      tape.param(params, lstm.b));
  NodeId gi = tape.sigmoid(tape.slice(z, 0, h));
  NodeId gf = tape.sigmoid(tape.slice(z, h, h));
  NodeId gc = tape.tanh(tape.slice(z, 2 * h, h));
  NodeId go = tape.sigmoid(tape.slice(z, 3 * h, h));
  NodeId c = tape.add(tape.mul(gf, c_prev), tape.mul(gi, gc));
  NodeId out = tape.mul(go, tape.tanh(c));
  if (c_out) *c_out = c;
  return out;
}

FdReport finite_difference_check(const std::function<double(const ParamSet&)>& f,
                                 ParamSet& params,
                                 const std::vector<Tensor>& analytic, double eps,
                                 Rng& rng, std::size_t min_coords) {
  std::size_t total = 0;
  for (std::size_t p = 0; p < params.count(); ++p)
    total += params.value(static_cast<int>(p)).size();

  // Coordinate list: everything when small, otherwise a random subset.
  std::vector<std::pair<int, std::size_t>> coords;
  if (total <= std::max<std::size_t>(min_coords * 4, 256)) {
    for (std::size_t p = 0; p < params.count(); ++p)
      for (std::size_t i = 0; i < params.value(static_cast<int>(p)).size(); ++i)
        coords.emplace_back(static_cast<int>(p), i);
  } else {
    std::unordered_set<std::uint64_t> seen;
    while (coords.size() < min_coords) {
      std::uint64_t flat = rng.below(total);
      if (!seen.insert(flat).second) continue;
      std::uint64_t rest = flat;
      for (std::size_t p = 0; p < params.count(); ++p) {
        const std::size_t n = params.value(static_cast<int>(p)).size();
        if (rest < n) {
          coords.emplace_back(static_cast<int>(p), static_cast<std::size_t>(rest));
          break;
        }
        rest -= n;
      }
    }
  }

  FdReport report;
  for (auto [p, i] : coords) {
    double& slot = params.value(p).data[i];
    const double saved = slot;
    slot = saved + eps;
    const double fp = f(params);
    slot = saved - eps;
    const double fm = f(params);
    slot = saved;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double a = analytic[p].data[i];
    const double diff = std::abs(numeric - a);
    if (std::abs(a) >= 1e-8) {
      const double rel = diff / std::max(std::abs(a), std::abs(numeric));
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = p;
        report.worst_coord = i;
      }
    } else {
      if (diff > report.max_abs_err) report.max_abs_err = diff;
    }
    ++report.coords_checked;
  }
  return report;
}

}  // namespace kgpf
