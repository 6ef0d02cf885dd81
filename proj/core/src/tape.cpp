#include "echoea/tape.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace echoea::autodiff {

Var Tape::constant(Matrix value) {
  nodes_.push_back({std::move(value), {}, false, false, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Matrix value) {
  nodes_.push_back({std::move(value), {}, true, false, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backward backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> parents, Backward backward) {
  bool needs = false;
  for (const auto& p : parents) {
    assert(p.tape_ == this);
    needs = needs || nodes_[p.id_].requires_grad;
  }
  nodes_.push_back({std::move(value), {}, needs, false,
                    needs ? std::move(backward) : Backward{}});
  return {this, nodes_.size() - 1};
}

void Tape::backward(Var root) {
  auto& r = nodes_[root.id_];
  if (r.value.rows() != 1 || r.value.cols() != 1) {
    throw std::invalid_argument("backward() needs a scalar root");
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  if (!r.requires_grad) return;
  r.grad = Matrix::Ones(1, 1);
  r.has_grad = true;
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (n.has_grad && n.backward) n.backward(*this, n.value, n.grad);
  }
}

Matrix Tape::grad(Var v) const {
  const auto& n = nodes_[v.id_];
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var matmul(Var a, Var b) {
  auto& t = a.tape();
  return t.record(a.value() * b.value(), {a, b},
                  [a, b](Tape& tp, const Matrix&, const Matrix& g) {
                    if (tp.requires_grad(a)) tp.accumulate(a, g * b.value().transpose());
                    if (tp.requires_grad(b)) tp.accumulate(b, a.value().transpose() * g);
                  });
}

Var spmm(std::shared_ptr<const SparseMatrix> s, Var b) {
  auto& t = b.tape();
  Matrix out = (*s) * b.value();
  return t.record(std::move(out), {b}, [s, b](Tape& tp, const Matrix&, const Matrix& g) {
    tp.accumulate(b, s->transpose() * g);
  });
}

Var add(Var a, Var b) {
  auto& t = a.tape();
  return t.record(a.value() + b.value(), {a, b},
                  [a, b](Tape& tp, const Matrix&, const Matrix& g) {
                    tp.accumulate(a, g);
                    tp.accumulate(b, g);
                  });
}

Var sub(Var a, Var b) {
  auto& t = a.tape();
  return t.record(a.value() - b.value(), {a, b},
                  [a, b](Tape& tp, const Matrix&, const Matrix& g) {
                    tp.accumulate(a, g);
                    tp.accumulate(b, -g);
                  });
}

Var hadamard(Var a, Var b) {
  auto& t = a.tape();
  return t.record(a.value().cwiseProduct(b.value()), {a, b},
                  [a, b](Tape& tp, const Matrix&, const Matrix& g) {
                    if (tp.requires_grad(a)) tp.accumulate(a, g.cwiseProduct(b.value()));
                    if (tp.requires_grad(b)) tp.accumulate(b, g.cwiseProduct(a.value()));
                  });
}

Var add_row(Var a, Var row) {
  auto& t = a.tape();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return t.record(std::move(out), {a, row},
                  [a, row](Tape& tp, const Matrix&, const Matrix& g) {
                    tp.accumulate(a, g);
                    if (tp.requires_grad(row)) tp.accumulate(row, g.colwise().sum());
                  });
}

Var scale(Var a, double factor) {
  auto& t = a.tape();
  return t.record(a.value() * factor, {a},
                  [a, factor](Tape& tp, const Matrix&, const Matrix& g) {
                    tp.accumulate(a, g * factor);
                  });
}

Var mul_const(Var a, const Matrix& mask) {
  auto& t = a.tape();
  auto m = std::make_shared<const Matrix>(mask);
  return t.record(a.value().cwiseProduct(*m), {a},
                  [a, m](Tape& tp, const Matrix&, const Matrix& g) {
                    tp.accumulate(a, g.cwiseProduct(*m));
                  });
}

Var sigmoid(Var a) {
  auto& t = a.tape();
  Matrix out = a.value().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& y, const Matrix& g) {
    tp.accumulate(a, g.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  });
}

Var tanh(Var a) {
  auto& t = a.tape();
  Matrix out = a.value().array().tanh().matrix();
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& y, const Matrix& g) {
    tp.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

Var relu(Var a) {
  auto& t = a.tape();
  Matrix out = a.value().cwiseMax(0.0);
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix&, const Matrix& g) {
    tp.accumulate(a, (a.value().array() > 0.0).select(g.array(), 0.0).matrix());
  });
}

Var leaky_relu(Var a, double slope) {
  auto& t = a.tape();
  Matrix out = a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  return t.record(std::move(out), {a}, [a, slope](Tape& tp, const Matrix&, const Matrix& g) {
    tp.accumulate(a, (a.value().array() > 0.0).select(g.array(), slope * g.array()).matrix());
  });
}

Var concat_cols(std::span<const Var> parts) {
  assert(!parts.empty());
  auto& t = parts.front().tape();
  const auto rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) cols += p.cols();
  Matrix out(rows, cols);
  std::vector<Eigen::Index> starts;
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    starts.push_back(c);
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  std::vector<Var> kept(parts.begin(), parts.end());
  return t.record(std::move(out), parts,
                  [kept, starts](Tape& tp, const Matrix&, const Matrix& g) {
                    for (std::size_t i = 0; i < kept.size(); ++i) {
                      if (tp.requires_grad(kept[i]))
                        tp.accumulate(kept[i], g.middleCols(starts[i], kept[i].cols()));
                    }
                  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  auto& t = a.tape();
  Matrix out = a.value().middleRows(start, count);
  return t.record(std::move(out), {a},
                  [a, start, count](Tape& tp, const Matrix&, const Matrix& g) {
                    Matrix full = Matrix::Zero(a.rows(), a.cols());
                    full.middleRows(start, count) = g;
                    tp.accumulate(a, full);
                  });
}

Var gather_rows(Var a, IndexList index) {
  auto& t = a.tape();
  const auto& idx = *index;
  Matrix out(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = a.value().row(idx[k]);
  return t.record(std::move(out), {a}, [a, index](Tape& tp, const Matrix&, const Matrix& g) {
    const auto& ix = *index;
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t k = 0; k < ix.size(); ++k) full.row(ix[k]) += g.row(static_cast<Eigen::Index>(k));
    tp.accumulate(a, full);
  });
}

Var segment_softmax(Var logits, IndexList offsets) {
  auto& t = logits.tape();
  const auto& off = *offsets;
  const auto& z = logits.value();
  Matrix out(z.rows(), 1);
  for (std::size_t s = 0; s + 1 < off.size(); ++s) {
    const int lo = off[s];
    const int hi = off[s + 1];
    if (lo == hi) continue;
    double mx = z(lo, 0);
    for (int k = lo + 1; k < hi; ++k) mx = std::max(mx, z(k, 0));
    double denom = 0.0;
    for (int k = lo; k < hi; ++k) {
      out(k, 0) = std::exp(z(k, 0) - mx);
      denom += out(k, 0);
    }
    for (int k = lo; k < hi; ++k) out(k, 0) /= denom;
  }
  return t.record(std::move(out), {logits},
                  [logits, offsets](Tape& tp, const Matrix& y, const Matrix& g) {
                    const auto& o = *offsets;
                    Matrix dz(y.rows(), 1);
                    for (std::size_t s = 0; s + 1 < o.size(); ++s) {
                      double dot = 0.0;
                      for (int k = o[s]; k < o[s + 1]; ++k) dot += y(k, 0) * g(k, 0);
                      for (int k = o[s]; k < o[s + 1]; ++k) dz(k, 0) = y(k, 0) * (g(k, 0) - dot);
                    }
                    tp.accumulate(logits, dz);
                  });
}

Var segment_aggregate(Var weights, Var values, IndexList sources, IndexList offsets) {
  auto& t = weights.tape();
  const auto& off = *offsets;
  const auto& src = *sources;
  const auto& w = weights.value();
  const auto& v = values.value();
  const auto n_targets = static_cast<Eigen::Index>(off.empty() ? 0 : off.size() - 1);
  Matrix out = Matrix::Zero(n_targets, v.cols());
  for (Eigen::Index s = 0; s < n_targets; ++s) {
    for (int k = off[s]; k < off[s + 1]; ++k) out.row(s) += w(k, 0) * v.row(src[k]);
  }
  return t.record(
      std::move(out), {weights, values},
      [weights, values, sources, offsets](Tape& tp, const Matrix&, const Matrix& g) {
        const auto& o = *offsets;
        const auto& sr = *sources;
        const auto& wv = weights.value();
        const auto& vv = values.value();
        const bool need_w = tp.requires_grad(weights);
        const bool need_v = tp.requires_grad(values);
        Matrix dw = need_w ? Matrix::Zero(wv.rows(), 1) : Matrix();
        Matrix dv = need_v ? Matrix::Zero(vv.rows(), vv.cols()) : Matrix();
        for (std::size_t s = 0; s + 1 < o.size(); ++s) {
          const auto row = static_cast<Eigen::Index>(s);
          for (int k = o[s]; k < o[s + 1]; ++k) {
            if (need_w) dw(k, 0) = g.row(row).dot(vv.row(sr[k]));
            if (need_v) dv.row(sr[k]) += wv(k, 0) * g.row(row);
          }
        }
        if (need_w) tp.accumulate(weights, dw);
        if (need_v) tp.accumulate(values, dv);
      });
}

Var sum(Var a) {
  auto& t = a.tape();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix&, const Matrix& g) {
    tp.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

}  // namespace echoea::autodiff
