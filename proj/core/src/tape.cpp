#include "pivotcap/tape.hpp"

#include <Eigen/Core>

#include <atomic>
#include <cmath>
#include <utility>

#include "pivotcap/error.hpp"

namespace pivotcap {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using CMapM = Eigen::Map<const RowMat>;
using MapA = Eigen::Map<Eigen::ArrayXd>;
using CMapA = Eigen::Map<const Eigen::ArrayXd>;

MapM mat(Tensor& t) { return MapM(t.data.data(), t.rows(), t.cols()); }
CMapM mat(const Tensor& t) {
  return CMapM(t.data.data(), t.rows(), t.cols());
}
MapM gmat(Tensor& t) { return MapM(t.grad.data(), t.rows(), t.cols()); }
CMapM gmat(const Tensor& t) {
  return CMapM(t.grad.data(), t.rows(), t.cols());
}
MapA arr(Tensor& t) { return MapA(t.data.data(), t.size()); }
CMapA arr(const Tensor& t) { return CMapA(t.data.data(), t.size()); }
MapA garr(Tensor& t) { return MapA(t.grad.data(), t.size()); }
CMapA garr(const Tensor& t) { return CMapA(t.grad.data(), t.size()); }

std::atomic<std::uint64_t> g_tape_counter{0};

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape)
    throw Error(std::string(op) + ": shapes " + a.shape_str() + " and " +
                b.shape_str() + " do not match");
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tape::Tape(bool recording)
    : id_(++g_tape_counter), recording_(recording) {}

TensorPtr Tape::finish(TensorPtr out, std::vector<TensorPtr> ins,
                       std::function<void()> back) {
  bool any = false;
  for (const auto& t : ins)
    if (t && t->requires_grad) any = true;
  out->requires_grad = any && recording_;
  if (out->requires_grad) {
    out->tape_id = id_;
    out->node_id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{out, std::move(back)});
  }
  return out;
}

void Tape::backward(const TensorPtr& scalar) {
  if (!recording_) throw Error("backward: tape is not recording");
  if (backward_done_) throw Error("backward: tape already differentiated");
  backward_done_ = true;
  if (scalar->size() != 1)
    throw Error("backward: output has shape " + scalar->shape_str() +
                ", expected a single element");
  if (scalar->tape_id != id_ || scalar->node_id < 0)
    throw Error("backward: tensor was not produced by this tape");
  scalar->ensure_grad();
  scalar->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
    if (!it->out->grad.empty()) it->back();
}

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
  if (a->rank() != 2 || b->rank() != 2 || a->shape[1] != b->shape[0])
    throw Error("matmul: incompatible shapes " + a->shape_str() + " and " +
                b->shape_str());
  auto out = make_tensor({a->shape[0], b->shape[1]});
  mat(*out).noalias() = mat(*a) * mat(*b);
  return finish(out, {a, b}, [a, b, out] {
    CMapM g(out->grad.data(), out->rows(), out->cols());
    if (a->requires_grad) {
      a->ensure_grad();
      gmat(*a).noalias() += g * mat(*b).transpose();
    }
    if (b->requires_grad) {
      b->ensure_grad();
      gmat(*b).noalias() += mat(*a).transpose() * g;
    }
  });
}

TensorPtr Tape::affine(const TensorPtr& x, const TensorPtr& w,
                       const TensorPtr& b) {
  if (x->rank() != 2 || w->rank() != 2 || x->shape[1] != w->shape[1])
    throw Error("affine: input " + x->shape_str() + " and weight " +
                w->shape_str() + " disagree on the inner dimension");
  if (b && (b->rank() != 1 || b->shape[0] != w->shape[0]))
    throw Error("affine: bias " + b->shape_str() + " does not match weight " +
                w->shape_str());
  auto out = make_tensor({x->shape[0], w->shape[0]});
  mat(*out).noalias() = mat(*x) * mat(*w).transpose();
  if (b)
    mat(*out).rowwise() +=
        Eigen::Map<const Eigen::RowVectorXd>(b->data.data(), b->shape[0]);
  return finish(out, {x, w, b}, [x, w, b, out] {
    CMapM g(out->grad.data(), out->rows(), out->cols());
    if (x->requires_grad) {
      x->ensure_grad();
      gmat(*x).noalias() += g * mat(*w);
    }
    if (w->requires_grad) {
      w->ensure_grad();
      gmat(*w).noalias() += g.transpose() * mat(*x);
    }
    if (b && b->requires_grad) {
      b->ensure_grad();
      Eigen::Map<Eigen::RowVectorXd>(b->grad.data(), b->shape[0]) +=
          g.colwise().sum();
    }
  });
}

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape("add", *a, *b);
  auto out = make_tensor(a->shape);
  arr(*out) = arr(*a) + arr(*b);
  return finish(out, {a, b}, [a, b, out] {
    if (a->requires_grad) {
      a->ensure_grad();
      garr(*a) += garr(*out);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      garr(*b) += garr(*out);
    }
  });
}

TensorPtr Tape::sub(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape("sub", *a, *b);
  auto out = make_tensor(a->shape);
  arr(*out) = arr(*a) - arr(*b);
  return finish(out, {a, b}, [a, b, out] {
    if (a->requires_grad) {
      a->ensure_grad();
      garr(*a) += garr(*out);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      garr(*b) -= garr(*out);
    }
  });
}

TensorPtr Tape::mul(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape("mul", *a, *b);
  auto out = make_tensor(a->shape);
  arr(*out) = arr(*a) * arr(*b);
  return finish(out, {a, b}, [a, b, out] {
    if (a->requires_grad) {
      a->ensure_grad();
      garr(*a) += garr(*out) * arr(*b);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      garr(*b) += garr(*out) * arr(*a);
    }
  });
}

TensorPtr Tape::scale(const TensorPtr& a, double c) {
  auto out = make_tensor(a->shape);
  arr(*out) = arr(*a) * c;
  return finish(out, {a}, [a, out, c] {
    if (a->requires_grad) {
      a->ensure_grad();
      garr(*a) += garr(*out) * c;
    }
  });
}

TensorPtr Tape::tanh(const TensorPtr& a) {
  auto out = make_tensor(a->shape);
  for (std::size_t i = 0; i < a->size(); ++i)
    out->data[i] = std::tanh(a->data[i]);
  return finish(out, {a}, [a, out] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    garr(*a) += garr(*out) * (1.0 - arr(*out).square());
  });
}

TensorPtr Tape::sigmoid(const TensorPtr& a) {
  auto out = make_tensor(a->shape);
  for (std::size_t i = 0; i < a->size(); ++i)
    out->data[i] = stable_sigmoid(a->data[i]);
  return finish(out, {a}, [a, out] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    garr(*a) += garr(*out) * arr(*out) * (1.0 - arr(*out));
  });
}

TensorPtr Tape::log_softmax(const TensorPtr& a) {
  const int n = a->rows(), m = a->cols();
  auto out = make_tensor(a->shape);
  for (int r = 0; r < n; ++r) {
    double mx = a->at(r, 0);
    for (int j = 1; j < m; ++j) mx = std::max(mx, a->at(r, j));
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += std::exp(a->at(r, j) - mx);
    const double lse = mx + std::log(s);
    for (int j = 0; j < m; ++j) out->at(r, j) = a->at(r, j) - lse;
  }
  return finish(out, {a}, [a, out, n, m] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int r = 0; r < n; ++r) {
      double gs = 0.0;
      for (int j = 0; j < m; ++j)
        gs += out->grad[static_cast<std::size_t>(r) * m + j];
      for (int j = 0; j < m; ++j) {
        const std::size_t k = static_cast<std::size_t>(r) * m + j;
        a->grad[k] += out->grad[k] - std::exp(out->data[k]) * gs;
      }
    }
  });
}

TensorPtr Tape::masked_softmax(const TensorPtr& a,
                               const std::vector<std::uint8_t>& keep) {
  const int n = a->rows(), m = a->cols();
  if (keep.size() != a->size())
    throw Error("masked_softmax: mask size " + std::to_string(keep.size()) +
                " does not match input " + a->shape_str());
  auto out = make_tensor(a->shape);
  for (int r = 0; r < n; ++r) {
    const std::size_t off = static_cast<std::size_t>(r) * m;
    double mx = 0.0;
    bool seen = false;
    for (int j = 0; j < m; ++j)
      if (keep[off + j]) {
        mx = seen ? std::max(mx, a->data[off + j]) : a->data[off + j];
        seen = true;
      }
    if (!seen)
      throw Error("masked_softmax: row " + std::to_string(r) +
                  " has no unmasked positions");
    double s = 0.0;
    for (int j = 0; j < m; ++j)
      if (keep[off + j]) s += std::exp(a->data[off + j] - mx);
    for (int j = 0; j < m; ++j)
      out->data[off + j] =
          keep[off + j] ? std::exp(a->data[off + j] - mx) / s : 0.0;
  }
  return finish(out, {a}, [a, out, n, m] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int r = 0; r < n; ++r) {
      const std::size_t off = static_cast<std::size_t>(r) * m;
      double dot = 0.0;
      for (int j = 0; j < m; ++j)
        dot += out->grad[off + j] * out->data[off + j];
      for (int j = 0; j < m; ++j)
        a->grad[off + j] += out->data[off + j] * (out->grad[off + j] - dot);
    }
  });
}

TensorPtr Tape::embedding_lookup(const TensorPtr& table,
                                 const std::vector<int>& ids) {
  if (table->rank() != 2)
    throw Error("embedding_lookup: table must be rank 2, got " +
                table->shape_str());
  const int v = table->shape[0], d = table->shape[1];
  for (int id : ids)
    if (id < 0 || id >= v)
      throw Error("embedding_lookup: id " + std::to_string(id) +
                  " out of range [0," + std::to_string(v) + ")");
  auto out = make_tensor({static_cast<int>(ids.size()), d});
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(table->data.begin() + static_cast<std::size_t>(ids[i]) * d, d,
                out->data.begin() + i * d);
  return finish(out, {table}, [table, out, ids, d] {
    if (!table->requires_grad) return;
    table->ensure_grad();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const std::size_t src = i * d;
      const std::size_t dst = static_cast<std::size_t>(ids[i]) * d;
      for (int j = 0; j < d; ++j)
        table->grad[dst + j] += out->grad[src + j];
    }
  });
}

TensorPtr Tape::concat_cols(const TensorPtr& a, const TensorPtr& b) {
  if (a->rank() != 2 || b->rank() != 2 || a->shape[0] != b->shape[0])
    throw Error("concat_cols: shapes " + a->shape_str() + " and " +
                b->shape_str() + " do not share a row count");
  const int n = a->shape[0], p = a->shape[1], q = b->shape[1];
  auto out = make_tensor({n, p + q});
  for (int r = 0; r < n; ++r) {
    std::copy_n(a->data.begin() + static_cast<std::size_t>(r) * p, p,
                out->data.begin() + static_cast<std::size_t>(r) * (p + q));
    std::copy_n(b->data.begin() + static_cast<std::size_t>(r) * q, q,
                out->data.begin() + static_cast<std::size_t>(r) * (p + q) + p);
  }
  return finish(out, {a, b}, [a, b, out, n, p, q] {
    for (int r = 0; r < n; ++r) {
      const std::size_t off = static_cast<std::size_t>(r) * (p + q);
      if (a->requires_grad) {
        a->ensure_grad();
        for (int j = 0; j < p; ++j)
          a->grad[static_cast<std::size_t>(r) * p + j] += out->grad[off + j];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (int j = 0; j < q; ++j)
          b->grad[static_cast<std::size_t>(r) * q + j] +=
              out->grad[off + p + j];
      }
    }
  });
}

TensorPtr Tape::concat_rows(const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw Error("concat_rows: no inputs");
  const int m = parts[0]->cols();
  int total = 0;
  for (const auto& t : parts) {
    if (t->cols() != m)
      throw Error("concat_rows: shapes " + parts[0]->shape_str() + " and " +
                  t->shape_str() + " do not share a column count");
    total += t->rows();
  }
  auto out = make_tensor({total, m});
  std::vector<int> offsets(parts.size());
  int row = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    offsets[i] = row;
    std::copy(parts[i]->data.begin(), parts[i]->data.end(),
              out->data.begin() + static_cast<std::size_t>(row) * m);
    row += parts[i]->rows();
  }
  return finish(out, parts, [parts, out, offsets, m] {
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (!parts[i]->requires_grad) continue;
      parts[i]->ensure_grad();
      const std::size_t off = static_cast<std::size_t>(offsets[i]) * m;
      for (std::size_t j = 0; j < parts[i]->size(); ++j)
        parts[i]->grad[j] += out->grad[off + j];
    }
  });
}

TensorPtr Tape::slice_cols(const TensorPtr& a, int lo, int hi) {
  if (a->rank() != 2)
    throw Error("slice_cols: input must be rank 2, got " + a->shape_str());
  const int n = a->shape[0], m = a->shape[1];
  if (lo < 0 || hi > m || lo >= hi)
    throw Error("slice_cols: range [" + std::to_string(lo) + "," +
                std::to_string(hi) + ") invalid for " + a->shape_str());
  const int w = hi - lo;
  auto out = make_tensor({n, w});
  for (int r = 0; r < n; ++r)
    std::copy_n(a->data.begin() + static_cast<std::size_t>(r) * m + lo, w,
                out->data.begin() + static_cast<std::size_t>(r) * w);
  return finish(out, {a}, [a, out, n, m, lo, w] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < w; ++j)
        a->grad[static_cast<std::size_t>(r) * m + lo + j] +=
            out->grad[static_cast<std::size_t>(r) * w + j];
  });
}

TensorPtr Tape::slice_rows(const TensorPtr& a, int lo, int hi) {
  if (a->rank() != 2)
    throw Error("slice_rows: input must be rank 2, got " + a->shape_str());
  const int n = a->shape[0], m = a->shape[1];
  if (lo < 0 || hi > n || lo >= hi)
    throw Error("slice_rows: range [" + std::to_string(lo) + "," +
                std::to_string(hi) + ") invalid for " + a->shape_str());
  const int k = hi - lo;
  auto out = make_tensor({k, m});
  std::copy_n(a->data.begin() + static_cast<std::size_t>(lo) * m,
              static_cast<std::size_t>(k) * m, out->data.begin());
  return finish(out, {a}, [a, out, m, lo] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    const std::size_t off = static_cast<std::size_t>(lo) * m;
    for (std::size_t j = 0; j < out->size(); ++j)
      a->grad[off + j] += out->grad[j];
  });
}

TensorPtr Tape::reshape(const TensorPtr& a, std::vector<int> shape) {
  auto out = make_tensor(std::move(shape));
  if (out->size() != a->size())
    throw Error("reshape: cannot view " + a->shape_str() + " as " +
                out->shape_str());
  out->data = a->data;
  return finish(out, {a}, [a, out] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    garr(*a) += garr(*out);
  });
}

TensorPtr Tape::pick(const TensorPtr& a, const std::vector<int>& ids) {
  if (a->rank() != 2)
    throw Error("pick: input must be rank 2, got " + a->shape_str());
  const int n = a->shape[0], m = a->shape[1];
  if (static_cast<int>(ids.size()) != n)
    throw Error("pick: " + std::to_string(ids.size()) + " indices for " +
                a->shape_str());
  for (int id : ids)
    if (id < 0 || id >= m)
      throw Error("pick: index " + std::to_string(id) + " out of range [0," +
                  std::to_string(m) + ")");
  auto out = make_tensor({n});
  for (int r = 0; r < n; ++r) out->data[r] = a->at(r, ids[r]);
  return finish(out, {a}, [a, out, ids, n, m] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int r = 0; r < n; ++r)
      a->grad[static_cast<std::size_t>(r) * m + ids[r]] += out->grad[r];
  });
}

TensorPtr Tape::sum(const TensorPtr& a) {
  auto out = make_tensor({1});
  out->data[0] = arr(*a).sum();
  return finish(out, {a}, [a, out] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    garr(*a) += out->grad[0];
  });
}

TensorPtr Tape::weighted_sum(const TensorPtr& a,
                             const std::vector<double>& w) {
  if (w.size() != a->size())
    throw Error("weighted_sum: " + std::to_string(w.size()) +
                " weights for " + a->shape_str());
  auto out = make_tensor({1});
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += a->data[i] * w[i];
  out->data[0] = acc;
  return finish(out, {a}, [a, out, w] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < w.size(); ++i)
      a->grad[i] += out->grad[0] * w[i];
  });
}

TensorPtr Tape::l2_rows(const TensorPtr& a, double eps) {
  if (a->rank() != 2)
    throw Error("l2_rows: input must be rank 2, got " + a->shape_str());
  if (eps < 0.0) throw Error("l2_rows: eps must be non-negative");
  const int n = a->shape[0], m = a->shape[1];
  auto out = make_tensor({n});
  for (int r = 0; r < n; ++r) {
    double s = eps;
    for (int j = 0; j < m; ++j) s += a->at(r, j) * a->at(r, j);
    out->data[r] = std::sqrt(s);
  }
  return finish(out, {a}, [a, out, n, m] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int r = 0; r < n; ++r) {
      if (out->data[r] == 0.0) continue;
      const double c = out->grad[r] / out->data[r];
      for (int j = 0; j < m; ++j)
        a->grad[static_cast<std::size_t>(r) * m + j] += c * a->at(r, j);
    }
  });
}

TensorPtr Tape::stop_gradient(const TensorPtr& a) {
  auto out = make_tensor(a->shape);
  out->data = a->data;
  return out;
}

TensorPtr Tape::attn_scores_shared(const TensorPtr& p, const TensorPtr& q,
                                   const TensorPtr& v) {
  if (p->rank() != 2 || q->rank() != 2 || p->shape[1] != q->shape[1])
    throw Error("attn_scores_shared: query " + p->shape_str() +
                " and keys " + q->shape_str() + " disagree on width");
  const int bsz = p->shape[0], msz = q->shape[0], asz = p->shape[1];
  if (v->rank() != 1 || v->shape[0] != asz)
    throw Error("attn_scores_shared: v " + v->shape_str() +
                " does not match width " + std::to_string(asz));
  auto out = make_tensor({bsz, msz});
  for (int b = 0; b < bsz; ++b)
    for (int j = 0; j < msz; ++j) {
      double e = 0.0;
      for (int a = 0; a < asz; ++a)
        e += v->data[a] * std::tanh(p->at(b, a) + q->at(j, a));
      out->at(b, j) = e;
    }
  return finish(out, {p, q, v}, [p, q, v, out, bsz, msz, asz] {
    if (p->requires_grad) p->ensure_grad();
    if (q->requires_grad) q->ensure_grad();
    if (v->requires_grad) v->ensure_grad();
    for (int b = 0; b < bsz; ++b)
      for (int j = 0; j < msz; ++j) {
        const double ge = out->grad[static_cast<std::size_t>(b) * msz + j];
        for (int a = 0; a < asz; ++a) {
          const double th = std::tanh(p->at(b, a) + q->at(j, a));
          const double d = ge * v->data[a] * (1.0 - th * th);
          if (p->requires_grad) p->grad[static_cast<std::size_t>(b) * asz + a] += d;
          if (q->requires_grad) q->grad[static_cast<std::size_t>(j) * asz + a] += d;
          if (v->requires_grad) v->grad[a] += ge * th;
        }
      }
  });
}

TensorPtr Tape::attn_scores_batched(const TensorPtr& p, const TensorPtr& q,
                                    const TensorPtr& v, int m) {
  if (p->rank() != 2 || q->rank() != 2 || p->shape[1] != q->shape[1])
    throw Error("attn_scores_batched: query " + p->shape_str() +
                " and keys " + q->shape_str() + " disagree on width");
  const int bsz = p->shape[0], asz = p->shape[1];
  if (m <= 0 || q->shape[0] != m * bsz)
    throw Error("attn_scores_batched: keys " + q->shape_str() +
                " are not " + std::to_string(m) + " positions x " +
                std::to_string(bsz) + " rows");
  if (v->rank() != 1 || v->shape[0] != asz)
    throw Error("attn_scores_batched: v " + v->shape_str() +
                " does not match width " + std::to_string(asz));
  auto out = make_tensor({bsz, m});
  for (int b = 0; b < bsz; ++b)
    for (int j = 0; j < m; ++j) {
      double e = 0.0;
      const int qr = j * bsz + b;
      for (int a = 0; a < asz; ++a)
        e += v->data[a] * std::tanh(p->at(b, a) + q->at(qr, a));
      out->at(b, j) = e;
    }
  return finish(out, {p, q, v}, [p, q, v, out, bsz, m, asz] {
    if (p->requires_grad) p->ensure_grad();
    if (q->requires_grad) q->ensure_grad();
    if (v->requires_grad) v->ensure_grad();
    for (int b = 0; b < bsz; ++b)
      for (int j = 0; j < m; ++j) {
        const double ge = out->grad[static_cast<std::size_t>(b) * m + j];
        const int qr = j * bsz + b;
        for (int a = 0; a < asz; ++a) {
          const double th = std::tanh(p->at(b, a) + q->at(qr, a));
          const double d = ge * v->data[a] * (1.0 - th * th);
          if (p->requires_grad) p->grad[static_cast<std::size_t>(b) * asz + a] += d;
          if (q->requires_grad) q->grad[static_cast<std::size_t>(qr) * asz + a] += d;
          if (v->requires_grad) v->grad[a] += ge * th;
        }
      }
  });
}

TensorPtr Tape::attn_context_shared(const TensorPtr& w, const TensorPtr& ann) {
  if (w->rank() != 2 || ann->rank() != 2 || w->shape[1] != ann->shape[0])
    throw Error("attn_context_shared: weights " + w->shape_str() +
                " and annotations " + ann->shape_str() + " do not align");
  const int bsz = w->shape[0], msz = w->shape[1], d = ann->shape[1];
  auto out = make_tensor({bsz, d});
  for (int b = 0; b < bsz; ++b)
    for (int j = 0; j < msz; ++j) {
      const double wj = w->at(b, j);
      for (int k = 0; k < d; ++k) out->at(b, k) += wj * ann->at(j, k);
    }
  return finish(out, {w, ann}, [w, ann, out, bsz, msz, d] {
    if (w->requires_grad) w->ensure_grad();
    if (ann->requires_grad) ann->ensure_grad();
    for (int b = 0; b < bsz; ++b)
      for (int j = 0; j < msz; ++j) {
        double gw = 0.0;
        for (int k = 0; k < d; ++k) {
          const double go = out->grad[static_cast<std::size_t>(b) * d + k];
          gw += go * ann->at(j, k);
          if (ann->requires_grad)
            ann->grad[static_cast<std::size_t>(j) * d + k] +=
                w->at(b, j) * go;
        }
        if (w->requires_grad)
          w->grad[static_cast<std::size_t>(b) * msz + j] += gw;
      }
  });
}

TensorPtr Tape::attn_context_batched(const TensorPtr& w,
                                     const TensorPtr& ann) {
  if (w->rank() != 2 || ann->rank() != 2)
    throw Error("attn_context_batched: weights " + w->shape_str() +
                " and annotations " + ann->shape_str() + " must be rank 2");
  const int bsz = w->shape[0], msz = w->shape[1], d = ann->shape[1];
  if (ann->shape[0] != msz * bsz)
    throw Error("attn_context_batched: annotations " + ann->shape_str() +
                " are not " + std::to_string(msz) + " positions x " +
                std::to_string(bsz) + " rows");
  auto out = make_tensor({bsz, d});
  for (int b = 0; b < bsz; ++b)
    for (int j = 0; j < msz; ++j) {
      const double wj = w->at(b, j);
      const int ar = j * bsz + b;
      for (int k = 0; k < d; ++k) out->at(b, k) += wj * ann->at(ar, k);
    }
  return finish(out, {w, ann}, [w, ann, out, bsz, msz, d] {
    if (w->requires_grad) w->ensure_grad();
    if (ann->requires_grad) ann->ensure_grad();
    for (int b = 0; b < bsz; ++b)
      for (int j = 0; j < msz; ++j) {
        double gw = 0.0;
        const int ar = j * bsz + b;
        for (int k = 0; k < d; ++k) {
          const double go = out->grad[static_cast<std::size_t>(b) * d + k];
          gw += go * ann->at(ar, k);
          if (ann->requires_grad)
            ann->grad[static_cast<std::size_t>(ar) * d + k] +=
                w->at(b, j) * go;
        }
        if (w->requires_grad)
          w->grad[static_cast<std::size_t>(b) * msz + j] += gw;
      }
  });
}

}  // namespace pivotcap
