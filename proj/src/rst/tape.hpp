#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "rst/tensor.hpp"

namespace rst {

// One named trainable tensor with its gradient accumulator. `frozen_rows`
// (row index -> 1) marks embedding rows excluded from optimizer updates,
// e.g. rows loaded from pretrained vectors.
template <typename F>
struct Param {
  std::string name;
  Tensor<F> value;
  Tensor<F> grad;
  std::vector<std::uint8_t> frozen_rows;

  bool row_frozen(std::size_t r) const {
    return r < frozen_rows.size() && frozen_rows[r];
  }
};

template <typename F>
class ParamStore {
 public:
  int add(const std::string& name, std::initializer_list<std::size_t> dims) {
    Param<F> p;
    p.name = name;
    p.value.resize(dims);
    p.grad = Tensor<F>::zeros_like(p.value);
    int id = static_cast<int>(items_.size());
    items_.push_back(std::move(p));
    index_[name] = id;
    return id;
  }

  Param<F>& at(int id) { return items_.at(id); }
  const Param<F>& at(int id) const { return items_.at(id); }
  int find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }
  std::size_t count() const { return items_.size(); }

  std::size_t total_scalars() const {
    std::size_t s = 0;
    for (const auto& p : items_) s += p.value.size();
    return s;
  }

  void zero_grad() {
    for (auto& p : items_) p.grad.fill(F(0));
  }

  template <typename G>
  ParamStore<G> cast() const {
    ParamStore<G> out;
    for (const auto& p : items_) {
      Param<G> q;
      q.name = p.name;
      q.value = p.value.template cast<G>();
      q.grad = Tensor<G>::zeros_like(q.value);
      q.frozen_rows = p.frozen_rows;
      out.items_.push_back(std::move(q));
      out.index_[q.name] = static_cast<int>(out.items_.size()) - 1;
    }
    return out;
  }

  template <typename G>
  friend class ParamStore;

 private:
  std::vector<Param<F>> items_;
  std::unordered_map<std::string, int> index_;
};

// Eager reverse-mode autodiff tape. Forward values are computed as ops are
// recorded; backward() replays the closures in reverse. Parameter gradients
// accumulate directly into the bound ParamStore; node gradients live on the
// tape. With recording disabled the tape only computes values, which is all
// inference needs and keeps forward-only passes thread-safe against a
// shared, read-only ParamStore.
template <typename F>
class Tape {
 public:
  using Id = int;

  explicit Tape(ParamStore<F>& store, bool recording = true)
      : store_(&store), recording_(recording) {}

  // Forward-only tape over a shared, read-only store. No backward closures
  // are recorded, so the store is never written through this tape;
  // concurrent forward passes against one store are safe.
  explicit Tape(const ParamStore<F>& store)
      : store_(const_cast<ParamStore<F>*>(&store)), recording_(false) {}

  // Backward closures capture `this`; the tape must stay in place.
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  // Forward-only tapes can drop nodes created after a mark (used when many
  // alternative decode sequences are scored against one shared encoding).
  std::size_t mark() const { return nodes_.size(); }
  void rewind(std::size_t m) {
    if (recording_) throw std::logic_error("rewind() on a recording tape");
    nodes_.resize(m);
  }

  const Tensor<F>& value(Id id) const { return nodes_[id].val; }
  const Tensor<F>& grad(Id id) const { return nodes_[id].grad; }
  std::size_t node_count() const { return nodes_.size(); }

  Id input(Tensor<F> v) {
    return push(std::move(v), {});
  }

  Id zeros(std::size_t len) {
    Tensor<F> t({len});
    return push(std::move(t), {});
  }

  // Row `row` of parameter `pid` as a vector node.
  Id lookup_row(int pid, std::size_t row) {
    const Tensor<F>& W = store_->at(pid).value;
    Tensor<F> out({W.cols()});
    const F* src = &W.v[row * W.cols()];
    std::copy(src, src + W.cols(), out.v.begin());
    Id y = push(std::move(out), [this, pid, row](Id self) {
      Tensor<F>& g = store_->at(pid).grad;
      const Tensor<F>& dy = nodes_[self].grad;
      F* dst = &g.v[row * g.cols()];
      for (std::size_t c = 0; c < dy.size(); ++c) dst[c] += dy.v[c];
    });
    return y;
  }

  // y = W x (+ b). Pass bid < 0 for no bias.
  Id affine(int wid, int bid, Id x) {
    const Tensor<F>& W = store_->at(wid).value;
    const Tensor<F>& xv = nodes_[x].val;
    std::size_t R = W.rows(), C = W.cols();
    Tensor<F> out({R});
    const F* bp = bid >= 0 ? store_->at(bid).value.v.data() : nullptr;
    for (std::size_t r = 0; r < R; ++r) {
      F acc = bp ? bp[r] : F(0);
      const F* w = &W.v[r * C];
      for (std::size_t c = 0; c < C; ++c) acc += w[c] * xv.v[c];
      out.v[r] = acc;
    }
    return push(std::move(out), [this, wid, bid, x](Id self) {
      const Tensor<F>& dy = nodes_[self].grad;
      const Tensor<F>& W = store_->at(wid).value;
      const Tensor<F>& xv = nodes_[x].val;
      Tensor<F>& dW = store_->at(wid).grad;
      Tensor<F>& dx = nodes_[x].grad;
      std::size_t R = W.rows(), C = W.cols();
      for (std::size_t r = 0; r < R; ++r) {
        F g = dy.v[r];
        if (g == F(0)) continue;
        const F* w = &W.v[r * C];
        F* dwr = &dW.v[r * C];
        for (std::size_t c = 0; c < C; ++c) {
          dwr[c] += g * xv.v[c];
          dx.v[c] += g * w[c];
        }
      }
      if (bid >= 0) {
        Tensor<F>& db = store_->at(bid).grad;
        for (std::size_t r = 0; r < R; ++r) db.v[r] += dy.v[r];
      }
    });
  }

  Id matvec(int wid, Id x) { return affine(wid, -1, x); }

  // y = W^T x.
  Id matvec_t(int wid, Id x) {
    const Tensor<F>& W = store_->at(wid).value;
    const Tensor<F>& xv = nodes_[x].val;
    std::size_t R = W.rows(), C = W.cols();
    Tensor<F> out({C});
    for (std::size_t r = 0; r < R; ++r) {
      F xr = xv.v[r];
      if (xr == F(0)) continue;
      const F* w = &W.v[r * C];
      for (std::size_t c = 0; c < C; ++c) out.v[c] += xr * w[c];
    }
    return push(std::move(out), [this, wid, x](Id self) {
      const Tensor<F>& dy = nodes_[self].grad;
      const Tensor<F>& W = store_->at(wid).value;
      const Tensor<F>& xv = nodes_[x].val;
      Tensor<F>& dW = store_->at(wid).grad;
      Tensor<F>& dx = nodes_[x].grad;
      std::size_t R = W.rows(), C = W.cols();
      for (std::size_t r = 0; r < R; ++r) {
        const F* w = &W.v[r * C];
        F* dwr = &dW.v[r * C];
        F acc = F(0);
        F xr = xv.v[r];
        for (std::size_t c = 0; c < C; ++c) {
          acc += dy.v[c] * w[c];
          dwr[c] += dy.v[c] * xr;
        }
        dx.v[r] += acc;
      }
    });
  }

  Id add(Id a, Id b) {
    const Tensor<F>& av = nodes_[a].val;
    const Tensor<F>& bv = nodes_[b].val;
    Tensor<F> out = av;
    for (std::size_t k = 0; k < out.size(); ++k) out.v[k] += bv.v[k];
    return push(std::move(out), [this, a, b](Id self) {
      const Tensor<F>& dy = nodes_[self].grad;
      Tensor<F>& da = nodes_[a].grad;
      Tensor<F>& db = nodes_[b].grad;
      for (std::size_t k = 0; k < dy.size(); ++k) {
        da.v[k] += dy.v[k];
        db.v[k] += dy.v[k];
      }
    });
  }

  // y = x + w where w is a parameter vector.
  Id add_param(Id x, int wid) {
    const Tensor<F>& xv = nodes_[x].val;
    const Tensor<F>& w = store_->at(wid).value;
    Tensor<F> out = xv;
    for (std::size_t k = 0; k < out.size(); ++k) out.v[k] += w.v[k];
    return push(std::move(out), [this, x, wid](Id self) {
      const Tensor<F>& dy = nodes_[self].grad;
      Tensor<F>& dx = nodes_[x].grad;
      Tensor<F>& dw = store_->at(wid).grad;
      for (std::size_t k = 0; k < dy.size(); ++k) {
        dx.v[k] += dy.v[k];
        dw.v[k] += dy.v[k];
      }
    });
  }

  Id mul(Id a, Id b) {
    const Tensor<F>& av = nodes_[a].val;
    const Tensor<F>& bv = nodes_[b].val;
    Tensor<F> out = av;
    for (std::size_t k = 0; k < out.size(); ++k) out.v[k] *= bv.v[k];
    return push(std::move(out), [this, a, b](Id self) {
      const Tensor<F>& dy = nodes_[self].grad;
      const Tensor<F>& av = nodes_[a].val;
      const Tensor<F>& bv = nodes_[b].val;
      Tensor<F>& da = nodes_[a].grad;
      Tensor<F>& db = nodes_[b].grad;
      for (std::size_t k = 0; k < dy.size(); ++k) {
        da.v[k] += dy.v[k] * bv.v[k];
        db.v[k] += dy.v[k] * av.v[k];
      }
    });
  }

  // Elementwise product with a constant mask (dropout).
  Id mul_const(Id x, Tensor<F> mask) {
    const Tensor<F>& xv = nodes_[x].val;
    Tensor<F> out = xv;
    for (std::size_t k = 0; k < out.size(); ++k) out.v[k] *= mask.v[k];
    auto m = std::make_shared<Tensor<F>>(std::move(mask));
    return push(std::move(out), [this, x, m](Id self) {
      const Tensor<F>& dy = nodes_[self].grad;
      Tensor<F>& dx = nodes_[x].grad;
      for (std::size_t k = 0; k < dy.size(); ++k) dx.v[k] += dy.v[k] * m->v[k];
    });
  }

  Id concat(Id a, Id b) {
    const Tensor<F>& av = nodes_[a].val;
    const Tensor<F>& bv = nodes_[b].val;
    Tensor<F> out({av.size() + bv.size()});
    std::copy(av.v.begin(), av.v.end(), out.v.begin());
    std::copy(bv.v.begin(), bv.v.end(), out.v.begin() + av.size());
    std::size_t asz = av.size();
    return push(std::move(out), [this, a, b, asz](Id self) {
      const Tensor<F>& dy = nodes_[self].grad;
      Tensor<F>& da = nodes_[a].grad;
      Tensor<F>& db = nodes_[b].grad;
      for (std::size_t k = 0; k < asz; ++k) da.v[k] += dy.v[k];
      for (std::size_t k = asz; k < dy.size(); ++k) db.v[k - asz] += dy.v[k];
    });
  }

  Id slice(Id x, std::size_t off, std::size_t len) {
    const Tensor<F>& xv = nodes_[x].val;
    Tensor<F> out({len});
    std::copy(xv.v.begin() + off, xv.v.begin() + off + len, out.v.begin());
    return push(std::move(out), [this, x, off, len](Id self) {
      const Tensor<F>& dy = nodes_[self].grad;
      Tensor<F>& dx = nodes_[x].grad;
      for (std::size_t k = 0; k < len; ++k) dx.v[off + k] += dy.v[k];
    });
  }

  Id sigmoid(Id x) {
    Tensor<F> out = nodes_[x].val;
    for (auto& t : out.v) t = F(1) / (F(1) + std::exp(-t));
    return push(std::move(out), [this, x](Id self) {
      const Tensor<F>& y = nodes_[self].val;
      const Tensor<F>& dy = nodes_[self].grad;
      Tensor<F>& dx = nodes_[x].grad;
      for (std::size_t k = 0; k < dy.size(); ++k)
        dx.v[k] += dy.v[k] * y.v[k] * (F(1) - y.v[k]);
    });
  }

  Id tanh_op(Id x) {
    Tensor<F> out = nodes_[x].val;
    for (auto& t : out.v) t = std::tanh(t);
    return push(std::move(out), [this, x](Id self) {
      const Tensor<F>& y = nodes_[self].val;
      const Tensor<F>& dy = nodes_[self].grad;
      Tensor<F>& dx = nodes_[x].grad;
      for (std::size_t k = 0; k < dy.size(); ++k)
        dx.v[k] += dy.v[k] * (F(1) - y.v[k] * y.v[k]);
    });
  }

  Id leaky_relu(Id x, F slope) {
    const Tensor<F>& xv = nodes_[x].val;
    Tensor<F> out = xv;
    for (auto& t : out.v)
      if (t < F(0)) t *= slope;
    return push(std::move(out), [this, x, slope](Id self) {
      const Tensor<F>& xv = nodes_[x].val;
      const Tensor<F>& dy = nodes_[self].grad;
      Tensor<F>& dx = nodes_[x].grad;
      for (std::size_t k = 0; k < dy.size(); ++k)
        dx.v[k] += dy.v[k] * (xv.v[k] < F(0) ? slope : F(1));
    });
  }

  // Stacks row vectors into a (rows x cols) matrix node.
  Id stack_rows(const std::vector<Id>& rows) {
    std::size_t cols = nodes_[rows.front()].val.size();
    Tensor<F> out;
    out.dims = {rows.size(), cols};
    out.v.resize(rows.size() * cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Tensor<F>& rv = nodes_[rows[r]].val;
      std::copy(rv.v.begin(), rv.v.end(), out.v.begin() + r * cols);
    }
    auto ids = std::make_shared<std::vector<Id>>(rows);
    return push(std::move(out), [this, ids, cols](Id self) {
      const Tensor<F>& dy = nodes_[self].grad;
      for (std::size_t r = 0; r < ids->size(); ++r) {
        Tensor<F>& dr = nodes_[(*ids)[r]].grad;
        const F* src = &dy.v[r * cols];
        for (std::size_t c = 0; c < cols; ++c) dr.v[c] += src[c];
      }
    });
  }

  // y = M x where M is a matrix node (e.g. stacked boundary projections).
  Id matvec_node(Id mid, Id x) {
    const Tensor<F>& M = nodes_[mid].val;
    const Tensor<F>& xv = nodes_[x].val;
    std::size_t R = M.rows(), C = M.cols();
    Tensor<F> out({R});
    for (std::size_t r = 0; r < R; ++r) {
      const F* m = &M.v[r * C];
      F acc = F(0);
      for (std::size_t c = 0; c < C; ++c) acc += m[c] * xv.v[c];
      out.v[r] = acc;
    }
    return push(std::move(out), [this, mid, x](Id self) {
      const Tensor<F>& dy = nodes_[self].grad;
      const Tensor<F>& M = nodes_[mid].val;
      const Tensor<F>& xv = nodes_[x].val;
      Tensor<F>& dM = nodes_[mid].grad;
      Tensor<F>& dx = nodes_[x].grad;
      std::size_t R = M.rows(), C = M.cols();
      for (std::size_t r = 0; r < R; ++r) {
        F g = dy.v[r];
        if (g == F(0)) continue;
        const F* m = &M.v[r * C];
        F* dmr = &dM.v[r * C];
        for (std::size_t c = 0; c < C; ++c) {
          dmr[c] += g * xv.v[c];
          dx.v[c] += g * m[c];
        }
      }
    });
  }

  // Cross-entropy of a softmax over `scores` against `target`:
  // logsumexp(scores) - scores[target]. The softmax normalizes over the
  // whole score vector.
  Id ce_loss(Id scores, std::size_t target) {
    const Tensor<F>& s = nodes_[scores].val;
    F m = s.v[0];
    for (F x : s.v)
      if (x > m) m = x;
    F lse = F(0);
    for (F x : s.v) lse += std::exp(x - m);
    lse = m + std::log(lse);
    Tensor<F> out({1});
    out.v[0] = lse - s.v[target];
    return push(std::move(out), [this, scores, target, lse](Id self) {
      F g = nodes_[self].grad.v[0];
      const Tensor<F>& s = nodes_[scores].val;
      Tensor<F>& ds = nodes_[scores].grad;
      for (std::size_t k = 0; k < s.size(); ++k) {
        F p = std::exp(s.v[k] - lse);
        ds.v[k] += g * (p - (k == target ? F(1) : F(0)));
      }
    });
  }

  Id sum_scalars(const std::vector<Id>& xs) {
    Tensor<F> out({1});
    for (Id x : xs) out.v[0] += nodes_[x].val.v[0];
    auto ids = std::make_shared<std::vector<Id>>(xs);
    return push(std::move(out), [this, ids](Id self) {
      F g = nodes_[self].grad.v[0];
      for (Id x : *ids) nodes_[x].grad.v[0] += g;
    });
  }

  // logits[l] = hl^T Wlr[:,l,:] hr + hl . Wl[:,l] + hr . Wr[:,l] + b[l]
  // for the label classifier; Wlr is the rank-3 (d x L x d) weight.
  Id label_biaffine(Id hl, Id hr, int wlr, int wl, int wr, int bid) {
    const Tensor<F>& a = nodes_[hl].val;
    const Tensor<F>& b = nodes_[hr].val;
    const Tensor<F>& Wlr = store_->at(wlr).value;
    const Tensor<F>& Wl = store_->at(wl).value;
    const Tensor<F>& Wr = store_->at(wr).value;
    const Tensor<F>& bias = store_->at(bid).value;
    std::size_t d = a.size(), L = bias.size();
    Tensor<F> out({L});
    for (std::size_t l = 0; l < L; ++l) {
      F acc = bias.v[l];
      for (std::size_t p = 0; p < d; ++p) {
        const F* slice = &Wlr.v[(p * L + l) * d];
        F inner = F(0);
        for (std::size_t q = 0; q < d; ++q) inner += slice[q] * b.v[q];
        acc += a.v[p] * inner;
        acc += a.v[p] * Wl.at2(p, l);
        acc += b.v[p] * Wr.at2(p, l);
      }
      out.v[l] = acc;
    }
    return push(std::move(out), [this, hl, hr, wlr, wl, wr, bid](Id self) {
      const Tensor<F>& dy = nodes_[self].grad;
      const Tensor<F>& a = nodes_[hl].val;
      const Tensor<F>& b = nodes_[hr].val;
      const Tensor<F>& Wlr = store_->at(wlr).value;
      const Tensor<F>& Wl = store_->at(wl).value;
      const Tensor<F>& Wr = store_->at(wr).value;
      Tensor<F>& da = nodes_[hl].grad;
      Tensor<F>& db = nodes_[hr].grad;
      Tensor<F>& dWlr = store_->at(wlr).grad;
      Tensor<F>& dWl = store_->at(wl).grad;
      Tensor<F>& dWr = store_->at(wr).grad;
      Tensor<F>& dbias = store_->at(bid).grad;
      std::size_t d = a.size(), L = dy.size();
      for (std::size_t l = 0; l < L; ++l) {
        F g = dy.v[l];
        if (g == F(0)) continue;
        dbias.v[l] += g;
        for (std::size_t p = 0; p < d; ++p) {
          const F* slice = &Wlr.v[(p * L + l) * d];
          F* dslice = &dWlr.v[(p * L + l) * d];
          F inner = F(0);
          for (std::size_t q = 0; q < d; ++q) {
            inner += slice[q] * b.v[q];
            dslice[q] += g * a.v[p] * b.v[q];
            db.v[q] += g * a.v[p] * slice[q];
          }
          da.v[p] += g * (inner + Wl.at2(p, l));
          dWl.v[p * L + l] += g * a.v[p];
          dWr.v[p * L + l] += g * b.v[p];
          db.v[p] += g * Wr.at2(p, l);
        }
      }
    });
  }

  // Seeds d(loss)/d(loss) = 1 and propagates to every node and parameter
  // gradient reachable from `loss`.
  void backward(Id loss) {
    if (!recording_)
      throw std::logic_error("backward() on a non-recording tape");
    nodes_[loss].grad.v[0] = F(1);
    for (Id t = loss; t >= 0; --t)
      if (nodes_[t].back) nodes_[t].back(t);
  }

 private:
  struct Node {
    Tensor<F> val;
    Tensor<F> grad;
    std::function<void(Id)> back;
  };

  Id push(Tensor<F> val, std::function<void(Id)> back) {
    Node n;
    n.val = std::move(val);
    if (recording_) {
      n.grad = Tensor<F>::zeros_like(n.val);
      n.back = std::move(back);
    }
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
  ParamStore<F>* store_;
  bool recording_;
};

}  // namespace rst
