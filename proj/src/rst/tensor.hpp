#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace rst {

// Dense row-major tensor of rank 0..3. Rank 3 exists only for the label
// biaffine weight (d x L x d); everything else is a vector or matrix.
template <typename F>
struct Tensor {
  std::vector<std::size_t> dims;
  std::vector<F> v;

  Tensor() = default;
  explicit Tensor(std::initializer_list<std::size_t> d) { resize(d); }

  void resize(std::initializer_list<std::size_t> d) {
    dims.assign(d.begin(), d.end());
    std::size_t total = 1;
    for (std::size_t x : dims) total *= x;
    v.assign(total, F(0));
  }

  static Tensor zeros_like(const Tensor& o) {
    Tensor t;
    t.dims = o.dims;
    t.v.assign(o.v.size(), F(0));
    return t;
  }

  std::size_t size() const { return v.size(); }
  std::size_t rank() const { return dims.size(); }
  std::size_t rows() const { return dims.at(0); }
  std::size_t cols() const { return dims.at(1); }

  F& at(std::size_t i) { return v[i]; }
  F at(std::size_t i) const { return v[i]; }
  F& at2(std::size_t r, std::size_t c) { return v[r * dims[1] + c]; }
  F at2(std::size_t r, std::size_t c) const { return v[r * dims[1] + c]; }
  // rank-3 index (a, b, c) -> ((a * dims[1]) + b) * dims[2] + c
  F& at3(std::size_t a, std::size_t b, std::size_t c) {
    return v[(a * dims[1] + b) * dims[2] + c];
  }
  F at3(std::size_t a, std::size_t b, std::size_t c) const {
    return v[(a * dims[1] + b) * dims[2] + c];
  }

  void fill(F x) { std::fill(v.begin(), v.end(), x); }

  template <typename G>
  Tensor<G> cast() const {
    Tensor<G> t;
    t.dims = dims;
    t.v.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) t.v[i] = static_cast<G>(v[i]);
    return t;
  }
};

}  // namespace rst
