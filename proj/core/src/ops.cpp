#include "utep/ndgrad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace utep::ndgrad {

namespace {

Tape& same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument(std::string(op) + ": nodes on different tapes");
  return a.tape();
}

template <typename F>
Array2 map(const Array2& a, F f) {
  Array2 out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

// out[i] = upstream[i] * f(i)
template <typename F>
Array2 chain(const Array2& upstream, F f) {
  Array2 out(upstream.rows(), upstream.cols());
  for (std::size_t i = 0; i < upstream.size(); ++i) out[i] = upstream[i] * f(i);
  return out;
}

Array2 transpose(const Array2& a) {
  Array2 out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

// Row-major a * b, skipping zero entries of a (relu and dropout outputs are sparse).
void matmul_nn(const Array2& a, const Array2& b, Array2& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const double* __restrict A = a.data().data();
  const double* __restrict B = b.data().data();
  double* __restrict C = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* __restrict crow = C + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* __restrict brow = B + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

Array2 matmul_raw(const Array2& a, const Array2& b, bool ta, bool tb) {
  Array2 at, bt;
  if (ta) at = transpose(a);
  if (tb) bt = transpose(b);
  const Array2& lhs = ta ? at : a;
  const Array2& rhs = tb ? bt : b;
  Array2 out(lhs.rows(), rhs.cols());
  matmul_nn(lhs, rhs, out);
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + a.value().shape_string() + " vs " +
                     b.value().shape_string());
  }
  const std::size_t ia = a.id(), ib = b.id();
  return t.record("matmul", matmul_raw(a.value(), b.value(), false, false), {ia, ib},
                  [ia, ib](Tape& t, const Array2& g) {
                    if (t.requires_grad(ia)) t.accumulate(ia, matmul_raw(g, t.value(ib), false, true));
                    if (t.requires_grad(ib)) t.accumulate(ib, matmul_raw(t.value(ia), g, true, false));
                  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  const Array2& av = a.value();
  const Array2& bv = b.value();
  const std::size_t ia = a.id(), ib = b.id();
  if (av.same_shape(bv)) {
    Array2 out = av;
    out += bv;
    return t.record("add", std::move(out), {ia, ib}, [ia, ib](Tape& t, const Array2& g) {
      t.accumulate(ia, g);
      t.accumulate(ib, g);
    });
  }
  if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Array2 out = av;
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
    return t.record("add", std::move(out), {ia, ib}, [ia, ib](Tape& t, const Array2& g) {
      t.accumulate(ia, g);
      if (t.requires_grad(ib)) {
        Array2 gb(1, g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
        t.accumulate(ib, gb);
      }
    });
  }
  throw ShapeError("add: shape mismatch " + av.shape_string() + " vs " + bv.shape_string());
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  Array2 out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record("sub", std::move(out), {ia, ib}, [ia, ib](Tape& t, const Array2& g) {
    t.accumulate(ia, g);
    if (t.requires_grad(ib)) t.accumulate(ib, map(g, [](double v) { return -v; }));
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  Array2 out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record("mul", std::move(out), {ia, ib}, [ia, ib](Tape& t, const Array2& g) {
    if (t.requires_grad(ia)) {
      const Array2& bv = t.value(ib);
      t.accumulate(ia, chain(g, [&](std::size_t i) { return bv[i]; }));
    }
    if (t.requires_grad(ib)) {
      const Array2& av = t.value(ia);
      t.accumulate(ib, chain(g, [&](std::size_t i) { return av[i]; }));
    }
  });
}

Var scale(Var a, double factor) {
  if (!std::isfinite(factor)) throw NonFiniteError("scale: non-finite factor");
  const std::size_t ia = a.id();
  return a.tape().record("scale", map(a.value(), [factor](double v) { return v * factor; }), {ia},
                         [ia, factor](Tape& t, const Array2& g) {
                           t.accumulate(ia, map(g, [factor](double v) { return v * factor; }));
                         });
}

Var add_scalar(Var a, double offset) {
  if (!std::isfinite(offset)) throw NonFiniteError("add_scalar: non-finite offset");
  const std::size_t ia = a.id();
  return a.tape().record("add_scalar", map(a.value(), [offset](double v) { return v + offset; }),
                         {ia}, [ia](Tape& t, const Array2& g) { t.accumulate(ia, g); });
}

Var one_minus(Var a) {
  const std::size_t ia = a.id();
  return a.tape().record("one_minus", map(a.value(), [](double v) { return 1.0 - v; }), {ia},
                         [ia](Tape& t, const Array2& g) {
                           t.accumulate(ia, map(g, [](double v) { return -v; }));
                         });
}

Var relu(Var a) {
  const std::size_t ia = a.id();
  return a.tape().record("relu", map(a.value(), [](double v) { return v > 0.0 ? v : 0.0; }), {ia},
                         [ia](Tape& t, const Array2& g) {
                           const Array2& x = t.value(ia);
                           t.accumulate(ia, chain(g, [&](std::size_t i) { return x[i] > 0.0 ? 1.0 : 0.0; }));
                         });
}

Var sigmoid(Var a) {
  const std::size_t ia = a.id();
  Array2 out = map(a.value(), [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  Array2 s = out;
  return a.tape().record("sigmoid", std::move(out), {ia}, [ia, s = std::move(s)](Tape& t, const Array2& g) {
    t.accumulate(ia, chain(g, [&](std::size_t i) { return s[i] * (1.0 - s[i]); }));
  });
}

Var softmax(Var a) {
  const Array2& x = a.value();
  Array2 out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mx = x(r, 0);
    for (std::size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, x(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out(r, c) = std::exp(x(r, c) - mx);
      z += out(r, c);
    }
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) /= z;
  }
  const std::size_t ia = a.id();
  Array2 s = out;
  return a.tape().record("softmax", std::move(out), {ia},
                         [ia, s = std::move(s)](Tape& t, const Array2& g) {
                           Array2 dx(g.rows(), g.cols());
                           for (std::size_t r = 0; r < g.rows(); ++r) {
                             double dot = 0.0;
                             for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * s(r, c);
                             for (std::size_t c = 0; c < g.cols(); ++c)
                               dx(r, c) = s(r, c) * (g(r, c) - dot);
                           }
                           t.accumulate(ia, dx);
                         });
}

Var log(Var a, double floor) {
  if (!(floor >= 0.0) || !std::isfinite(floor)) throw std::invalid_argument("log: invalid floor");
  const std::size_t ia = a.id();
  Array2 out = map(a.value(), [floor](double v) { return std::log(std::max(v, floor)); });
  return a.tape().record("log", std::move(out), {ia}, [ia, floor](Tape& t, const Array2& g) {
    const Array2& x = t.value(ia);
    t.accumulate(ia, chain(g, [&](std::size_t i) { return x[i] > floor ? 1.0 / x[i] : 0.0; }));
  });
}

Var exp(Var a) {
  const std::size_t ia = a.id();
  Array2 out = map(a.value(), [](double v) { return std::exp(v); });
  Array2 e = out;
  return a.tape().record("exp", std::move(out), {ia}, [ia, e = std::move(e)](Tape& t, const Array2& g) {
    t.accumulate(ia, chain(g, [&](std::size_t i) { return e[i]; }));
  });
}

Var square(Var a) {
  const std::size_t ia = a.id();
  return a.tape().record("square", map(a.value(), [](double v) { return v * v; }), {ia},
                         [ia](Tape& t, const Array2& g) {
                           const Array2& x = t.value(ia);
                           t.accumulate(ia, chain(g, [&](std::size_t i) { return 2.0 * x[i]; }));
                         });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  return a.tape().record("sum", Array2::scalar(s), {ia}, [ia](Tape& t, const Array2& g) {
    const Array2& x = t.value(ia);
    t.accumulate(ia, Array2(x.rows(), x.cols(), g[0]));
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean: empty input");
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  return a.tape().record("mean", Array2::scalar(s / static_cast<double>(n)), {ia},
                         [ia, n](Tape& t, const Array2& g) {
                           const Array2& x = t.value(ia);
                           t.accumulate(ia, Array2(x.rows(), x.cols(), g[0] / static_cast<double>(n)));
                         });
}

Var row_sum(Var a) {
  const Array2& x = a.value();
  Array2 out(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, 0) += x(r, c);
  const std::size_t ia = a.id();
  return a.tape().record("row_sum", std::move(out), {ia}, [ia](Tape& t, const Array2& g) {
    const Array2& x = t.value(ia);
    Array2 dx(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) dx(r, c) = g(r, 0);
    t.accumulate(ia, dx);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Tape& t = parts.front().tape();
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    if (&p.tape() != &t) throw std::invalid_argument("concat_rows: nodes on different tapes");
    if (p.cols() != cols) {
      throw ShapeError("concat_rows: shape mismatch " + parts.front().value().shape_string() +
                       " vs " + p.value().shape_string());
    }
    ids.push_back(p.id());
    offsets.push_back(rows);
    rows += p.rows();
  }
  Array2 out(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Array2& v = parts[k].value();
    std::copy(v.data().begin(), v.data().end(), out.data().begin() + offsets[k] * cols);
  }
  auto parents = ids;
  return t.record("concat_rows", std::move(out), std::move(parents),
                  [ids, offsets, cols](Tape& t, const Array2& g) {
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (!t.requires_grad(ids[k])) continue;
                      const Array2& v = t.value(ids[k]);
                      Array2 d(v.rows(), cols);
                      auto src = g.data().subspan(offsets[k] * cols, v.size());
                      std::copy(src.begin(), src.end(), d.data().begin());
                      t.accumulate(ids[k], d);
                    }
                  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Tape& t = parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    if (&p.tape() != &t) throw std::invalid_argument("concat_cols: nodes on different tapes");
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: shape mismatch " + parts.front().value().shape_string() +
                       " vs " + p.value().shape_string());
    }
    ids.push_back(p.id());
    offsets.push_back(cols);
    cols += p.cols();
  }
  Array2 out(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Array2& v = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, offsets[k] + c) = v(r, c);
  }
  auto parents = ids;
  return t.record("concat_cols", std::move(out), std::move(parents),
                  [ids, offsets](Tape& t, const Array2& g) {
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (!t.requires_grad(ids[k])) continue;
                      const Array2& v = t.value(ids[k]);
                      Array2 d(v.rows(), v.cols());
                      for (std::size_t r = 0; r < v.rows(); ++r)
                        for (std::size_t c = 0; c < v.cols(); ++c) d(r, c) = g(r, offsets[k] + c);
                      t.accumulate(ids[k], d);
                    }
                  });
}

Var dropout(Var a, const Array2& mask, double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  require_same_shape(a.value(), mask, "dropout");
  const double keep_scale = 1.0 / (1.0 - rate);
  Array2 factor(mask.rows(), mask.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0.0 && mask[i] != 1.0) throw std::invalid_argument("dropout: mask must be binary");
    factor[i] = mask[i] * keep_scale;
  }
  Array2 out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor[i];
  const std::size_t ia = a.id();
  return a.tape().record("dropout", std::move(out), {ia},
                         [ia, factor = std::move(factor)](Tape& t, const Array2& g) {
                           t.accumulate(ia, chain(g, [&](std::size_t i) { return factor[i]; }));
                         });
}

Var gradient_reverse(Var a, double lambda) {
  if (!std::isfinite(lambda)) throw NonFiniteError("gradient_reverse: non-finite lambda");
  const std::size_t ia = a.id();
  return a.tape().record("gradient_reverse", a.value(), {ia}, [ia, lambda](Tape& t, const Array2& g) {
    t.accumulate(ia, map(g, [lambda](double v) { return -lambda * v; }));
  });
}

}  // namespace utep::ndgrad
