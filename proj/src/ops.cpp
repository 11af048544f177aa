/* Copyright 2026 The CAT Codec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "cat/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "cat/errors.hpp"

namespace cat {
namespace {

bool needs_record(const Tape& tape, std::initializer_list<const TensorPtr*> inputs) {
  if (!tape.recording()) return false;
  for (const TensorPtr* t : inputs) {
    if ((*t)->requires_grad()) return true;
  }
  return false;
}

TensorPtr output_like(Shape shape, bool requires_grad) {
  auto out = std::make_shared<Tensor>(std::move(shape));
  out->set_requires_grad(requires_grad);
  return out;
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* arg) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + arg + " must have rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
  }
}

// out[m x n] += a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

// out[m x k] += a[m x n] * b[k x n]^T
void gemm_nt(const double* a, const double* b, double* out, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
      out[i * k + p] += acc;
    }
  }
}

// out[k x n] += a[m x k]^T * b[m x n]
void gemm_tn(const double* a, const double* b, double* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      double* orow = out + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

struct ConvGeometry {
  std::size_t n, c, h, w;
  std::size_t f, kh, kw;
  std::size_t stride, pad;
  std::size_t oh, ow;

  std::size_t patch() const { return c * kh * kw; }
  std::size_t positions() const { return oh * ow; }
};

void im2col(const double* x, const ConvGeometry& g, double* cols) {
  const std::size_t npos = g.positions();
  for (std::size_t ch = 0; ch < g.c; ++ch) {
    const double* plane = x + ch * g.h * g.w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        double* dst = cols + ((ch * g.kh + i) * g.kw + j) * npos;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + i) - static_cast<std::ptrdiff_t>(g.pad);
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * g.stride + j) - static_cast<std::ptrdiff_t>(g.pad);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(g.h) &&
                                ix < static_cast<std::ptrdiff_t>(g.w);
            dst[oy * g.ow + ox] = inside ? plane[iy * g.w + ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, const ConvGeometry& g, double* dx) {
  const std::size_t npos = g.positions();
  for (std::size_t ch = 0; ch < g.c; ++ch) {
    double* plane = dx + ch * g.h * g.w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const double* src = cols + ((ch * g.kh + i) * g.kw + j) * npos;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + i) - static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * g.stride + j) - static_cast<std::ptrdiff_t>(g.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            plane[iy * g.w + ix] += src[oy * g.ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace

TensorPtr matmul(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  require_rank(*a, 2, "matmul", "lhs");
  require_rank(*b, 2, "matmul", "rhs");
  const std::size_t m = a->dim(0), k = a->dim(1), n = b->dim(1);
  if (b->dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a->shape()) + " vs " +
                         shape_string(b->shape()));
  }
  const bool rec = needs_record(tape, {&a, &b});
  auto out = output_like({m, n}, rec);
  gemm_nn(a->data().data(), b->data().data(), out->data().data(), m, k, n);
  if (rec) {
    tape.record("matmul", [a, b, out, m, k, n] {
      if (!out->has_grad()) return;
      const double* dc = out->grad().data();
      if (a->requires_grad()) gemm_nt(dc, b->data().data(), a->grad().data(), m, n, k);
      if (b->requires_grad()) gemm_tn(a->data().data(), dc, b->grad().data(), m, k, n);
    });
  }
  return out;
}

TensorPtr add_bias(Tape& tape, const TensorPtr& x, const TensorPtr& bias) {
  require_rank(*x, 2, "add_bias", "x");
  const std::size_t m = x->dim(0), n = x->dim(1);
  if (bias->size() != n) {
    throw DimensionError("add_bias: bias " + shape_string(bias->shape()) + " does not match " +
                         shape_string(x->shape()));
  }
  const bool rec = needs_record(tape, {&x, &bias});
  auto out = output_like(x->shape(), rec);
  auto xs = x->data();
  auto bs = bias->data();
  auto os = out->data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) os[i * n + j] = xs[i * n + j] + bs[j];
  }
  if (rec) {
    tape.record("add_bias", [x, bias, out, m, n] {
      if (!out->has_grad()) return;
      auto g = out->grad();
      if (x->requires_grad()) {
        auto dx = x->grad();
        for (std::size_t i = 0; i < m * n; ++i) dx[i] += g[i];
      }
      if (bias->requires_grad()) {
        auto db = bias->grad();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) db[j] += g[i * n + j];
        }
      }
    });
  }
  return out;
}

TensorPtr conv2d(Tape& tape, const TensorPtr& x, const TensorPtr& w, Conv2dParams params) {
  require_rank(*x, 4, "conv2d", "input");
  require_rank(*w, 4, "conv2d", "kernel");
  if (params.stride == 0) throw DimensionError("conv2d: stride must be positive");
  ConvGeometry g{};
  g.n = x->dim(0);
  g.c = x->dim(1);
  g.h = x->dim(2);
  g.w = x->dim(3);
  g.f = w->dim(0);
  g.kh = w->dim(2);
  g.kw = w->dim(3);
  g.stride = params.stride;
  g.pad = params.pad;
  if (w->dim(1) != g.c) {
    throw DimensionError("conv2d: channel mismatch, input " + shape_string(x->shape()) + " vs kernel " +
                         shape_string(w->shape()));
  }
  if (g.kh > g.h + 2 * g.pad || g.kw > g.w + 2 * g.pad) {
    throw DimensionError("conv2d: kernel " + shape_string(w->shape()) + " larger than padded input " +
                         shape_string(x->shape()));
  }
  g.oh = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
  g.ow = (g.w + 2 * g.pad - g.kw) / g.stride + 1;

  const bool rec = needs_record(tape, {&x, &w});
  auto out = output_like({g.n, g.f, g.oh, g.ow}, rec);
  const std::size_t col_size = g.patch() * g.positions();
  const std::size_t in_stride = g.c * g.h * g.w;
  const std::size_t out_stride = g.f * g.positions();

  // Columns are kept for the backward pass only when recording.
  auto cols = std::make_shared<std::vector<double>>(rec ? col_size * g.n : col_size);
  for (std::size_t img = 0; img < g.n; ++img) {
    double* col = cols->data() + (rec ? img * col_size : 0);
    im2col(x->data().data() + img * in_stride, g, col);
    gemm_nn(w->data().data(), col, out->data().data() + img * out_stride, g.f, g.patch(), g.positions());
  }
  if (rec) {
    tape.record("conv2d", [x, w, out, cols, g, col_size, in_stride, out_stride] {
      if (!out->has_grad()) return;
      const double* dout = out->grad().data();
      std::vector<double> dcol(x->requires_grad() ? col_size : 0);
      for (std::size_t img = 0; img < g.n; ++img) {
        const double* dimg = dout + img * out_stride;
        const double* col = cols->data() + img * col_size;
        if (w->requires_grad()) gemm_nt(dimg, col, w->grad().data(), g.f, g.positions(), g.patch());
        if (x->requires_grad()) {
          std::fill(dcol.begin(), dcol.end(), 0.0);
          gemm_tn(w->data().data(), dimg, dcol.data(), g.f, g.patch(), g.positions());
          col2im_add(dcol.data(), g, x->grad().data() + img * in_stride);
        }
      }
    });
  }
  return out;
}

TensorPtr add_channel_bias(Tape& tape, const TensorPtr& x, const TensorPtr& bias) {
  require_rank(*x, 4, "add_channel_bias", "x");
  const std::size_t n = x->dim(0), c = x->dim(1), plane = x->dim(2) * x->dim(3);
  if (bias->size() != c) {
    throw DimensionError("add_channel_bias: bias " + shape_string(bias->shape()) + " does not match " +
                         shape_string(x->shape()));
  }
  const bool rec = needs_record(tape, {&x, &bias});
  auto out = output_like(x->shape(), rec);
  auto xs = x->data();
  auto bs = bias->data();
  auto os = out->data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (i * c + ch) * plane;
      for (std::size_t p = 0; p < plane; ++p) os[base + p] = xs[base + p] + bs[ch];
    }
  }
  if (rec) {
    tape.record("add_channel_bias", [x, bias, out, n, c, plane] {
      if (!out->has_grad()) return;
      auto g = out->grad();
      if (x->requires_grad()) {
        auto dx = x->grad();
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
      }
      if (bias->requires_grad()) {
        auto db = bias->grad();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            const std::size_t base = (i * c + ch) * plane;
            double acc = 0.0;
            for (std::size_t p = 0; p < plane; ++p) acc += g[base + p];
            db[ch] += acc;
          }
        }
      }
    });
  }
  return out;
}

TensorPtr relu(Tape& tape, const TensorPtr& x) {
  const bool rec = needs_record(tape, {&x});
  auto out = output_like(x->shape(), rec);
  auto xs = x->data();
  auto os = out->data();
  for (std::size_t i = 0; i < xs.size(); ++i) os[i] = xs[i] > 0.0 ? xs[i] : 0.0;
  if (rec) {
    tape.record("relu", [x, out] {
      if (!out->has_grad()) return;
      auto g = out->grad();
      auto xs = x->data();
      auto dx = x->grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (xs[i] > 0.0) dx[i] += g[i];
      }
    });
  }
  return out;
}

TensorPtr reshape(Tape& tape, const TensorPtr& x, Shape shape) {
  if (shape_size(shape) != x->size()) {
    throw DimensionError("reshape: cannot view " + shape_string(x->shape()) + " as " + shape_string(shape));
  }
  const bool rec = needs_record(tape, {&x});
  auto out = std::make_shared<Tensor>(std::move(shape), std::vector<double>(x->data().begin(), x->data().end()));
  out->set_requires_grad(rec);
  if (rec) {
    tape.record("reshape", [x, out] {
      if (!out->has_grad()) return;
      auto g = out->grad();
      auto dx = x->grad();
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    });
  }
  return out;
}

TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape() != b->shape()) {
    throw DimensionError("add: shapes differ, " + shape_string(a->shape()) + " vs " + shape_string(b->shape()));
  }
  const bool rec = needs_record(tape, {&a, &b});
  auto out = output_like(a->shape(), rec);
  auto as = a->data();
  auto bs = b->data();
  auto os = out->data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = as[i] + bs[i];
  if (rec) {
    tape.record("add", [a, b, out] {
      if (!out->has_grad()) return;
      auto g = out->grad();
      for (const TensorPtr* t : {&a, &b}) {
        if (!(*t)->requires_grad()) continue;
        auto d = (*t)->grad();
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
    });
  }
  return out;
}

TensorPtr scale(Tape& tape, const TensorPtr& x, double factor) {
  const bool rec = needs_record(tape, {&x});
  auto out = output_like(x->shape(), rec);
  auto xs = x->data();
  auto os = out->data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = factor * xs[i];
  if (rec) {
    tape.record("scale", [x, out, factor] {
      if (!out->has_grad()) return;
      auto g = out->grad();
      auto dx = x->grad();
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += factor * g[i];
    });
  }
  return out;
}

TensorPtr sum(Tape& tape, const TensorPtr& x) {
  const bool rec = needs_record(tape, {&x});
  auto out = output_like({1}, rec);
  double acc = 0.0;
  for (double v : x->data()) acc += v;
  (*out)[0] = acc;
  if (rec) {
    tape.record("sum", [x, out] {
      if (!out->has_grad()) return;
      const double g = out->grad()[0];
      for (double& d : x->grad()) d += g;
    });
  }
  return out;
}

TensorPtr softmax_cross_entropy(Tape& tape, const TensorPtr& logits, std::span<const int> labels) {
  require_rank(*logits, 2, "softmax_cross_entropy", "logits");
  const std::size_t n = logits->dim(0), k = logits->dim(1);
  if (labels.size() != n) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                         shape_string(logits->shape()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw InputError("softmax_cross_entropy: label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                       " outside [0, " + std::to_string(k) + ")");
    }
  }
  const bool rec = needs_record(tape, {&logits});
  auto out = output_like({1}, rec);
  auto probs = std::make_shared<std::vector<double>>(n * k);
  auto ls = logits->data();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = ls.data() + i * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double e = std::exp(row[j] - mx);
      (*probs)[i * k + j] = e;
      z += e;
    }
    for (std::size_t j = 0; j < k; ++j) (*probs)[i * k + j] /= z;
    loss += -(row[labels[i]] - mx - std::log(z));
  }
  (*out)[0] = loss / static_cast<double>(n);
  if (rec) {
    std::vector<int> label_copy(labels.begin(), labels.end());
    tape.record("softmax_cross_entropy", [logits, out, probs, label_copy = std::move(label_copy), n, k] {
      if (!out->has_grad()) return;
      const double g = out->grad()[0] / static_cast<double>(n);
      auto dx = logits->grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const double target = static_cast<std::size_t>(label_copy[i]) == j ? 1.0 : 0.0;
          dx[i * k + j] += g * ((*probs)[i * k + j] - target);
        }
      }
    });
  }
  return out;
}

void sgd_step(std::span<Parameter> params, const SgdOptions& options) {
  for (Parameter& p : params) {
    auto theta = p.value->data();
    if (p.velocity.size() != theta.size()) p.velocity.assign(theta.size(), 0.0);
    const bool has_grad = p.value->has_grad();
    auto g = has_grad ? p.value->grad() : std::span<double>{};
    const double wd = p.decay ? options.weight_decay : 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = has_grad ? g[i] : 0.0;
      p.velocity[i] = options.momentum * p.velocity[i] + (gi + wd * theta[i]);
      theta[i] -= options.lr * p.velocity[i];
    }
  }
}

void zero_grads(std::span<Parameter> params) {
  for (Parameter& p : params) p.value->zero_grad();
}

}  // namespace cat
