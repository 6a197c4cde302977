#include "jointnlu/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "jointnlu/error.hpp"

namespace jointnlu {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

using detail::make_result;
using detail::Node;

void require_matrix(const Tensor& t, const char* op) {
  if (t.ndim() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got shape " + shape_str(t.shape()));
  }
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                   shape_str(b.shape()));
}

// b broadcasts over the rows of a when it is a vector matching a's last dim.
bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  return b.ndim() == 1 && a.ndim() >= 2 && a.shape().back() == b.dim(0);
}

// Views a 1-D or 2-D tensor as `groups` runs of `len` elements spaced by
// `stride`, run g starting at g * outer_step.
struct AxisLayout {
  std::size_t groups;
  std::size_t len;
  std::size_t stride;
  std::size_t outer_step;  // offset between consecutive groups
};

AxisLayout axis_layout(const Tensor& x, std::size_t axis, const char* op) {
  const auto& s = x.shape();
  if (s.size() == 1 && axis == 0) return {1, s[0], 1, 0};
  if (s.size() == 2 && axis == 1) return {s[0], s[1], 1, s[1]};
  if (s.size() == 2 && axis == 0) return {s[1], s[0], s[1], 1};
  throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for shape " +
                   shape_str(s));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows()) mismatch("matmul", a, b);
  const auto m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() = ConstMap(a.values().data(), m, k) *
                                       ConstMap(b.values().data(), k, n);
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    auto& lhs = *self.inputs[0];
    auto& rhs = *self.inputs[1];
    ConstMap dout(self.grad.data(), m, n);
    if (lhs.requires_grad) {
      lhs.ensure_grad();
      MutMap(lhs.grad.data(), m, k).noalias() +=
          dout * ConstMap(rhs.value.data(), k, n).transpose();
    }
    if (rhs.requires_grad) {
      rhs.ensure_grad();
      MutMap(rhs.grad.data(), k, n).noalias() +=
          ConstMap(lhs.value.data(), m, k).transpose() * dout;
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_matrix(x, "linear");
  require_matrix(weight, "linear");
  if (x.cols() != weight.cols()) mismatch("linear", x, weight);
  const bool has_bias = bias.defined();
  if (has_bias && (bias.ndim() != 1 || bias.dim(0) != weight.rows())) {
    mismatch("linear", weight, bias);
  }
  const auto m = x.rows(), in = x.cols(), out_dim = weight.rows();
  std::vector<double> out(m * out_dim);
  MutMap y(out.data(), m, out_dim);
  y.noalias() = ConstMap(x.values().data(), m, in) *
                ConstMap(weight.values().data(), out_dim, in).transpose();
  if (has_bias) {
    y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.values().data(), out_dim);
  }
  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result({m, out_dim}, std::move(out), std::move(inputs),
                     [m, in, out_dim](Node& self) {
                       ConstMap dy(self.grad.data(), m, out_dim);
                       auto& xn = *self.inputs[0];
                       auto& wn = *self.inputs[1];
                       if (xn.requires_grad) {
                         xn.ensure_grad();
                         MutMap(xn.grad.data(), m, in).noalias() +=
                             dy * ConstMap(wn.value.data(), out_dim, in);
                       }
                       if (wn.requires_grad) {
                         wn.ensure_grad();
                         MutMap(wn.grad.data(), out_dim, in).noalias() +=
                             dy.transpose() * ConstMap(xn.value.data(), m, in);
                       }
                       if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
                         auto& bn = *self.inputs[2];
                         bn.ensure_grad();
                         Eigen::Map<Eigen::RowVectorXd>(bn.grad.data(), out_dim) +=
                             dy.colwise().sum();
                       }
                     });
}

Tensor transpose(const Tensor& x) {
  require_matrix(x, "transpose");
  const auto r = x.rows(), c = x.cols();
  std::vector<double> out(r * c);
  MutMap(out.data(), c, r) = ConstMap(x.values().data(), r, c).transpose();
  return make_result({c, r}, std::move(out), {x}, [r, c](Node& self) {
    auto& in = *self.inputs[0];
    in.ensure_grad();
    MutMap(in.grad.data(), r, c) += ConstMap(self.grad.data(), c, r).transpose();
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return make_result(std::move(shape), std::move(out), {x}, [](Node& self) {
    auto& in = *self.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += self.grad[i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) {
    std::vector<double> out(a.numel());
    auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
      for (auto& in : self.inputs) {
        if (!in->requires_grad) continue;
        in->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad[i] += self.grad[i];
      }
    });
  }
  if (!is_row_broadcast(a, b)) mismatch("add", a, b);
  const auto width = b.dim(0);
  std::vector<double> out(a.values().begin(), a.values().end());
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % width];
  return make_result(a.shape(), std::move(out), {a, b}, [width](Node& self) {
    auto& an = *self.inputs[0];
    auto& bn = *self.inputs[1];
    if (an.requires_grad) {
      an.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) an.grad[i] += self.grad[i];
    }
    if (bn.requires_grad) {
      bn.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) bn.grad[i % width] += self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape() && !is_row_broadcast(a, b)) mismatch("mul", a, b);
  // Equal shapes index b like a; a row-broadcast vector wraps every width.
  const auto width = b.numel();
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i % width];
  return make_result(a.shape(), std::move(out), {a, b}, [width](Node& self) {
    auto& an = *self.inputs[0];
    auto& bn = *self.inputs[1];
    if (an.requires_grad) {
      an.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        an.grad[i] += self.grad[i] * bn.value[i % width];
      }
    }
    if (bn.requires_grad) {
      bn.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        bn.grad[i % width] += self.grad[i] * an.value[i];
      }
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.values().begin(), x.values().end());
  for (auto& v : out) v *= factor;
  return make_result(x.shape(), std::move(out), {x}, [factor](Node& self) {
    auto& in = *self.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += self.grad[i] * factor;
  });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  const auto& first = parts.front();
  const auto nd = first.ndim();
  if (nd == 0 || nd > 2 || axis >= nd) {
    throw ShapeError("concat: axis " + std::to_string(axis) + " invalid for shape " +
                     shape_str(first.shape()));
  }
  for (const auto& p : parts) {
    if (p.ndim() != nd) mismatch("concat", first, p);
    if (nd == 2 && axis == 0 && p.cols() != first.cols()) mismatch("concat", first, p);
    if (nd == 2 && axis == 1 && p.rows() != first.rows()) mismatch("concat", first, p);
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  if (nd == 1 || axis == 0) {
    // Row-major storage makes axis-0 concatenation a plain append.
    std::vector<double> out;
    std::vector<std::size_t> offsets;
    std::size_t lead = 0;
    for (const auto& p : parts) {
      offsets.push_back(out.size());
      out.insert(out.end(), p.values().begin(), p.values().end());
      lead += p.dim(0);
    }
    Shape shape = first.shape();
    shape[0] = lead;
    return make_result(std::move(shape), std::move(out), std::move(inputs),
                       [offsets](Node& self) {
                         for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                           auto& in = *self.inputs[k];
                           if (!in.requires_grad) continue;
                           in.ensure_grad();
                           for (std::size_t i = 0; i < in.grad.size(); ++i) {
                             in.grad[i] += self.grad[offsets[k] + i];
                           }
                         }
                       });
  }
  const auto rows = first.rows();
  std::size_t width = 0;
  std::vector<std::size_t> col_offsets, widths;
  for (const auto& p : parts) {
    col_offsets.push_back(width);
    widths.push_back(p.cols());
    width += p.cols();
  }
  std::vector<double> out(rows * width);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto v = parts[k].values();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.begin() + r * widths[k], widths[k], out.begin() + r * width + col_offsets[k]);
    }
  }
  return make_result({rows, width}, std::move(out), std::move(inputs),
                     [rows, width, col_offsets, widths](Node& self) {
                       for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                         auto& in = *self.inputs[k];
                         if (!in.requires_grad) continue;
                         in.ensure_grad();
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t c = 0; c < widths[k]; ++c) {
                             in.grad[r * widths[k] + c] += self.grad[r * width + col_offsets[k] + c];
                           }
                         }
                       }
                     });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const auto nd = x.ndim();
  if (nd == 0 || nd > 2 || axis >= nd || begin > end || end > x.dim(axis)) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") on axis " + std::to_string(axis) + " invalid for shape " +
                     shape_str(x.shape()));
  }
  const std::size_t rows = nd == 1 ? 1 : x.rows();
  const std::size_t width = nd == 1 ? x.dim(0) : x.cols();
  std::size_t r0 = 0, nr = rows, c0 = 0, nc = width;
  if (nd == 1 || axis == 1) {
    c0 = begin;
    nc = end - begin;
  } else {
    r0 = begin;
    nr = end - begin;
  }
  std::vector<double> out(nr * nc);
  auto v = x.values();
  for (std::size_t r = 0; r < nr; ++r) {
    std::copy_n(v.begin() + (r0 + r) * width + c0, nc, out.begin() + r * nc);
  }
  Shape shape = nd == 1 ? Shape{nc} : Shape{nr, nc};
  return make_result(std::move(shape), std::move(out), {x}, [r0, nr, c0, nc, width](Node& self) {
    auto& in = *self.inputs[0];
    in.ensure_grad();
    for (std::size_t r = 0; r < nr; ++r) {
      for (std::size_t c = 0; c < nc; ++c) in.grad[(r0 + r) * width + c0 + c] += self.grad[r * nc + c];
    }
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  require_matrix(x, "gather_rows");
  const auto width = x.cols();
  const auto height = x.rows();
  std::vector<std::size_t> index(rows.begin(), rows.end());
  std::vector<double> out(index.size() * width);
  auto v = x.values();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= height) {
      throw ShapeError("gather_rows: row " + std::to_string(index[i]) + " out of range for shape " +
                       shape_str(x.shape()));
    }
    std::copy_n(v.begin() + index[i] * width, width, out.begin() + i * width);
  }
  const auto count = index.size();
  return make_result({count, width}, std::move(out), {x},
                     [index = std::move(index), width](Node& self) {
                       auto& in = *self.inputs[0];
                       in.ensure_grad();
                       for (std::size_t i = 0; i < index.size(); ++i) {
                         for (std::size_t c = 0; c < width; ++c) {
                           in.grad[index[i] * width + c] += self.grad[i * width + c];
                         }
                       }
                     });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return make_result({}, {total}, {x}, [](Node& self) {
    auto& in = *self.inputs[0];
    in.ensure_grad();
    for (auto& g : in.grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const auto layout = axis_layout(x, axis, "softmax");
  auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t g = 0; g < layout.groups; ++g) {
    const auto base = g * layout.outer_step;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < layout.len; ++i) peak = std::max(peak, v[base + i * layout.stride]);
    double total = 0.0;
    for (std::size_t i = 0; i < layout.len; ++i) {
      const auto idx = base + i * layout.stride;
      out[idx] = std::exp(v[idx] - peak);
      total += out[idx];
    }
    for (std::size_t i = 0; i < layout.len; ++i) out[base + i * layout.stride] /= total;
  }
  return make_result(x.shape(), out, {x}, [layout, probs = out](Node& self) {
    auto& in = *self.inputs[0];
    in.ensure_grad();
    for (std::size_t g = 0; g < layout.groups; ++g) {
      const auto base = g * layout.outer_step;
      double dot = 0.0;
      for (std::size_t i = 0; i < layout.len; ++i) {
        const auto idx = base + i * layout.stride;
        dot += self.grad[idx] * probs[idx];
      }
      for (std::size_t i = 0; i < layout.len; ++i) {
        const auto idx = base + i * layout.stride;
        in.grad[idx] += probs[idx] * (self.grad[idx] - dot);
      }
    }
  });
}

Tensor log_softmax(const Tensor& x, std::size_t axis) {
  const auto layout = axis_layout(x, axis, "log_softmax");
  auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t g = 0; g < layout.groups; ++g) {
    const auto base = g * layout.outer_step;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < layout.len; ++i) peak = std::max(peak, v[base + i * layout.stride]);
    double total = 0.0;
    for (std::size_t i = 0; i < layout.len; ++i) total += std::exp(v[base + i * layout.stride] - peak);
    const double lse = peak + std::log(total);
    for (std::size_t i = 0; i < layout.len; ++i) {
      const auto idx = base + i * layout.stride;
      out[idx] = v[idx] - lse;
    }
  }
  return make_result(x.shape(), out, {x}, [layout, logp = out](Node& self) {
    auto& in = *self.inputs[0];
    in.ensure_grad();
    for (std::size_t g = 0; g < layout.groups; ++g) {
      const auto base = g * layout.outer_step;
      double total = 0.0;
      for (std::size_t i = 0; i < layout.len; ++i) total += self.grad[base + i * layout.stride];
      for (std::size_t i = 0; i < layout.len; ++i) {
        const auto idx = base + i * layout.stride;
        in.grad[idx] += self.grad[idx] - std::exp(logp[idx]) * total;
      }
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::size_t target) {
  if (logits.ndim() != 1) {
    throw ShapeError("cross_entropy: expected a vector of logits, got " + shape_str(logits.shape()));
  }
  const std::size_t t[] = {target};
  return cross_entropy_rows(reshape(logits, {1, logits.dim(0)}), t);
}

Tensor cross_entropy_rows(const Tensor& logits, std::span<const std::size_t> targets) {
  require_matrix(logits, "cross_entropy_rows");
  const auto rows = logits.rows(), classes = logits.cols();
  if (targets.size() != rows) {
    throw ShapeError("cross_entropy_rows: " + std::to_string(targets.size()) +
                     " targets for logits of shape " + shape_str(logits.shape()));
  }
  auto v = logits.values();
  std::vector<double> probs(v.size());
  std::vector<std::size_t> tgt(targets.begin(), targets.end());
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (tgt[r] >= classes) {
      throw DataError("cross_entropy: target " + std::to_string(tgt[r]) + " out of range for " +
                      std::to_string(classes) + " classes");
    }
    const double* row = v.data() + r * classes;
    const double peak = *std::max_element(row, row + classes);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs[r * classes + c] = std::exp(row[c] - peak);
      total += probs[r * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] /= total;
    loss += peak + std::log(total) - row[tgt[r]];
  }
  return make_result({}, {loss}, {logits},
                     [classes, probs = std::move(probs), tgt = std::move(tgt)](Node& self) {
                       auto& in = *self.inputs[0];
                       in.ensure_grad();
                       const double up = self.grad[0];
                       for (std::size_t r = 0; r < tgt.size(); ++r) {
                         for (std::size_t c = 0; c < classes; ++c) {
                           const double onehot = c == tgt[r] ? 1.0 : 0.0;
                           in.grad[r * classes + c] += up * (probs[r * classes + c] - onehot);
                         }
                       }
                     });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("layer_norm: epsilon must be positive");
  if (x.ndim() == 0) throw ShapeError("layer_norm: scalar input");
  const auto width = x.shape().back();
  if (gain.ndim() != 1 || gain.dim(0) != width) mismatch("layer_norm", x, gain);
  if (bias.ndim() != 1 || bias.dim(0) != width) mismatch("layer_norm", x, bias);
  const auto rows = width == 0 ? 0 : x.numel() / width;
  auto v = x.values();
  auto g = gain.values();
  auto b = bias.values();
  std::vector<double> normed(v.size()), out(v.size()), inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = v.data() + r * width;
    double mu = 0.0;
    for (std::size_t c = 0; c < width; ++c) mu += row[c];
    mu /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t c = 0; c < width; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(width);
    inv_std[r] = 1.0 / std::sqrt(var + epsilon);
    for (std::size_t c = 0; c < width; ++c) {
      const auto idx = r * width + c;
      normed[idx] = (row[c] - mu) * inv_std[r];
      out[idx] = normed[idx] * g[c] + b[c];
    }
  }
  return make_result(x.shape(), std::move(out), {x, gain, bias},
                     [rows, width, normed = std::move(normed), inv_std = std::move(inv_std)](
                         Node& self) {
                       auto& xn = *self.inputs[0];
                       auto& gn = *self.inputs[1];
                       auto& bn = *self.inputs[2];
                       if (gn.requires_grad) gn.ensure_grad();
                       if (bn.requires_grad) bn.ensure_grad();
                       if (xn.requires_grad) xn.ensure_grad();
                       const double n = static_cast<double>(width);
                       for (std::size_t r = 0; r < rows; ++r) {
                         double mean_d = 0.0, mean_dx = 0.0;
                         for (std::size_t c = 0; c < width; ++c) {
                           const auto idx = r * width + c;
                           const double dhat = self.grad[idx] * gn.value[c];
                           mean_d += dhat;
                           mean_dx += dhat * normed[idx];
                           if (gn.requires_grad) gn.grad[c] += self.grad[idx] * normed[idx];
                           if (bn.requires_grad) bn.grad[c] += self.grad[idx];
                         }
                         if (!xn.requires_grad) continue;
                         mean_d /= n;
                         mean_dx /= n;
                         for (std::size_t c = 0; c < width; ++c) {
                           const auto idx = r * width + c;
                           const double dhat = self.grad[idx] * gn.value[c];
                           xn.grad[idx] += inv_std[r] * (dhat - mean_d - normed[idx] * mean_dx);
                         }
                       }
                     });
}

Tensor gelu(const Tensor& x) {
  auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = 0.5 * v[i] * (1.0 + std::erf(v[i] * std::numbers::sqrt2 / 2.0));
  }
  return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
    auto& in = *self.inputs[0];
    in.ensure_grad();
    const double inv_sqrt_2pi = std::numbers::inv_sqrtpi / std::numbers::sqrt2;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double z = in.value[i];
      const double cdf = 0.5 * (1.0 + std::erf(z * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * z * z);
      in.grad[i] += self.grad[i] * (cdf + z * pdf);
    }
  });
}

Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout: probability must be in [0, 1)");
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::bernoulli_distribution keep(1.0 - p);
  std::vector<double> mask(x.numel());
  for (auto& m : mask) m = keep(rng) ? keep_scale : 0.0;
  auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * mask[i];
  return make_result(x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node& self) {
    auto& in = *self.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < mask.size(); ++i) in.grad[i] += self.grad[i] * mask[i];
  });
}

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
  require_matrix(table, "embedding_lookup");
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
      throw DataError("embedding_lookup: id " + std::to_string(id) + " out of range for table " +
                      shape_str(table.shape()));
    }
    rows.push_back(static_cast<std::size_t>(id));
  }
  return gather_rows(table, rows);
}

}  // namespace jointnlu
