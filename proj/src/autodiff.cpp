#include "mrefg/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace mrefg::ad {

namespace {

void check_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

void check_column(const Mat& a, const char* op) {
  if (a.cols() != 1) {
    throw std::invalid_argument(std::string(op) + ": expected a column vector, got " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

}  // namespace

Var Tape::push(Mat value, bool needs_grad, std::function<void(Tape&, int)> back) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  if (needs_grad) node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::add_grad(Var v, const Mat& g) {
  Node& node = nodes_[static_cast<size_t>(v.id)];
  if (!node.needs_grad) return;
  if (!node.has_grad) {
    node.grad = g;
    node.has_grad = true;
  } else {
    node.grad += g;
  }
}

void Tape::backward(Var root) {
  if (!root.valid()) throw std::invalid_argument("backward: invalid root");
  const Mat& rv = val(root);
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw std::invalid_argument("backward: root must be a 1x1 scalar");
  }
  if (!nodes_[static_cast<size_t>(root.id)].needs_grad) return;
  add_grad(root, Mat::Ones(1, 1));
  for (int i = root.id; i >= 0; --i) {
    Node& node = nodes_[static_cast<size_t>(i)];
    if (node.has_grad && node.back) node.back(*this, i);
  }
}

void Tape::clear() { nodes_.clear(); }

Var Tape::constant(Mat v) { return push(std::move(v), false, nullptr); }

Var Tape::leaf(Param& p) {
  Param* ptr = &p;
  return push(p.value, true, [ptr](Tape& t, int self) { ptr->grad += t.grad_of(self); });
}

Var Tape::embedding_row(Param& table, int row) {
  if (row < 0 || row >= table.value.rows()) {
    throw std::out_of_range("embedding_row: row " + std::to_string(row) + " out of range for " +
                            table.name);
  }
  Param* ptr = &table;
  return push(table.value.row(row).transpose(), true, [ptr, row](Tape& t, int self) {
    ptr->grad.row(row) += t.grad_of(self).transpose();
  });
}

Var Tape::add(Var a, Var b) {
  check_same_shape(val(a), val(b), "add");
  bool ng = needs(a) || needs(b);
  return push(val(a) + val(b), ng, [a, b](Tape& t, int self) {
    t.add_grad(a, t.grad_of(self));
    t.add_grad(b, t.grad_of(self));
  });
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(val(a), val(b), "sub");
  bool ng = needs(a) || needs(b);
  return push(val(a) - val(b), ng, [a, b](Tape& t, int self) {
    t.add_grad(a, t.grad_of(self));
    t.add_grad(b, -t.grad_of(self));
  });
}

Var Tape::add_n(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("add_n: empty input");
  Mat sum = val(parts[0]);
  bool ng = needs(parts[0]);
  for (size_t i = 1; i < parts.size(); ++i) {
    check_same_shape(sum, val(parts[i]), "add_n");
    sum += val(parts[i]);
    ng = ng || needs(parts[i]);
  }
  std::vector<Var> ins = parts;
  return push(std::move(sum), ng, [ins](Tape& t, int self) {
    for (Var v : ins) t.add_grad(v, t.grad_of(self));
  });
}

Var Tape::cmul(Var a, Var b) {
  check_same_shape(val(a), val(b), "cmul");
  bool ng = needs(a) || needs(b);
  return push(val(a).cwiseProduct(val(b)), ng, [a, b](Tape& t, int self) {
    t.add_grad(a, t.grad_of(self).cwiseProduct(t.val(b)));
    t.add_grad(b, t.grad_of(self).cwiseProduct(t.val(a)));
  });
}

Var Tape::scale(Var a, double s) {
  return push(val(a) * s, needs(a), [a, s](Tape& t, int self) {
    t.add_grad(a, t.grad_of(self) * s);
  });
}

Var Tape::matmul(Var a, Var b) {
  if (val(a).cols() != val(b).rows()) {
    throw std::invalid_argument("matmul: inner dimensions disagree");
  }
  bool ng = needs(a) || needs(b);
  return push(val(a) * val(b), ng, [a, b](Tape& t, int self) {
    const Mat& g = t.grad_of(self);
    t.add_grad(a, g * t.val(b).transpose());
    t.add_grad(b, t.val(a).transpose() * g);
  });
}

Var Tape::dot(Var a, Var b) {
  check_column(val(a), "dot");
  check_column(val(b), "dot");
  check_same_shape(val(a), val(b), "dot");
  Mat out(1, 1);
  out(0, 0) = val(a).col(0).dot(val(b).col(0));
  bool ng = needs(a) || needs(b);
  return push(std::move(out), ng, [a, b](Tape& t, int self) {
    double g = t.grad_of(self)(0, 0);
    t.add_grad(a, g * t.val(b));
    t.add_grad(b, g * t.val(a));
  });
}

Var Tape::sigmoid(Var a) {
  Mat out = val(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return push(std::move(out), needs(a), [a](Tape& t, int self) {
    const Mat& y = t.val(Var{self});
    t.add_grad(a, t.grad_of(self).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  });
}

Var Tape::tanh(Var a) {
  Mat out = val(a).array().tanh().matrix();
  return push(std::move(out), needs(a), [a](Tape& t, int self) {
    const Mat& y = t.val(Var{self});
    t.add_grad(a, t.grad_of(self).cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var Tape::leaky_relu(Var a, double negative_slope) {
  Mat out = val(a).unaryExpr(
      [negative_slope](double x) { return x > 0.0 ? x : negative_slope * x; });
  return push(std::move(out), needs(a), [a, negative_slope](Tape& t, int self) {
    Mat mask = t.val(a).unaryExpr(
        [negative_slope](double x) { return x > 0.0 ? 1.0 : negative_slope; });
    t.add_grad(a, t.grad_of(self).cwiseProduct(mask));
  });
}

Var Tape::one_minus(Var a) {
  return push((1.0 - val(a).array()).matrix(), needs(a), [a](Tape& t, int self) {
    t.add_grad(a, -t.grad_of(self));
  });
}

Var Tape::softmax(Var a) {
  check_column(val(a), "softmax");
  const Mat& x = val(a);
  double mx = x.maxCoeff();
  Mat e = (x.array() - mx).exp().matrix();
  Mat out = e / e.sum();
  return push(std::move(out), needs(a), [a](Tape& t, int self) {
    const Mat& y = t.val(Var{self});
    const Mat& g = t.grad_of(self);
    double yg = y.col(0).dot(g.col(0));
    t.add_grad(a, y.cwiseProduct((g.array() - yg).matrix()));
  });
}

Var Tape::log_clamped(Var a, double floor) {
  const Mat& x = val(a);
  Mat out = x.unaryExpr([floor](double v) { return std::log(v < floor ? floor : v); });
  return push(std::move(out), needs(a), [a, floor](Tape& t, int self) {
    Mat inv = t.val(a).unaryExpr(
        [floor](double v) { return v < floor ? 0.0 : 1.0 / v; });
    t.add_grad(a, t.grad_of(self).cwiseProduct(inv));
  });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
  long rows = 0;
  bool ng = false;
  for (Var v : parts) {
    check_column(val(v), "concat_rows");
    rows += val(v).rows();
    ng = ng || needs(v);
  }
  Mat out(rows, 1);
  long at = 0;
  for (Var v : parts) {
    out.block(at, 0, val(v).rows(), 1) = val(v);
    at += val(v).rows();
  }
  std::vector<Var> ins = parts;
  return push(std::move(out), ng, [ins](Tape& t, int self) {
    const Mat& g = t.grad_of(self);
    long at = 0;
    for (Var v : ins) {
      long n = t.val(v).rows();
      t.add_grad(v, g.block(at, 0, n, 1));
      at += n;
    }
  });
}

Var Tape::weighted_sum(const std::vector<Var>& xs, Var weights) {
  if (xs.empty()) throw std::invalid_argument("weighted_sum: empty input");
  check_column(val(weights), "weighted_sum");
  if (val(weights).rows() != static_cast<long>(xs.size())) {
    throw std::invalid_argument("weighted_sum: weight count does not match inputs");
  }
  const Mat& w = val(weights);
  Mat out = w(0, 0) * val(xs[0]);
  bool ng = needs(xs[0]) || needs(weights);
  for (size_t k = 1; k < xs.size(); ++k) {
    check_same_shape(val(xs[0]), val(xs[k]), "weighted_sum");
    out += w(static_cast<long>(k), 0) * val(xs[k]);
    ng = ng || needs(xs[k]);
  }
  std::vector<Var> ins = xs;
  return push(std::move(out), ng, [ins, weights](Tape& t, int self) {
    const Mat& g = t.grad_of(self);
    const Mat& w = t.val(weights);
    Mat gw(static_cast<long>(ins.size()), 1);
    for (size_t k = 0; k < ins.size(); ++k) {
      t.add_grad(ins[k], w(static_cast<long>(k), 0) * g);
      gw(static_cast<long>(k), 0) = g.cwiseProduct(t.val(ins[k])).sum();
    }
    t.add_grad(weights, gw);
  });
}

Var Tape::pick(Var a, int row) {
  check_column(val(a), "pick");
  if (row < 0 || row >= val(a).rows()) {
    throw std::out_of_range("pick: row " + std::to_string(row) + " out of range");
  }
  Mat out(1, 1);
  out(0, 0) = val(a)(row, 0);
  return push(std::move(out), needs(a), [a, row](Tape& t, int self) {
    Mat g = Mat::Zero(t.val(a).rows(), 1);
    g(row, 0) = t.grad_of(self)(0, 0);
    t.add_grad(a, g);
  });
}

Var Tape::mean_n(const std::vector<Var>& scalars) {
  if (scalars.empty()) throw std::invalid_argument("mean_n: empty input");
  double sum = 0.0;
  bool ng = false;
  for (Var v : scalars) {
    const Mat& x = val(v);
    if (x.rows() != 1 || x.cols() != 1) {
      throw std::invalid_argument("mean_n: inputs must be 1x1 scalars");
    }
    sum += x(0, 0);
    ng = ng || needs(v);
  }
  Mat out(1, 1);
  out(0, 0) = sum / static_cast<double>(scalars.size());
  std::vector<Var> ins = scalars;
  return push(std::move(out), ng, [ins](Tape& t, int self) {
    Mat g = t.grad_of(self) / static_cast<double>(ins.size());
    for (Var v : ins) t.add_grad(v, g);
  });
}

}  // namespace mrefg::ad
