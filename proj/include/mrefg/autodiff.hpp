#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mrefg::ad {

using Mat = Eigen::MatrixXd;

// Learnable tensor with an accumulated gradient buffer.
struct Param {
  std::string name;
  Mat value;
  Mat grad;

  Param(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
    grad = Mat::Zero(value.rows(), value.cols());
  }
  void zero_grad() { grad.setZero(); }
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over Eigen matrices (double precision). A forward pass
// records nodes in topological order; backward() walks them in reverse.
// Column vectors are (n x 1) matrices throughout.
class Tape {
 public:
  // leaves
  Var constant(Mat v);
  Var leaf(Param& p);                       // whole-matrix parameter
  Var embedding_row(Param& table, int row); // one table row, as a column vector

  // arithmetic
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_n(const std::vector<Var>& parts);
  Var cmul(Var a, Var b);  // elementwise
  Var scale(Var a, double s);
  Var matmul(Var a, Var b);
  Var dot(Var a, Var b);  // column vectors -> 1x1

  // nonlinearities
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var leaky_relu(Var a, double negative_slope);
  Var one_minus(Var a);
  Var softmax(Var a);                        // column vector
  Var log_clamped(Var a, double floor = 1e-12);

  // structure
  Var concat_rows(const std::vector<Var>& parts);          // vertical stack
  Var weighted_sum(const std::vector<Var>& xs, Var weights);  // sum_k w_k * x_k
  Var pick(Var a, int row);                                // scalar a(row, 0)
  Var mean_n(const std::vector<Var>& scalars);

  const Mat& val(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }
  double scalar(Var v) const { return val(v)(0, 0); }

  // Seeds the root (must be 1x1) with gradient 1 and propagates.
  void backward(Var root);

  void clear();
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool has_grad = false;
    bool needs_grad = false;
    std::function<void(Tape&, int)> back;  // (tape, own index)
  };

  std::vector<Node> nodes_;

  Var push(Mat value, bool needs_grad, std::function<void(Tape&, int)> back);
  bool needs(Var v) const { return nodes_[static_cast<size_t>(v.id)].needs_grad; }
  void add_grad(Var v, const Mat& g);
  const Mat& grad_of(int id) const { return nodes_[static_cast<size_t>(id)].grad; }

  friend struct TapeTestAccess;
};

}  // namespace mrefg::ad
