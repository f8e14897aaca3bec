#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "coex/params.hpp"
#include "coex/tensor.hpp"

namespace coex::nd {

class Graph;

// Lightweight handle to a node on a Graph's tape.
struct Var {
  Graph* g = nullptr;
  int id = -1;

  bool valid() const { return g != nullptr && id >= 0; }
  const Tensor& value() const;
  const std::vector<int>& shape() const;
};

// Tape-based reverse-mode differentiation over Tensors. Each operator records
// one node; backward() walks the tape once in reverse and accumulates into the
// grad tensors of every ParamEntry that was brought in via param().
class Graph {
 public:
  Var input(Tensor t);          // constant leaf (no gradient flows out of it)
  Var param(ParamEntry& e);     // trainable leaf; backward() adds into e.grad

  // loss must be scalar; throws otherwise. May be called once per graph.
  void backward(Var loss);

  size_t num_nodes() const { return nodes_.size(); }

  // --- internals used by operator implementations ---
  struct Node {
    Tensor out;                       // owned value (unused for param leaves)
    Tensor grad;                      // allocated during backward
    ParamEntry* pe = nullptr;         // set only for param leaves
    std::vector<int> parents;
    // reads this node's grad, adds into parents' grads; second arg is own id
    std::function<void(Graph&, int)> backprop;
    bool requires_grad = false;
  };

  int add_node(const char* op_name, Tensor out, std::vector<int> parents,
               std::function<void(Graph&, int)> backprop);
  const Tensor& val(int id) const;
  Tensor& grad_buf(int id);
  Node& node(int id) { return *nodes_[id]; }

 private:
  // unique_ptr keeps node (and value) addresses stable while the tape grows,
  // so references returned by Var::value() survive later op calls
  std::vector<std::unique_ptr<Node>> nodes_;
  bool backward_done_ = false;
};

// ---- operator set (all record onto the Vars' graph) ----

// x [B,H,W,Cin], w [KH,KW,Cin,Cout], b [Cout] -> [B,OH,OW,Cout], valid (unpadded)
// convolution with OH = (H-KH)/stride + 1 (floor).
Var conv2d(Var x, Var w, Var b, int stride);

// x [B,In], w [In,Out], b [Out] -> [B,Out]
Var dense(Var x, Var w, Var b);

Var relu(Var x);
Var leaky_relu(Var x, double negative_slope = 0.01);

// Row-wise over the last axis (leading axes are batch):
Var softmax(Var x);
Var sparsemax(Var x);

// logits [..,N] + one target index per row -> per-row loss [..] (scalar for rank 1).
Var cross_entropy_with_logits(Var logits, const std::vector<int>& targets);

// Entropy of softmax(logits), per row.
Var softmax_entropy(Var logits);
// Entropy of an explicit distribution (0·log 0 = 0), per row.
Var entropy_from_probs(Var probs);

// Elementwise; shapes must match exactly.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var minimum(Var a, Var b);

// Concatenate along the last axis; leading axes must match.
Var concat_last(Var a, Var b);

Var sum(Var x);        // -> scalar
Var mean(Var x);       // -> scalar
Var sum_last(Var x);   // [..,N] -> [..]

Var scale(Var x, double c);
Var clip(Var x, double lo, double hi);   // gradient passes where lo <= x <= hi
Var log(Var x);
Var exp(Var x);

// alpha [B,M] weights, e [B,M,A] -> [B,A]: out[b,a] = sum_m alpha[b,m]*e[b,m,a]
Var grid_weighted_sum(Var alpha, Var e);

Var reshape(Var x, std::vector<int> new_shape);

// Non-recorded helpers on raw tensors.
std::vector<double> tensor_row(const Tensor& t, int row);  // [R,N] -> row copy
int argmax_last(const double* p, int n);                   // lowest index wins ties

}  // namespace coex::nd
