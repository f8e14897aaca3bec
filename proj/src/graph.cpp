#include "coex/graph.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <utility>

namespace coex::nd {

const Tensor& Var::value() const {
  if (!valid()) throw std::logic_error("Var::value: uninitialized Var");
  return g->val(id);
}

const std::vector<int>& Var::shape() const { return value().shape(); }

int Graph::add_node(const char* op_name, Tensor out, std::vector<int> parents,
                    std::function<void(Graph&, int)> backprop) {
  if (!out.all_finite()) {
    throw std::domain_error(std::string(op_name) + ": non-finite output");
  }
  auto n = std::make_unique<Node>();
  n->out = std::move(out);
  n->parents = std::move(parents);
  n->backprop = std::move(backprop);
  for (int p : n->parents) {
    if (p < 0 || p >= static_cast<int>(nodes_.size())) {
      throw std::logic_error(std::string(op_name) + ": parent node out of range");
    }
    if (nodes_[p]->requires_grad) n->requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Var Graph::input(Tensor t) {
  auto n = std::make_unique<Node>();
  n->out = std::move(t);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::param(ParamEntry& e) {
  auto n = std::make_unique<Node>();
  n->pe = &e;
  n->requires_grad = true;
  n->backprop = [](Graph& g, int self) {
    Node& me = g.node(self);
    const Tensor& gbuf = me.grad;
    Tensor& dst = me.pe->grad;
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += gbuf[i];
  };
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Graph::val(int id) const {
  const Node& n = *nodes_[id];
  return n.pe ? n.pe->value : n.out;
}

Tensor& Graph::grad_buf(int id) { return nodes_[id]->grad; }

void Graph::backward(Var loss) {
  if (loss.g != this) throw std::invalid_argument("backward: loss Var belongs to another graph");
  if (backward_done_) throw std::logic_error("backward: already called on this graph");
  const Tensor& lv = val(loss.id);
  if (lv.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " + lv.shape_str());
  }

  // Mark ancestors of the loss so unrelated nodes are left untouched.
  std::vector<char> marked(nodes_.size(), 0);
  std::vector<int> stack{loss.id};
  marked[loss.id] = 1;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (int p : nodes_[i]->parents) {
      if (!marked[p]) {
        marked[p] = 1;
        stack.push_back(p);
      }
    }
  }

  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (marked[i]) nodes_[i]->grad = Tensor(val(static_cast<int>(i)).shape());
  }
  nodes_[loss.id]->grad[0] = 1.0;

  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    if (!marked[i] || !nodes_[i]->requires_grad) continue;
    if (nodes_[i]->backprop) nodes_[i]->backprop(*this, i);
  }
  backward_done_ = true;
}

// ---------------------------------------------------------------------------
// shared helpers

namespace {

Graph& same_graph(const char* op, Var a, Var b) {
  if (!a.valid() || !b.valid()) throw std::logic_error(std::string(op) + ": uninitialized Var");
  if (a.g != b.g) throw std::invalid_argument(std::string(op) + ": Vars from different graphs");
  return *a.g;
}

Graph& own_graph(const char* op, Var a) {
  if (!a.valid()) throw std::logic_error(std::string(op) + ": uninitialized Var");
  return *a.g;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// elementwise

Var add(Var a, Var b) {
  Graph& g = same_graph("add", a, b);
  const Tensor &av = a.value(), &bv = b.value();
  check_same_shape("add", av, bv);
  Tensor out(av.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  int aid = a.id, bid = b.id;
  int id = g.add_node("add", std::move(out), {aid, bid}, [aid, bid](Graph& g2, int self) {
    const Tensor& go = g2.grad_buf(self);
    Tensor &ga = g2.grad_buf(aid), &gb = g2.grad_buf(bid);
    for (size_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] += go[i];
    }
  });
  return Var{&g, id};
}

Var sub(Var a, Var b) {
  Graph& g = same_graph("sub", a, b);
  const Tensor &av = a.value(), &bv = b.value();
  check_same_shape("sub", av, bv);
  Tensor out(av.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  int aid = a.id, bid = b.id;
  int id = g.add_node("sub", std::move(out), {aid, bid}, [aid, bid](Graph& g2, int self) {
    const Tensor& go = g2.grad_buf(self);
    Tensor &ga = g2.grad_buf(aid), &gb = g2.grad_buf(bid);
    for (size_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] -= go[i];
    }
  });
  return Var{&g, id};
}

Var mul(Var a, Var b) {
  Graph& g = same_graph("mul", a, b);
  const Tensor &av = a.value(), &bv = b.value();
  check_same_shape("mul", av, bv);
  Tensor out(av.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  int aid = a.id, bid = b.id;
  int id = g.add_node("mul", std::move(out), {aid, bid}, [aid, bid](Graph& g2, int self) {
    const Tensor& go = g2.grad_buf(self);
    const Tensor &av2 = g2.val(aid), &bv2 = g2.val(bid);
    Tensor &ga = g2.grad_buf(aid), &gb = g2.grad_buf(bid);
    for (size_t i = 0; i < go.size(); ++i) {
      ga[i] += bv2[i] * go[i];
      gb[i] += av2[i] * go[i];
    }
  });
  return Var{&g, id};
}

Var minimum(Var a, Var b) {
  Graph& g = same_graph("minimum", a, b);
  const Tensor &av = a.value(), &bv = b.value();
  check_same_shape("minimum", av, bv);
  Tensor out(av.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::min(av[i], bv[i]);
  int aid = a.id, bid = b.id;
  int id = g.add_node("minimum", std::move(out), {aid, bid}, [aid, bid](Graph& g2, int self) {
    const Tensor& go = g2.grad_buf(self);
    const Tensor &av2 = g2.val(aid), &bv2 = g2.val(bid);
    Tensor &ga = g2.grad_buf(aid), &gb = g2.grad_buf(bid);
    for (size_t i = 0; i < go.size(); ++i) {
      if (av2[i] < bv2[i]) {
        ga[i] += go[i];
      } else if (bv2[i] < av2[i]) {
        gb[i] += go[i];
      } else {  // tie: split evenly
        ga[i] += 0.5 * go[i];
        gb[i] += 0.5 * go[i];
      }
    }
  });
  return Var{&g, id};
}

Var relu(Var x) {
  Graph& g = own_graph("relu", x);
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  int xid = x.id;
  int id = g.add_node("relu", std::move(out), {xid}, [xid](Graph& g2, int self) {
    const Tensor& go = g2.grad_buf(self);
    const Tensor& xv2 = g2.val(xid);
    Tensor& gx = g2.grad_buf(xid);
    for (size_t i = 0; i < go.size(); ++i) {
      if (xv2[i] > 0.0) gx[i] += go[i];
    }
  });
  return Var{&g, id};
}

Var leaky_relu(Var x, double negative_slope) {
  Graph& g = own_graph("leaky_relu", x);
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : negative_slope * xv[i];
  int xid = x.id;
  int id = g.add_node("leaky_relu", std::move(out), {xid},
                      [xid, negative_slope](Graph& g2, int self) {
                        const Tensor& go = g2.grad_buf(self);
                        const Tensor& xv2 = g2.val(xid);
                        Tensor& gx = g2.grad_buf(xid);
                        for (size_t i = 0; i < go.size(); ++i) {
                          gx[i] += (xv2[i] > 0.0 ? 1.0 : negative_slope) * go[i];
                        }
                      });
  return Var{&g, id};
}

Var scale(Var x, double c) {
  Graph& g = own_graph("scale", x);
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = c * xv[i];
  int xid = x.id;
  int id = g.add_node("scale", std::move(out), {xid}, [xid, c](Graph& g2, int self) {
    const Tensor& go = g2.grad_buf(self);
    Tensor& gx = g2.grad_buf(xid);
    for (size_t i = 0; i < go.size(); ++i) gx[i] += c * go[i];
  });
  return Var{&g, id};
}

Var clip(Var x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clip: lower bound exceeds upper bound");
  Graph& g = own_graph("clip", x);
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::min(std::max(xv[i], lo), hi);
  int xid = x.id;
  int id = g.add_node("clip", std::move(out), {xid}, [xid, lo, hi](Graph& g2, int self) {
    const Tensor& go = g2.grad_buf(self);
    const Tensor& xv2 = g2.val(xid);
    Tensor& gx = g2.grad_buf(xid);
    for (size_t i = 0; i < go.size(); ++i) {
      if (xv2[i] >= lo && xv2[i] <= hi) gx[i] += go[i];
    }
  });
  return Var{&g, id};
}

Var log(Var x) {
  Graph& g = own_graph("log", x);
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(xv[i]);
  int xid = x.id;
  int id = g.add_node("log", std::move(out), {xid}, [xid](Graph& g2, int self) {
    const Tensor& go = g2.grad_buf(self);
    const Tensor& xv2 = g2.val(xid);
    Tensor& gx = g2.grad_buf(xid);
    for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i] / xv2[i];
  });
  return Var{&g, id};
}

Var exp(Var x) {
  Graph& g = own_graph("exp", x);
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(xv[i]);
  int xid = x.id;
  int id = g.add_node("exp", std::move(out), {xid}, [xid](Graph& g2, int self) {
    const Tensor& go = g2.grad_buf(self);
    const Tensor& ov = g2.val(self);
    Tensor& gx = g2.grad_buf(xid);
    for (size_t i = 0; i < go.size(); ++i) gx[i] += ov[i] * go[i];
  });
  return Var{&g, id};
}

// ---------------------------------------------------------------------------
// shape ops & reductions

Var concat_last(Var a, Var b) {
  Graph& g = same_graph("concat_last", a, b);
  const Tensor &av = a.value(), &bv = b.value();
  if (av.rank() < 1 || av.rank() != bv.rank()) {
    throw std::invalid_argument("concat_last: shape mismatch " + av.shape_str() + " vs " +
                                bv.shape_str());
  }
  for (int d = 0; d + 1 < av.rank(); ++d) {
    if (av.dim(d) != bv.dim(d)) {
      throw std::invalid_argument("concat_last: shape mismatch " + av.shape_str() + " vs " +
                                  bv.shape_str());
    }
  }
  const int na = av.dim(av.rank() - 1), nb = bv.dim(bv.rank() - 1);
  std::vector<int> oshape = av.shape();
  oshape.back() = na + nb;
  const size_t rows = av.size() / static_cast<size_t>(na);
  Tensor out(oshape);
  for (size_t r = 0; r < rows; ++r) {
    std::memcpy(out.data() + r * (na + nb), av.data() + r * na, sizeof(double) * na);
    std::memcpy(out.data() + r * (na + nb) + na, bv.data() + r * nb, sizeof(double) * nb);
  }
  int aid = a.id, bid = b.id;
  int id = g.add_node("concat_last", std::move(out), {aid, bid},
                      [aid, bid, na, nb, rows](Graph& g2, int self) {
                        const Tensor& go = g2.grad_buf(self);
                        Tensor &ga = g2.grad_buf(aid), &gb = g2.grad_buf(bid);
                        for (size_t r = 0; r < rows; ++r) {
                          const double* src = go.data() + r * (na + nb);
                          for (int j = 0; j < na; ++j) ga[r * na + j] += src[j];
                          for (int j = 0; j < nb; ++j) gb[r * nb + j] += src[na + j];
                        }
                      });
  return Var{&g, id};
}

Var sum(Var x) {
  Graph& g = own_graph("sum", x);
  const Tensor& xv = x.value();
  double acc = 0.0;
  for (size_t i = 0; i < xv.size(); ++i) acc += xv[i];
  int xid = x.id;
  int id = g.add_node("sum", Tensor::scalar(acc), {xid}, [xid](Graph& g2, int self) {
    const double go = g2.grad_buf(self)[0];
    Tensor& gx = g2.grad_buf(xid);
    for (size_t i = 0; i < gx.size(); ++i) gx[i] += go;
  });
  return Var{&g, id};
}

Var mean(Var x) {
  Graph& g = own_graph("mean", x);
  const Tensor& xv = x.value();
  if (xv.size() == 0) throw std::invalid_argument("mean: empty tensor");
  double acc = 0.0;
  for (size_t i = 0; i < xv.size(); ++i) acc += xv[i];
  const double inv_n = 1.0 / static_cast<double>(xv.size());
  int xid = x.id;
  int id = g.add_node("mean", Tensor::scalar(acc * inv_n), {xid},
                      [xid, inv_n](Graph& g2, int self) {
                        const double go = g2.grad_buf(self)[0] * inv_n;
                        Tensor& gx = g2.grad_buf(xid);
                        for (size_t i = 0; i < gx.size(); ++i) gx[i] += go;
                      });
  return Var{&g, id};
}

Var sum_last(Var x) {
  Graph& g = own_graph("sum_last", x);
  const Tensor& xv = x.value();
  if (xv.rank() < 1) throw std::invalid_argument("sum_last: requires rank >= 1, got scalar");
  const int n = xv.dim(xv.rank() - 1);
  const size_t rows = xv.size() / static_cast<size_t>(n);
  std::vector<int> oshape(xv.shape().begin(), xv.shape().end() - 1);
  Tensor out(oshape);
  for (size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += xv[r * n + j];
    out[r] = acc;
  }
  int xid = x.id;
  int id = g.add_node("sum_last", std::move(out), {xid}, [xid, n, rows](Graph& g2, int self) {
    const Tensor& go = g2.grad_buf(self);
    Tensor& gx = g2.grad_buf(xid);
    for (size_t r = 0; r < rows; ++r) {
      for (int j = 0; j < n; ++j) gx[r * n + j] += go[r];
    }
  });
  return Var{&g, id};
}

Var reshape(Var x, std::vector<int> new_shape) {
  Graph& g = own_graph("reshape", x);
  const Tensor& xv = x.value();
  if (shape_size(new_shape) != static_cast<long long>(xv.size())) {
    throw std::invalid_argument("reshape: shape mismatch " + xv.shape_str() + " vs " +
                                shape_to_string(new_shape));
  }
  Tensor out(new_shape, std::vector<double>(xv.data(), xv.data() + xv.size()));
  int xid = x.id;
  int id = g.add_node("reshape", std::move(out), {xid}, [xid](Graph& g2, int self) {
    const Tensor& go = g2.grad_buf(self);
    Tensor& gx = g2.grad_buf(xid);
    for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
  });
  return Var{&g, id};
}

Var grid_weighted_sum(Var alpha, Var e) {
  Graph& g = same_graph("grid_weighted_sum", alpha, e);
  const Tensor &av = alpha.value(), &ev = e.value();
  if (av.rank() != 2 || ev.rank() != 3 || av.dim(0) != ev.dim(0) || av.dim(1) != ev.dim(1)) {
    throw std::invalid_argument("grid_weighted_sum: shape mismatch " + av.shape_str() + " vs " +
                                ev.shape_str());
  }
  const int B = av.dim(0), M = av.dim(1), A = ev.dim(2);
  Tensor out({B, A});
  for (int b = 0; b < B; ++b) {
    for (int m = 0; m < M; ++m) {
      const double w = av[static_cast<size_t>(b) * M + m];
      const double* erow = ev.data() + (static_cast<size_t>(b) * M + m) * A;
      double* orow = out.data() + static_cast<size_t>(b) * A;
      for (int a2 = 0; a2 < A; ++a2) orow[a2] += w * erow[a2];
    }
  }
  int aid = alpha.id, eid = e.id;
  int id = g.add_node("grid_weighted_sum", std::move(out), {aid, eid},
                      [aid, eid, B, M, A](Graph& g2, int self) {
                        const Tensor& go = g2.grad_buf(self);
                        const Tensor &av2 = g2.val(aid), &ev2 = g2.val(eid);
                        Tensor &ga = g2.grad_buf(aid), &ge = g2.grad_buf(eid);
                        for (int b = 0; b < B; ++b) {
                          const double* grow = go.data() + static_cast<size_t>(b) * A;
                          for (int m = 0; m < M; ++m) {
                            const size_t bm = static_cast<size_t>(b) * M + m;
                            const double* erow = ev2.data() + bm * A;
                            double* gerow = ge.data() + bm * A;
                            double acc = 0.0;
                            for (int a2 = 0; a2 < A; ++a2) {
                              acc += erow[a2] * grow[a2];
                              gerow[a2] += av2[bm] * grow[a2];
                            }
                            ga[bm] += acc;
                          }
                        }
                      });
  return Var{&g, id};
}

// ---------------------------------------------------------------------------
// raw-tensor helpers

std::vector<double> tensor_row(const Tensor& t, int row) {
  if (t.rank() < 1) throw std::invalid_argument("tensor_row: scalar tensor");
  const int n = t.dim(t.rank() - 1);
  const size_t rows = t.size() / static_cast<size_t>(n);
  if (row < 0 || static_cast<size_t>(row) >= rows) {
    throw std::out_of_range("tensor_row: row index out of range");
  }
  const double* p = t.data() + static_cast<size_t>(row) * n;
  return std::vector<double>(p, p + n);
}

int argmax_last(const double* p, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

}  // namespace coex::nd
