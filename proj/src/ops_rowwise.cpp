#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "coex/graph.hpp"

namespace coex::nd {

namespace {

struct RowView {
  size_t rows;
  int n;
};

RowView rows_of(const char* op, const Tensor& t) {
  if (t.rank() < 1) {
    throw std::invalid_argument(std::string(op) + ": requires rank >= 1, got scalar");
  }
  const int n = t.dim(t.rank() - 1);
  if (n < 1) throw std::invalid_argument(std::string(op) + ": empty last axis " + t.shape_str());
  return RowView{t.size() / static_cast<size_t>(n), n};
}

std::vector<int> drop_last(const Tensor& t) {
  return std::vector<int>(t.shape().begin(), t.shape().end() - 1);
}

// log-sum-exp of one row, max-shifted for stability
double row_lse(const double* z, int n) {
  double m = z[0];
  for (int j = 1; j < n; ++j) m = std::max(m, z[j]);
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += std::exp(z[j] - m);
  return m + std::log(s);
}

}  // namespace

Var softmax(Var x) {
  Graph& g = *x.g;
  const Tensor& xv = x.value();
  const RowView rv = rows_of("softmax", xv);
  Tensor out(xv.shape());
  for (size_t r = 0; r < rv.rows; ++r) {
    const double* z = xv.data() + r * rv.n;
    double* p = out.data() + r * rv.n;
    const double lse = row_lse(z, rv.n);
    for (int j = 0; j < rv.n; ++j) p[j] = std::exp(z[j] - lse);
  }
  int xid = x.id;
  int id = g.add_node("softmax", std::move(out), {xid}, [xid, rv](Graph& g2, int self) {
    const Tensor& go = g2.grad_buf(self);
    const Tensor& pv = g2.val(self);
    Tensor& gx = g2.grad_buf(xid);
    for (size_t r = 0; r < rv.rows; ++r) {
      const double* p = pv.data() + r * rv.n;
      const double* d = go.data() + r * rv.n;
      double dot = 0.0;
      for (int j = 0; j < rv.n; ++j) dot += p[j] * d[j];
      double* gz = gx.data() + r * rv.n;
      for (int j = 0; j < rv.n; ++j) gz[j] += p[j] * (d[j] - dot);
    }
  });
  return Var{&g, id};
}

// Euclidean projection of each row onto the probability simplex (sort-based).
// Support set S = {j : p_j > 0}; the backward pass applies the sparsemax
// Jacobian: dz_j = dp_j - mean_{k in S}(dp_k) for j in S, else 0.
Var sparsemax(Var x) {
  Graph& g = *x.g;
  const Tensor& xv = x.value();
  const RowView rv = rows_of("sparsemax", xv);
  Tensor out(xv.shape());
  std::vector<double> sorted(rv.n);
  for (size_t r = 0; r < rv.rows; ++r) {
    const double* z = xv.data() + r * rv.n;
    double* p = out.data() + r * rv.n;
    sorted.assign(z, z + rv.n);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cumsum = 0.0, tau = 0.0;
    int support = 0;
    for (int k = 1; k <= rv.n; ++k) {
      cumsum += sorted[k - 1];
      if (1.0 + k * sorted[k - 1] > cumsum) {
        support = k;
        tau = (cumsum - 1.0) / k;
      }
    }
    (void)support;
    for (int j = 0; j < rv.n; ++j) p[j] = std::max(z[j] - tau, 0.0);
  }
  int xid = x.id;
  int id = g.add_node("sparsemax", std::move(out), {xid}, [xid, rv](Graph& g2, int self) {
    const Tensor& go = g2.grad_buf(self);
    const Tensor& pv = g2.val(self);
    Tensor& gx = g2.grad_buf(xid);
    for (size_t r = 0; r < rv.rows; ++r) {
      const double* p = pv.data() + r * rv.n;
      const double* d = go.data() + r * rv.n;
      double mean_support = 0.0;
      int count = 0;
      for (int j = 0; j < rv.n; ++j) {
        if (p[j] > 0.0) {
          mean_support += d[j];
          ++count;
        }
      }
      mean_support /= static_cast<double>(count);  // support never empty
      double* gz = gx.data() + r * rv.n;
      for (int j = 0; j < rv.n; ++j) {
        if (p[j] > 0.0) gz[j] += d[j] - mean_support;
      }
    }
  });
  return Var{&g, id};
}

Var cross_entropy_with_logits(Var logits, const std::vector<int>& targets) {
  Graph& g = *logits.g;
  const Tensor& xv = logits.value();
  const RowView rv = rows_of("cross_entropy_with_logits", xv);
  if (targets.size() != rv.rows) {
    throw std::invalid_argument("cross_entropy_with_logits: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(rv.rows) + " rows of " +
                                xv.shape_str());
  }
  Tensor out(drop_last(xv));
  std::vector<double> lses(rv.rows);
  for (size_t r = 0; r < rv.rows; ++r) {
    const int t = targets[r];
    if (t < 0 || t >= rv.n) {
      throw std::invalid_argument("cross_entropy_with_logits: target " + std::to_string(t) +
                                  " out of range for " + xv.shape_str());
    }
    const double* z = xv.data() + r * rv.n;
    lses[r] = row_lse(z, rv.n);
    out[r] = lses[r] - z[t];
  }
  int xid = logits.id;
  std::vector<int> tgt = targets;
  int id = g.add_node(
      "cross_entropy_with_logits", std::move(out), {xid},
      [xid, rv, tgt = std::move(tgt), lses = std::move(lses)](Graph& g2, int self) {
        const Tensor& go = g2.grad_buf(self);
        const Tensor& zv = g2.val(xid);
        Tensor& gz = g2.grad_buf(xid);
        for (size_t r = 0; r < rv.rows; ++r) {
          const double* z = zv.data() + r * rv.n;
          double* dz = gz.data() + r * rv.n;
          for (int j = 0; j < rv.n; ++j) {
            const double pj = std::exp(z[j] - lses[r]);
            dz[j] += (pj - (j == tgt[r] ? 1.0 : 0.0)) * go[r];
          }
        }
      });
  return Var{&g, id};
}

Var softmax_entropy(Var logits) {
  Graph& g = *logits.g;
  const Tensor& xv = logits.value();
  const RowView rv = rows_of("softmax_entropy", xv);
  Tensor out(drop_last(xv));
  std::vector<double> lses(rv.rows);
  for (size_t r = 0; r < rv.rows; ++r) {
    const double* z = xv.data() + r * rv.n;
    const double lse = row_lse(z, rv.n);
    lses[r] = lse;
    // H = -sum p*log p with log p = z - lse, so H = lse - sum p*z
    double pz = 0.0;
    for (int j = 0; j < rv.n; ++j) pz += std::exp(z[j] - lse) * z[j];
    out[r] = lse - pz;
  }
  int xid = logits.id;
  int id = g.add_node("softmax_entropy", std::move(out), {xid},
                      [xid, rv, lses = std::move(lses)](Graph& g2, int self) {
                        const Tensor& go = g2.grad_buf(self);
                        const Tensor& hv = g2.val(self);
                        const Tensor& zv = g2.val(xid);
                        Tensor& gz = g2.grad_buf(xid);
                        for (size_t r = 0; r < rv.rows; ++r) {
                          const double* z = zv.data() + r * rv.n;
                          double* dz = gz.data() + r * rv.n;
                          for (int j = 0; j < rv.n; ++j) {
                            const double logp = z[j] - lses[r];
                            dz[j] += -std::exp(logp) * (logp + hv[r]) * go[r];
                          }
                        }
                      });
  return Var{&g, id};
}

Var entropy_from_probs(Var probs) {
  Graph& g = *probs.g;
  const Tensor& pv = probs.value();
  const RowView rv = rows_of("entropy_from_probs", pv);
  Tensor out(drop_last(pv));
  for (size_t r = 0; r < rv.rows; ++r) {
    const double* p = pv.data() + r * rv.n;
    double h = 0.0;
    for (int j = 0; j < rv.n; ++j) {
      if (p[j] < 0.0) {
        throw std::invalid_argument("entropy_from_probs: negative probability in " +
                                    pv.shape_str());
      }
      if (p[j] > 0.0) h -= p[j] * std::log(p[j]);
    }
    out[r] = h;
  }
  int pid = probs.id;
  int id = g.add_node("entropy_from_probs", std::move(out), {pid},
                      [pid, rv](Graph& g2, int self) {
                        const Tensor& go = g2.grad_buf(self);
                        const Tensor& pv2 = g2.val(pid);
                        Tensor& gp = g2.grad_buf(pid);
                        for (size_t r = 0; r < rv.rows; ++r) {
                          const double* p = pv2.data() + r * rv.n;
                          double* dp = gp.data() + r * rv.n;
                          for (int j = 0; j < rv.n; ++j) {
                            // subgradient 0 at p=0 (the entropy slope is unbounded there)
                            if (p[j] > 0.0) dp[j] += -(std::log(p[j]) + 1.0) * go[r];
                          }
                        }
                      });
  return Var{&g, id};
}

}  // namespace coex::nd
