#include <Eigen/Core>
#include <cstring>
#include <stdexcept>
#include <string>

#include "coex/graph.hpp"

namespace coex::nd {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;
using CMapV = Eigen::Map<const Eigen::RowVectorXd>;

struct ConvDims {
  int B, H, W, Cin, KH, KW, Cout, OH, OW, stride;
  size_t out_rows() const { return static_cast<size_t>(B) * OH * OW; }
  int patch() const { return KH * KW * Cin; }
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, const Tensor& b, int stride) {
  if (x.rank() != 4 || w.rank() != 4) {
    throw std::invalid_argument("conv2d: expected rank-4 input and kernel, got " + x.shape_str() +
                                " and " + w.shape_str());
  }
  ConvDims d;
  d.B = x.dim(0);
  d.H = x.dim(1);
  d.W = x.dim(2);
  d.Cin = x.dim(3);
  d.KH = w.dim(0);
  d.KW = w.dim(1);
  d.Cout = w.dim(3);
  d.stride = stride;
  if (w.dim(2) != d.Cin) {
    throw std::invalid_argument("conv2d: channel mismatch " + x.shape_str() + " vs " +
                                w.shape_str());
  }
  if (b.rank() != 1 || b.dim(0) != d.Cout) {
    throw std::invalid_argument("conv2d: bias shape " + b.shape_str() + " does not match kernel " +
                                w.shape_str());
  }
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  if (d.KH > d.H || d.KW > d.W) {
    throw std::invalid_argument("conv2d: kernel " + w.shape_str() + " larger than input " +
                                x.shape_str());
  }
  d.OH = (d.H - d.KH) / stride + 1;
  d.OW = (d.W - d.KW) / stride + 1;
  return d;
}

// Gather input patches into rows of P [B*OH*OW, KH*KW*Cin]. Each (kh) slice of
// a patch is contiguous in memory (KW*Cin doubles), so copy per-row-of-kernel.
void im2col(const double* x, const ConvDims& d, MatRM& P) {
  const int chunk = d.KW * d.Cin;
  for (int b = 0; b < d.B; ++b) {
    for (int oh = 0; oh < d.OH; ++oh) {
      for (int ow = 0; ow < d.OW; ++ow) {
        double* prow = P.data() + ((static_cast<size_t>(b) * d.OH + oh) * d.OW + ow) * d.patch();
        const int h0 = oh * d.stride, w0 = ow * d.stride;
        for (int kh = 0; kh < d.KH; ++kh) {
          const double* src = x + ((static_cast<size_t>(b) * d.H + h0 + kh) * d.W + w0) * d.Cin;
          std::memcpy(prow + static_cast<size_t>(kh) * chunk, src, sizeof(double) * chunk);
        }
      }
    }
  }
}

// Scatter-add patch-row gradients back onto the input layout (reverse of im2col).
void col2im_add(const MatRM& dP, const ConvDims& d, double* dx) {
  const int chunk = d.KW * d.Cin;
  for (int b = 0; b < d.B; ++b) {
    for (int oh = 0; oh < d.OH; ++oh) {
      for (int ow = 0; ow < d.OW; ++ow) {
        const double* prow =
            dP.data() + ((static_cast<size_t>(b) * d.OH + oh) * d.OW + ow) * d.patch();
        const int h0 = oh * d.stride, w0 = ow * d.stride;
        for (int kh = 0; kh < d.KH; ++kh) {
          double* dst = dx + ((static_cast<size_t>(b) * d.H + h0 + kh) * d.W + w0) * d.Cin;
          const double* src = prow + static_cast<size_t>(kh) * chunk;
          for (int j = 0; j < chunk; ++j) dst[j] += src[j];
        }
      }
    }
  }
}

}  // namespace

Var conv2d(Var x, Var w, Var b, int stride) {
  Graph& g = *x.g;
  const Tensor &xv = x.value(), &wv = w.value(), &bv = b.value();
  const ConvDims d = conv_dims(xv, wv, bv, stride);

  MatRM P(d.out_rows(), d.patch());
  im2col(xv.data(), d, P);
  CMapM W2(wv.data(), d.patch(), d.Cout);

  Tensor out({d.B, d.OH, d.OW, d.Cout});
  MapM O(out.data(), static_cast<Eigen::Index>(d.out_rows()), d.Cout);
  O.noalias() = P * W2;
  O.rowwise() += CMapV(bv.data(), d.Cout);

  int xid = x.id, wid = w.id, bid = b.id;
  int id = g.add_node("conv2d", std::move(out), {xid, wid, bid}, [xid, wid, bid, d](Graph& g2,
                                                                                    int self) {
    const Eigen::Index rows = static_cast<Eigen::Index>(d.out_rows());
    CMapM dO(g2.grad_buf(self).data(), rows, d.Cout);

    Eigen::Map<Eigen::RowVectorXd> db(g2.grad_buf(bid).data(), d.Cout);
    db += dO.colwise().sum();

    // dW needs the input patches again; rebuilding them is cheaper than
    // keeping the (large) patch matrix alive across the forward pass.
    MatRM P(rows, d.patch());
    im2col(g2.val(xid).data(), d, P);
    MapM dW(g2.grad_buf(wid).data(), d.patch(), d.Cout);
    dW.noalias() += P.transpose() * dO;

    if (g2.node(xid).requires_grad) {
      CMapM W2(g2.val(wid).data(), d.patch(), d.Cout);
      MatRM dP(rows, d.patch());
      dP.noalias() = dO * W2.transpose();
      col2im_add(dP, d, g2.grad_buf(xid).data());
    }
  });
  return Var{&g, id};
}

Var dense(Var x, Var w, Var b) {
  Graph& g = *x.g;
  const Tensor &xv = x.value(), &wv = w.value(), &bv = b.value();
  if (xv.rank() != 2 || wv.rank() != 2 || xv.dim(1) != wv.dim(0)) {
    throw std::invalid_argument("dense: shape mismatch " + xv.shape_str() + " vs " +
                                wv.shape_str());
  }
  const int B = xv.dim(0), In = xv.dim(1), Out = wv.dim(1);
  if (bv.rank() != 1 || bv.dim(0) != Out) {
    throw std::invalid_argument("dense: bias shape " + bv.shape_str() + " does not match weight " +
                                wv.shape_str());
  }

  Tensor out({B, Out});
  MapM O(out.data(), B, Out);
  O.noalias() = CMapM(xv.data(), B, In) * CMapM(wv.data(), In, Out);
  O.rowwise() += CMapV(bv.data(), Out);

  int xid = x.id, wid = w.id, bid = b.id;
  int id = g.add_node("dense", std::move(out), {xid, wid, bid},
                      [xid, wid, bid, B, In, Out](Graph& g2, int self) {
                        CMapM dO(g2.grad_buf(self).data(), B, Out);
                        Eigen::Map<Eigen::RowVectorXd> db(g2.grad_buf(bid).data(), Out);
                        db += dO.colwise().sum();
                        CMapM X(g2.val(xid).data(), B, In);
                        MapM dW(g2.grad_buf(wid).data(), In, Out);
                        dW.noalias() += X.transpose() * dO;
                        if (g2.node(xid).requires_grad) {
                          CMapM W(g2.val(wid).data(), In, Out);
                          MapM dX(g2.grad_buf(xid).data(), B, In);
                          dX.noalias() += dO * W.transpose();
                        }
                      });
  return Var{&g, id};
}

}  // namespace coex::nd
