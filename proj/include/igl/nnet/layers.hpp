// Dense building blocks of the grid labeler: flat parameter storage, layer
// normalization and a pre-norm transformer block, each with a hand-derived
// backward pass. Activations are row-major (one row per token).
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "igl/core.hpp"

namespace igl::nnet {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Col = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using MapMat = Eigen::Map<Mat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const Mat<T>>;

/// One named tensor inside the flat parameter vector.
struct TensorSlot {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return rows * cols; }
};

class ParameterLayout {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols) {
    slots_.push_back({std::move(name), rows, cols, total_});
    total_ += rows * cols;
    return slots_.size() - 1;
  }
  const TensorSlot& operator[](std::size_t i) const { return slots_[i]; }
  const std::vector<TensorSlot>& slots() const { return slots_; }
  std::size_t total() const { return total_; }

  template <typename T>
  ConstMapMat<T> view(std::span<const T> data, std::size_t i) const {
    const auto& s = slots_[i];
    return ConstMapMat<T>(data.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                          static_cast<Eigen::Index>(s.cols));
  }
  template <typename T>
  MapMat<T> view(std::span<T> data, std::size_t i) const {
    const auto& s = slots_[i];
    return MapMat<T>(data.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                     static_cast<Eigen::Index>(s.cols));
  }

 private:
  std::vector<TensorSlot> slots_;
  std::size_t total_ = 0;
};

// ---------------------------------------------------------------------------
// Layer normalization

struct NormSlots {
  std::size_t gain = 0;
  std::size_t bias = 0;
};

template <typename T>
struct NormCache {
  Mat<T> xhat;
  Col<T> rstd;
};

inline constexpr double kNormEps = 1e-5;

template <typename T>
Mat<T> layer_norm(const Mat<T>& x, const ConstMapMat<T>& gain, const ConstMapMat<T>& bias,
                  NormCache<T>& cache) {
  Col<T> mean = x.rowwise().mean();
  Mat<T> xc = x.colwise() - mean;
  Col<T> var = xc.array().square().rowwise().mean();
  cache.rstd = (var.array() + T(kNormEps)).rsqrt();
  cache.xhat = xc.array().colwise() * cache.rstd.array();
  Mat<T> y = cache.xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
  return y;
}

template <typename T>
Mat<T> layer_norm_backward(const Mat<T>& dy, const ConstMapMat<T>& gain, const NormCache<T>& c,
                           MapMat<T> dgain, MapMat<T> dbias) {
  dgain.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dy.colwise().sum();
  Mat<T> dxhat = dy.array().rowwise() * gain.row(0).array();
  Col<T> mean_d = dxhat.rowwise().mean();
  Col<T> mean_dx = (dxhat.array() * c.xhat.array()).rowwise().mean();
  Mat<T> dx = dxhat.colwise() - mean_d;
  dx.array() -= c.xhat.array().colwise() * mean_dx.array();
  dx.array().colwise() *= c.rstd.array();
  return dx;
}

// ---------------------------------------------------------------------------
// GELU (tanh approximation), smooth everywhere so finite differences behave.

template <typename T>
struct Gelu {
  static constexpr T kC = T(0.7978845608028654);  // sqrt(2/pi)
  static constexpr T kA = T(0.044715);

  static Mat<T> forward(const Mat<T>& u) {
    auto a = u.array();
    return (T(0.5) * a * (T(1) + (kC * (a + kA * a.cube())).tanh())).matrix();
  }
  static Mat<T> derivative(const Mat<T>& u) {
    auto a = u.array();
    auto t = (kC * (a + kA * a.cube())).tanh();
    return (T(0.5) * (T(1) + t) +
            T(0.5) * a * (T(1) - t.square()) * kC * (T(1) + T(3) * kA * a.square()))
        .matrix();
  }
};

// ---------------------------------------------------------------------------
// Row-wise softmax

template <typename T>
Mat<T> softmax_rows(const Mat<T>& s) {
  Col<T> mx = s.rowwise().maxCoeff();
  Mat<T> e = (s.colwise() - mx).array().exp();
  Col<T> z = e.rowwise().sum();
  e.array().colwise() /= z.array();
  return e;
}

/// d(loss)/d(logits) given d(loss)/d(probs) for row-wise softmax outputs.
template <typename T>
Mat<T> softmax_rows_backward(const Mat<T>& p, const Mat<T>& dp) {
  Col<T> dot = (p.array() * dp.array()).rowwise().sum();
  return (p.array() * (dp.colwise() - dot).array()).matrix();
}

// ---------------------------------------------------------------------------
// Transformer block:  h = x + Attn(LN1(x));  y = h + W2 gelu(W1 LN2(h))

struct BlockSlots {
  NormSlots norm1, norm2;
  std::size_t wq = 0, bq = 0, wk = 0, bk = 0, wv = 0, bv = 0, wo = 0, bo = 0;
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;

  static BlockSlots add(ParameterLayout& layout, const std::string& prefix, std::size_t d,
                        std::size_t ffn) {
    BlockSlots b;
    b.norm1 = {layout.add(prefix + ".ln1.gain", 1, d), layout.add(prefix + ".ln1.bias", 1, d)};
    b.wq = layout.add(prefix + ".attn.wq", d, d);
    b.bq = layout.add(prefix + ".attn.bq", 1, d);
    b.wk = layout.add(prefix + ".attn.wk", d, d);
    b.bk = layout.add(prefix + ".attn.bk", 1, d);
    b.wv = layout.add(prefix + ".attn.wv", d, d);
    b.bv = layout.add(prefix + ".attn.bv", 1, d);
    b.wo = layout.add(prefix + ".attn.wo", d, d);
    b.bo = layout.add(prefix + ".attn.bo", 1, d);
    b.norm2 = {layout.add(prefix + ".ln2.gain", 1, d), layout.add(prefix + ".ln2.bias", 1, d)};
    b.w1 = layout.add(prefix + ".ffn.w1", d, ffn);
    b.b1 = layout.add(prefix + ".ffn.b1", 1, ffn);
    b.w2 = layout.add(prefix + ".ffn.w2", ffn, d);
    b.b2 = layout.add(prefix + ".ffn.b2", 1, d);
    return b;
  }
};

template <typename T>
struct BlockCache {
  NormCache<T> norm1, norm2;
  Mat<T> a, q, k, v, c, b, u, g;
  std::vector<Mat<T>> attn;  // per head, N x N
};

template <typename T>
class TransformerBlock {
 public:
  TransformerBlock(const ParameterLayout& layout, const BlockSlots& slots, std::size_t heads)
      : layout_(&layout), s_(slots), heads_(heads) {}

  Mat<T> forward(std::span<const T> p, const Mat<T>& x, BlockCache<T>* cache) const {
    BlockCache<T> local;
    BlockCache<T>& c = cache ? *cache : local;
    const auto& L = *layout_;
    const Eigen::Index d = x.cols();
    const Eigen::Index dh = d / static_cast<Eigen::Index>(heads_);
    const T scale = T(1) / std::sqrt(T(dh));

    c.a = layer_norm<T>(x, L.view(p, s_.norm1.gain), L.view(p, s_.norm1.bias), c.norm1);
    c.q = c.a * L.view(p, s_.wq);
    c.q.rowwise() += L.view(p, s_.bq).row(0);
    c.k = c.a * L.view(p, s_.wk);
    c.k.rowwise() += L.view(p, s_.bk).row(0);
    c.v = c.a * L.view(p, s_.wv);
    c.v.rowwise() += L.view(p, s_.bv).row(0);

    c.c.resize(x.rows(), d);
    c.attn.resize(heads_);
    for (std::size_t h = 0; h < heads_; ++h) {
      const Eigen::Index off = static_cast<Eigen::Index>(h) * dh;
      Mat<T> scores = (c.q.middleCols(off, dh) * c.k.middleCols(off, dh).transpose()) * scale;
      c.attn[h] = softmax_rows<T>(scores);
      c.c.middleCols(off, dh) = c.attn[h] * c.v.middleCols(off, dh);
    }
    Mat<T> h = c.c * L.view(p, s_.wo);
    h.rowwise() += L.view(p, s_.bo).row(0);
    h += x;

    c.b = layer_norm<T>(h, L.view(p, s_.norm2.gain), L.view(p, s_.norm2.bias), c.norm2);
    c.u = c.b * L.view(p, s_.w1);
    c.u.rowwise() += L.view(p, s_.b1).row(0);
    c.g = Gelu<T>::forward(c.u);
    Mat<T> y = c.g * L.view(p, s_.w2);
    y.rowwise() += L.view(p, s_.b2).row(0);
    y += h;
    return y;
  }

  /// Accumulates parameter gradients into `grad`; returns d(loss)/dx.
  Mat<T> backward(std::span<const T> p, const BlockCache<T>& c, const Mat<T>& dy,
                  std::span<T> grad) const {
    const auto& L = *layout_;
    const Eigen::Index d = dy.cols();
    const Eigen::Index dh = d / static_cast<Eigen::Index>(heads_);
    const T scale = T(1) / std::sqrt(T(dh));

    // Feed-forward branch.
    L.view(grad, s_.w2).noalias() += c.g.transpose() * dy;
    L.view(grad, s_.b2).row(0) += dy.colwise().sum();
    Mat<T> du = (dy * L.view(p, s_.w2).transpose()).array() * Gelu<T>::derivative(c.u).array();
    L.view(grad, s_.w1).noalias() += c.b.transpose() * du;
    L.view(grad, s_.b1).row(0) += du.colwise().sum();
    Mat<T> db = du * L.view(p, s_.w1).transpose();
    Mat<T> dh_res = dy + layer_norm_backward<T>(db, L.view(p, s_.norm2.gain), c.norm2,
                                                L.view(grad, s_.norm2.gain),
                                                L.view(grad, s_.norm2.bias));

    // Attention branch.
    L.view(grad, s_.wo).noalias() += c.c.transpose() * dh_res;
    L.view(grad, s_.bo).row(0) += dh_res.colwise().sum();
    Mat<T> dc = dh_res * L.view(p, s_.wo).transpose();
    Mat<T> dq(dy.rows(), d), dk(dy.rows(), d), dv(dy.rows(), d);
    for (std::size_t h = 0; h < heads_; ++h) {
      const Eigen::Index off = static_cast<Eigen::Index>(h) * dh;
      Mat<T> dch = dc.middleCols(off, dh);
      Mat<T> dp = dch * c.v.middleCols(off, dh).transpose();
      dv.middleCols(off, dh) = c.attn[h].transpose() * dch;
      Mat<T> ds = softmax_rows_backward<T>(c.attn[h], dp) * scale;
      dq.middleCols(off, dh) = ds * c.k.middleCols(off, dh);
      dk.middleCols(off, dh) = ds.transpose() * c.q.middleCols(off, dh);
    }
    L.view(grad, s_.wq).noalias() += c.a.transpose() * dq;
    L.view(grad, s_.bq).row(0) += dq.colwise().sum();
    L.view(grad, s_.wk).noalias() += c.a.transpose() * dk;
    L.view(grad, s_.bk).row(0) += dk.colwise().sum();
    L.view(grad, s_.wv).noalias() += c.a.transpose() * dv;
    L.view(grad, s_.bv).row(0) += dv.colwise().sum();
    Mat<T> da = dq * L.view(p, s_.wq).transpose() + dk * L.view(p, s_.wk).transpose() +
                dv * L.view(p, s_.wv).transpose();
    return dh_res + layer_norm_backward<T>(da, L.view(p, s_.norm1.gain), c.norm1,
                                           L.view(grad, s_.norm1.gain),
                                           L.view(grad, s_.norm1.bias));
  }

 private:
  const ParameterLayout* layout_;
  BlockSlots s_;
  std::size_t heads_;
};

}  // namespace igl::nnet
