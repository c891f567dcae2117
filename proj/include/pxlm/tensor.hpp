#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pxlm/common.hpp"

namespace pxlm {

// ---------------------------------------------------------------------------
// Reverse-mode automatic differentiation on a flat tape of matrix nodes.
//
// Templated on the scalar type: float for training speed, double for the
// finite-difference gradient checks. Values are computed eagerly when a node
// is built; backward() sweeps the tape in reverse, accumulating gradients
// into per-node scratch buffers and finally into the external sink arrays of
// parameter leaves. Leaves without a sink (inputs, frozen weights) terminate
// propagation, which is how the adversarial phase flows gradients through a
// frozen scoring network into generated pixels without touching its weights.
//
// Everything is single-threaded with a fixed reduction order, so a given
// seed reproduces runs bit-for-bit.
// ---------------------------------------------------------------------------

enum class Op : uint8_t {
    kLeaf,         // external data; grad sink optional
    kConst,        // tape-owned data; never differentiated
    kAdd,          // a + b, same shape
    kScale,        // a * f0
    kMul,          // a ∘ b, same shape
    kAddRow,       // matrix a [R,C] + row b [1,C] broadcast over rows
    kMatmul,       // op(a) · op(b); i0/i1 are transpose flags
    kSigmoid,      // elementwise logistic
    kLog,          // elementwise natural log
    kClamp,        // clamp to [f0, f1]; zero grad outside the open interval
    kRmsnormRows,  // per-row x * gain / sqrt(mean(x^2) + eps); b = gain row
    kSoftmaxRows,  // per-row softmax over cols j <= i + i0; others output 0
    kRope,         // rotary position encoding; i0=head_dim, i1=pos offset, f0=base
    kBlock,        // submatrix copy from a at (i0,i1), shape [rows,cols]
    kConcatRows,   // rows of a stacked above rows of b
    kMeanAll,      // scalar mean of all entries
    kBceMasked,    // scalar: masked mean of BCE-with-logits vs aux targets
    kMseClipped,   // scalar: masked mean of (clip01(a) - target)^2
};

template <class S>
struct TapeNode {
    Op op;
    int a = -1, b = -1;     // parent node ids
    int rows = 0, cols = 0;
    int i0 = 0, i1 = 0;     // op-specific integer params
    S f0 = S(0), f1 = S(0); // op-specific scalar params
    bool needs_grad = false;
    const S* src = nullptr; // kLeaf: external value storage
    S* gsink = nullptr;     // kLeaf: external gradient accumulator (optional)
    std::vector<S> val;     // materialized values (empty for kLeaf; see data())
    std::vector<S> aux;     // fused-loss targets
    std::vector<uint8_t> auxm; // fused-loss mask (1 = position counts)

    const S* data() const { return op == Op::kLeaf ? src : val.data(); }
    size_t size() const { return static_cast<size_t>(rows) * cols; }
};

template <class S>
class Tape {
  public:
    int leaf(const S* src, int rows, int cols, S* gsink) {
        TapeNode<S> n;
        n.op = Op::kLeaf;
        n.rows = rows;
        n.cols = cols;
        n.src = src;
        n.gsink = gsink;
        n.needs_grad = gsink != nullptr;
        return push(std::move(n));
    }

    int constant(std::vector<S> v, int rows, int cols) {
        TapeNode<S> n;
        n.op = Op::kConst;
        n.rows = rows;
        n.cols = cols;
        n.val = std::move(v);
        check_shape(n);
        return push(std::move(n));
    }

    int add(int a, int b) {
        const auto& na = node(a);
        const auto& nb = node(b);
        require(na.rows == nb.rows && na.cols == nb.cols, "add: shape mismatch");
        TapeNode<S> n = derive(Op::kAdd, a, b, na.rows, na.cols);
        n.val.resize(n.size());
        const S* pa = na.data();
        const S* pb = nb.data();
        for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = pa[i] + pb[i];
        return push(std::move(n));
    }

    int scale(int a, S f) {
        const auto& na = node(a);
        TapeNode<S> n = derive(Op::kScale, a, -1, na.rows, na.cols);
        n.f0 = f;
        n.val.resize(n.size());
        const S* pa = na.data();
        for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = pa[i] * f;
        return push(std::move(n));
    }

    int mul(int a, int b) {
        const auto& na = node(a);
        const auto& nb = node(b);
        require(na.rows == nb.rows && na.cols == nb.cols, "mul: shape mismatch");
        TapeNode<S> n = derive(Op::kMul, a, b, na.rows, na.cols);
        n.val.resize(n.size());
        const S* pa = na.data();
        const S* pb = nb.data();
        for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = pa[i] * pb[i];
        return push(std::move(n));
    }

    int add_row(int a, int b) {
        const auto& na = node(a);
        const auto& nb = node(b);
        require(nb.rows == 1 && nb.cols == na.cols, "add_row: bias must be [1, cols]");
        TapeNode<S> n = derive(Op::kAddRow, a, b, na.rows, na.cols);
        n.val.resize(n.size());
        const S* pa = na.data();
        const S* pb = nb.data();
        for (int r = 0; r < n.rows; ++r)
            for (int c = 0; c < n.cols; ++c) n.val[size_t(r) * n.cols + c] = pa[size_t(r) * n.cols + c] + pb[c];
        return push(std::move(n));
    }

    int matmul(int a, int b, bool ta = false, bool tb = false) {
        const auto& na = node(a);
        const auto& nb = node(b);
        const int m = ta ? na.cols : na.rows;
        const int k = ta ? na.rows : na.cols;
        const int kb = tb ? nb.cols : nb.rows;
        const int nn = tb ? nb.rows : nb.cols;
        require(k == kb, "matmul: inner dimension mismatch");
        TapeNode<S> n = derive(Op::kMatmul, a, b, m, nn);
        n.i0 = ta;
        n.i1 = tb;
        n.val.assign(n.size(), S(0));
        gemm(na.data(), na.rows, na.cols, ta, nb.data(), nb.rows, nb.cols, tb, n.val.data());
        return push(std::move(n));
    }

    int sigmoid(int a) {
        const auto& na = node(a);
        TapeNode<S> n = derive(Op::kSigmoid, a, -1, na.rows, na.cols);
        n.val.resize(n.size());
        const S* pa = na.data();
        for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = stable_sigmoid(pa[i]);
        return push(std::move(n));
    }

    int log(int a) {
        const auto& na = node(a);
        TapeNode<S> n = derive(Op::kLog, a, -1, na.rows, na.cols);
        n.val.resize(n.size());
        const S* pa = na.data();
        for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::log(pa[i]);
        return push(std::move(n));
    }

    int clamp(int a, S lo, S hi) {
        const auto& na = node(a);
        TapeNode<S> n = derive(Op::kClamp, a, -1, na.rows, na.cols);
        n.f0 = lo;
        n.f1 = hi;
        n.val.resize(n.size());
        const S* pa = na.data();
        for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::min(hi, std::max(lo, pa[i]));
        return push(std::move(n));
    }

    // y_r = x_r * gain / sqrt(mean(x_r^2) + eps), per row r
    int rmsnorm_rows(int a, int gain, S eps) {
        const auto& na = node(a);
        const auto& ng = node(gain);
        require(ng.rows == 1 && ng.cols == na.cols, "rmsnorm: gain must be [1, cols]");
        TapeNode<S> n = derive(Op::kRmsnormRows, a, gain, na.rows, na.cols);
        n.f0 = eps;
        n.val.resize(n.size());
        const S* px = na.data();
        const S* pg = ng.data();
        for (int r = 0; r < n.rows; ++r) {
            const S* x = px + size_t(r) * n.cols;
            S ss = 0;
            for (int c = 0; c < n.cols; ++c) ss += x[c] * x[c];
            const S inv = S(1) / std::sqrt(ss / S(n.cols) + eps);
            for (int c = 0; c < n.cols; ++c) n.val[size_t(r) * n.cols + c] = x[c] * pg[c] * inv;
        }
        return push(std::move(n));
    }

    // Per-row softmax over the prefix j <= r + off; columns beyond output 0.
    // off = 0 gives the square causal mask; off = cols-1 disables masking.
    int softmax_rows(int a, int off) {
        const auto& na = node(a);
        TapeNode<S> n = derive(Op::kSoftmaxRows, a, -1, na.rows, na.cols);
        n.i0 = off;
        n.val.assign(n.size(), S(0));
        const S* px = na.data();
        for (int r = 0; r < n.rows; ++r) {
            const int hi = std::min(n.cols - 1, r + off);
            require(hi >= 0, "softmax: row with no allowed columns");
            const S* x = px + size_t(r) * n.cols;
            S mx = x[0];
            for (int c = 1; c <= hi; ++c) mx = std::max(mx, x[c]);
            S den = 0;
            for (int c = 0; c <= hi; ++c) den += std::exp(x[c] - mx);
            for (int c = 0; c <= hi; ++c) n.val[size_t(r) * n.cols + c] = std::exp(x[c] - mx) / den;
        }
        return push(std::move(n));
    }

    // Rotary position encoding applied per head: row t is position t + pos0,
    // consecutive value pairs (2i, 2i+1) within each head_dim-wide head are
    // rotated by angle (t + pos0) * base^(-2i/head_dim).
    int rope(int a, int head_dim, S base, int pos0) {
        const auto& na = node(a);
        require(head_dim > 0 && head_dim % 2 == 0 && na.cols % head_dim == 0,
                "rope: cols must be a multiple of an even head_dim");
        TapeNode<S> n = derive(Op::kRope, a, -1, na.rows, na.cols);
        n.i0 = head_dim;
        n.i1 = pos0;
        n.f0 = base;
        n.val.resize(n.size());
        rope_apply(na.data(), n.val.data(), n.rows, n.cols, head_dim, base, pos0, /*inverse=*/false);
        return push(std::move(n));
    }

    int block(int a, int r0, int c0, int rows, int cols) {
        const auto& na = node(a);
        require(r0 >= 0 && c0 >= 0 && r0 + rows <= na.rows && c0 + cols <= na.cols,
                "block: out of range");
        TapeNode<S> n = derive(Op::kBlock, a, -1, rows, cols);
        n.i0 = r0;
        n.i1 = c0;
        n.val.resize(n.size());
        const S* pa = na.data();
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                n.val[size_t(r) * cols + c] = pa[size_t(r0 + r) * na.cols + (c0 + c)];
        return push(std::move(n));
    }

    int concat_rows(int a, int b) {
        const auto& na = node(a);
        const auto& nb = node(b);
        require(na.cols == nb.cols, "concat_rows: column mismatch");
        TapeNode<S> n = derive(Op::kConcatRows, a, b, na.rows + nb.rows, na.cols);
        n.val.resize(n.size());
        const S* pa = na.data();
        const S* pb = nb.data();
        std::copy(pa, pa + na.size(), n.val.begin());
        std::copy(pb, pb + nb.size(), n.val.begin() + na.size());
        return push(std::move(n));
    }

    int mean_all(int a) {
        const auto& na = node(a);
        TapeNode<S> n = derive(Op::kMeanAll, a, -1, 1, 1);
        const S* pa = na.data();
        S s = 0;
        for (size_t i = 0; i < na.size(); ++i) s += pa[i];
        n.val = {s / S(na.size())};
        return push(std::move(n));
    }

    // Numerically stable binary cross entropy with logits, averaged over the
    // masked-in entries: mean over {i : mask[i]} of
    //   max(z,0) - z*t + log(1 + exp(-|z|)).
    // An all-masked-out call is defined as loss 0 with zero gradient.
    int bce_masked(int a, std::vector<S> targets, std::vector<uint8_t> mask) {
        const auto& na = node(a);
        require(targets.size() == na.size() && mask.size() == na.size(),
                "bce_masked: target/mask size mismatch");
        TapeNode<S> n = derive(Op::kBceMasked, a, -1, 1, 1);
        n.aux = std::move(targets);
        n.auxm = std::move(mask);
        const S* z = na.data();
        S sum = 0;
        size_t cnt = 0;
        for (size_t i = 0; i < na.size(); ++i) {
            if (!n.auxm[i]) continue;
            const S zi = z[i];
            sum += std::max(zi, S(0)) - zi * n.aux[i] + std::log1p(std::exp(-std::fabs(zi)));
            ++cnt;
        }
        n.i0 = static_cast<int>(cnt);
        n.val = {cnt ? sum / S(cnt) : S(0)};
        return push(std::move(n));
    }

    // Masked mean of (clip01(z) - t)^2; gradient is zero where the clip
    // saturates. Used for the multi-channel regression decode path.
    int mse_clipped_masked(int a, std::vector<S> targets, std::vector<uint8_t> mask) {
        const auto& na = node(a);
        require(targets.size() == na.size() && mask.size() == na.size(),
                "mse_clipped: target/mask size mismatch");
        TapeNode<S> n = derive(Op::kMseClipped, a, -1, 1, 1);
        n.aux = std::move(targets);
        n.auxm = std::move(mask);
        const S* z = na.data();
        S sum = 0;
        size_t cnt = 0;
        for (size_t i = 0; i < na.size(); ++i) {
            if (!n.auxm[i]) continue;
            const S p = std::min(S(1), std::max(S(0), z[i]));
            sum += (p - n.aux[i]) * (p - n.aux[i]);
            ++cnt;
        }
        n.i0 = static_cast<int>(cnt);
        n.val = {cnt ? sum / S(cnt) : S(0)};
        return push(std::move(n));
    }

    const TapeNode<S>& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
    const S* values(int id) const { return node(id).data(); }
    S scalar(int id) const {
        require(node(id).size() == 1, "scalar: node is not 1x1");
        return node(id).data()[0];
    }
    size_t size() const { return nodes_.size(); }

    // Reverse sweep from a scalar root. Gradients ACCUMULATE into leaf sinks;
    // callers zero their parameter gradients when they want a fresh pass.
    void backward(int root) {
        require(node(root).size() == 1, "backward: root must be scalar");
        if (!node(root).needs_grad) return;  // nothing differentiable below
        grads_.assign(nodes_.size(), {});
        grads_[static_cast<size_t>(root)] = {S(1)};
        for (int id = root; id >= 0; --id) {
            auto& g = grads_[static_cast<size_t>(id)];
            if (g.empty()) continue;
            step_backward(id, g.data());
            if (nodes_[static_cast<size_t>(id)].op != Op::kLeaf) g = {};  // release scratch early
        }
        grads_.clear();
    }

  private:
    std::vector<TapeNode<S>> nodes_;
    std::vector<std::vector<S>> grads_;

    static void require(bool ok, const char* msg) {
        if (!ok) throw NumericError(msg);
    }

    void check_shape(const TapeNode<S>& n) const {
        require(n.val.size() == n.size(), "node value size does not match shape");
    }

    TapeNode<S> derive(Op op, int a, int b, int rows, int cols) {
        TapeNode<S> n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.rows = rows;
        n.cols = cols;
        n.needs_grad = (a >= 0 && node(a).needs_grad) || (b >= 0 && node(b).needs_grad);
        return n;
    }

    int push(TapeNode<S> n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    static S stable_sigmoid(S x) {
        if (x >= 0) return S(1) / (S(1) + std::exp(-x));
        const S e = std::exp(x);
        return e / (S(1) + e);
    }

    // out += op(A) · op(B) with raw row-major inputs
    static void gemm(const S* A, int ar, int ac, bool ta, const S* B, int br, int bc, bool tb, S* out) {
        const int m = ta ? ac : ar;
        const int k = ta ? ar : ac;
        const int n = tb ? br : bc;
        auto ai = [&](int i, int kk) { return ta ? A[size_t(kk) * ac + i] : A[size_t(i) * ac + kk]; };
        auto bi = [&](int kk, int j) { return tb ? B[size_t(j) * bc + kk] : B[size_t(kk) * bc + j]; };
        if (!ta && !tb) {
            // hot path in the forward pass: i-k-j order streams both operands
            for (int i = 0; i < m; ++i) {
                S* orow = out + size_t(i) * n;
                const S* arow = A + size_t(i) * ac;
                for (int kk = 0; kk < k; ++kk) {
                    const S av = arow[kk];
                    if (av == S(0)) continue;
                    const S* brow = B + size_t(kk) * bc;
                    for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
                }
            }
            return;
        }
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                S s = 0;
                for (int kk = 0; kk < k; ++kk) s += ai(i, kk) * bi(kk, j);
                out[size_t(i) * n + j] += s;
            }
    }

    static void rope_apply(const S* in, S* out, int rows, int cols, int hd, S base, int pos0, bool inverse) {
        const int n_heads = cols / hd;
        for (int t = 0; t < rows; ++t) {
            const double m = static_cast<double>(t + pos0);
            for (int h = 0; h < n_heads; ++h) {
                const size_t off = size_t(t) * cols + size_t(h) * hd;
                for (int i = 0; i < hd / 2; ++i) {
                    const double theta =
                        m * std::pow(static_cast<double>(base), -2.0 * i / static_cast<double>(hd));
                    const S c = static_cast<S>(std::cos(theta));
                    const S s = static_cast<S>(inverse ? -std::sin(theta) : std::sin(theta));
                    const S u = in[off + 2 * i], v = in[off + 2 * i + 1];
                    out[off + 2 * i] = u * c - v * s;
                    out[off + 2 * i + 1] = u * s + v * c;
                }
            }
        }
    }

    std::vector<S>& grad_buf(int id) {
        auto& g = grads_[static_cast<size_t>(id)];
        if (g.empty()) g.assign(node(id).size(), S(0));
        return g;
    }

    void step_backward(int id, const S* gy) {
        const TapeNode<S>& n = nodes_[static_cast<size_t>(id)];
        switch (n.op) {
            case Op::kLeaf:
                if (n.gsink)
                    for (size_t i = 0; i < n.size(); ++i) n.gsink[i] += gy[i];
                return;
            case Op::kConst:
                return;
            case Op::kAdd: {
                accum_if(n.a, gy, n.size());
                accum_if(n.b, gy, n.size());
                return;
            }
            case Op::kScale: {
                if (!wants(n.a)) return;
                auto& ga = grad_buf(n.a);
                for (size_t i = 0; i < n.size(); ++i) ga[i] += gy[i] * n.f0;
                return;
            }
            case Op::kMul: {
                const S* pa = node(n.a).data();
                const S* pb = node(n.b).data();
                if (wants(n.a)) {
                    auto& ga = grad_buf(n.a);
                    for (size_t i = 0; i < n.size(); ++i) ga[i] += gy[i] * pb[i];
                }
                if (wants(n.b)) {
                    auto& gb = grad_buf(n.b);
                    for (size_t i = 0; i < n.size(); ++i) gb[i] += gy[i] * pa[i];
                }
                return;
            }
            case Op::kAddRow: {
                accum_if(n.a, gy, n.size());
                if (wants(n.b)) {
                    auto& gb = grad_buf(n.b);
                    for (int r = 0; r < n.rows; ++r)
                        for (int c = 0; c < n.cols; ++c) gb[c] += gy[size_t(r) * n.cols + c];
                }
                return;
            }
            case Op::kMatmul: {
                const auto& na = node(n.a);
                const auto& nb = node(n.b);
                const bool ta = n.i0, tb = n.i1;
                // dA and dB derived case by case from C = op(A)·op(B)
                if (wants(n.a)) {
                    auto& ga = grad_buf(n.a);
                    if (!ta && !tb) gemm(gy, n.rows, n.cols, false, nb.data(), nb.rows, nb.cols, !tb, ga.data());
                    else if (!ta && tb) gemm(gy, n.rows, n.cols, false, nb.data(), nb.rows, nb.cols, false, ga.data());
                    else if (ta && !tb) gemm(nb.data(), nb.rows, nb.cols, false, gy, n.rows, n.cols, true, ga.data());
                    else gemm(nb.data(), nb.rows, nb.cols, true, gy, n.rows, n.cols, true, ga.data());
                }
                if (wants(n.b)) {
                    auto& gb = grad_buf(n.b);
                    if (!ta && !tb) gemm(na.data(), na.rows, na.cols, true, gy, n.rows, n.cols, false, gb.data());
                    else if (!ta && tb) gemm(gy, n.rows, n.cols, true, na.data(), na.rows, na.cols, false, gb.data());
                    else if (ta && !tb) gemm(na.data(), na.rows, na.cols, false, gy, n.rows, n.cols, false, gb.data());
                    else gemm(gy, n.rows, n.cols, true, na.data(), na.rows, na.cols, true, gb.data());
                }
                return;
            }
            case Op::kSigmoid: {
                if (!wants(n.a)) return;
                auto& ga = grad_buf(n.a);
                for (size_t i = 0; i < n.size(); ++i) ga[i] += gy[i] * n.val[i] * (S(1) - n.val[i]);
                return;
            }
            case Op::kLog: {
                if (!wants(n.a)) return;
                const S* pa = node(n.a).data();
                auto& ga = grad_buf(n.a);
                for (size_t i = 0; i < n.size(); ++i) ga[i] += gy[i] / pa[i];
                return;
            }
            case Op::kClamp: {
                if (!wants(n.a)) return;
                const S* pa = node(n.a).data();
                auto& ga = grad_buf(n.a);
                for (size_t i = 0; i < n.size(); ++i)
                    if (pa[i] > n.f0 && pa[i] < n.f1) ga[i] += gy[i];
                return;
            }
            case Op::kRmsnormRows: {
                const auto& nx = node(n.a);
                const S* px = nx.data();
                const S* pg = node(n.b).data();
                const int C = n.cols;
                for (int r = 0; r < n.rows; ++r) {
                    const S* x = px + size_t(r) * C;
                    const S* dy = gy + size_t(r) * C;
                    S ss = 0;
                    for (int c = 0; c < C; ++c) ss += x[c] * x[c];
                    const S ms = ss / S(C) + n.f0;
                    const S inv = S(1) / std::sqrt(ms);
                    if (wants(n.b)) {
                        auto& gg = grad_buf(n.b);
                        for (int c = 0; c < C; ++c) gg[c] += dy[c] * x[c] * inv;
                    }
                    if (wants(n.a)) {
                        S dot = 0;  // sum_j dy_j g_j x_j
                        for (int c = 0; c < C; ++c) dot += dy[c] * pg[c] * x[c];
                        auto& gx = grad_buf(n.a);
                        S* gxr = gx.data() + size_t(r) * C;
                        const S k = dot * inv * inv * inv / S(C);
                        for (int c = 0; c < C; ++c) gxr[c] += dy[c] * pg[c] * inv - x[c] * k;
                    }
                }
                return;
            }
            case Op::kSoftmaxRows: {
                if (!wants(n.a)) return;
                auto& ga = grad_buf(n.a);
                for (int r = 0; r < n.rows; ++r) {
                    const int hi = std::min(n.cols - 1, r + n.i0);
                    const S* p = n.val.data() + size_t(r) * n.cols;
                    const S* dy = gy + size_t(r) * n.cols;
                    S dot = 0;
                    for (int c = 0; c <= hi; ++c) dot += dy[c] * p[c];
                    S* gr = ga.data() + size_t(r) * n.cols;
                    for (int c = 0; c <= hi; ++c) gr[c] += p[c] * (dy[c] - dot);
                }
                return;
            }
            case Op::kRope: {
                if (!wants(n.a)) return;
                auto& ga = grad_buf(n.a);
                // the rotation is orthogonal, so the adjoint is rotation by -theta
                std::vector<S> tmp(n.size());
                rope_apply(gy, tmp.data(), n.rows, n.cols, n.i0, n.f0, n.i1, /*inverse=*/true);
                for (size_t i = 0; i < n.size(); ++i) ga[i] += tmp[i];
                return;
            }
            case Op::kBlock: {
                if (!wants(n.a)) return;
                auto& ga = grad_buf(n.a);
                const int pc = node(n.a).cols;
                for (int r = 0; r < n.rows; ++r)
                    for (int c = 0; c < n.cols; ++c)
                        ga[size_t(n.i0 + r) * pc + (n.i1 + c)] += gy[size_t(r) * n.cols + c];
                return;
            }
            case Op::kConcatRows: {
                const size_t asz = node(n.a).size();
                accum_if(n.a, gy, asz);
                if (wants(n.b)) {
                    auto& gb = grad_buf(n.b);
                    for (size_t i = 0; i < node(n.b).size(); ++i) gb[i] += gy[asz + i];
                }
                return;
            }
            case Op::kMeanAll: {
                if (!wants(n.a)) return;
                auto& ga = grad_buf(n.a);
                const S k = gy[0] / S(node(n.a).size());
                for (size_t i = 0; i < ga.size(); ++i) ga[i] += k;
                return;
            }
            case Op::kBceMasked: {
                if (!wants(n.a) || n.i0 == 0) return;
                const S* z = node(n.a).data();
                auto& ga = grad_buf(n.a);
                const S k = gy[0] / S(n.i0);
                for (size_t i = 0; i < node(n.a).size(); ++i)
                    if (n.auxm[i]) ga[i] += k * (stable_sigmoid(z[i]) - n.aux[i]);
                return;
            }
            case Op::kMseClipped: {
                if (!wants(n.a) || n.i0 == 0) return;
                const S* z = node(n.a).data();
                auto& ga = grad_buf(n.a);
                const S k = gy[0] * S(2) / S(n.i0);
                for (size_t i = 0; i < node(n.a).size(); ++i) {
                    if (!n.auxm[i]) continue;
                    if (z[i] > S(0) && z[i] < S(1)) ga[i] += k * (z[i] - n.aux[i]);
                }
                return;
            }
        }
    }

    bool wants(int id) const { return id >= 0 && node(id).needs_grad; }

    void accum_if(int id, const S* gy, size_t cnt) {
        if (!wants(id)) return;
        auto& g = grad_buf(id);
        for (size_t i = 0; i < cnt; ++i) g[i] += gy[i];
    }
};

}  // namespace pxlm
