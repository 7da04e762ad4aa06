#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "surmo/error.hpp"
#include "surmo/parallel.hpp"
#include "surmo/rng.hpp"

namespace surmo {

inline int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// Dense n-dimensional value with an optional same-shape gradient slot.
// Training uses float; gradient checks instantiate the same code with double.
template <class T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> v;
    std::vector<T> g;  // empty until ensure_grad()

    TensorT() = default;
    explicit TensorT(std::vector<int> s) : shape(std::move(s)), v(size_t(shape_numel(shape)), T(0)) {}
    TensorT(std::vector<int> s, std::vector<T> values) : shape(std::move(s)), v(std::move(values)) {
        if (int64_t(v.size()) != shape_numel(shape))
            throw InvalidArgument("tensor: value count does not match shape " + shape_str(shape));
    }

    int64_t numel() const { return int64_t(v.size()); }
    int dim(int i) const { return shape[size_t(i)]; }
    int rank() const { return int(shape.size()); }

    void ensure_grad() {
        if (g.size() != v.size()) g.assign(v.size(), T(0));
    }
    void zero_grad() {
        if (!g.empty()) std::fill(g.begin(), g.end(), T(0));
    }

    static TensorT zeros(std::vector<int> s) { return TensorT(std::move(s)); }
    static TensorT full(std::vector<int> s, T value) {
        TensorT t(std::move(s));
        std::fill(t.v.begin(), t.v.end(), value);
        return t;
    }
    static TensorT scalar(T value) { return TensorT({1}, {value}); }

    template <class U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.v.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = U(v[i]);
        return out;
    }
};

using Tensor = TensorT<float>;

// Reverse-mode tape over TensorT. Ops append nodes; backward() walks the
// tape in reverse, accumulating gradients into node buffers and, for
// parameter leaves, into the external tensor's grad slot. A tape is built
// fresh per training step and runs backward once.
template <class T>
class Tape {
public:
    struct Val {
        int32_t id = -1;
        bool valid() const { return id >= 0; }
    };

    // --- leaves ------------------------------------------------------------

    // Parameter leaf: forward reads the external tensor in place, backward
    // accumulates into its grad slot.
    Val param(TensorT<T>& p) {
        Node n;
        n.ext = &p;
        n.needs_grad = true;
        return push(std::move(n));
    }

    // Constant input: participates in forward only.
    Val constant(TensorT<T> value) {
        Node n;
        n.owned = std::move(value);
        n.needs_grad = false;
        return push(std::move(n));
    }

    // --- access ------------------------------------------------------------

    const TensorT<T>& value(Val v) const { return nodes_[size_t(v.id)].tensor(); }

    // Gradient of a node after backward(); zeros if it was not reached.
    const TensorT<T>& grad(Val v) {
        TensorT<T>& t = nodes_[size_t(v.id)].tensor();
        t.ensure_grad();
        return t;
    }

    // Raw pointer into a node's grad buffer, or nullptr when the node does
    // not require gradients (backward closures skip such inputs).
    T* grad_ptr(Val v) {
        Node& n = nodes_[size_t(v.id)];
        if (!n.needs_grad) return nullptr;
        n.tensor().ensure_grad();
        return n.tensor().g.data();
    }

    bool needs_grad(Val v) const { return nodes_[size_t(v.id)].needs_grad; }

    // --- generic custom op ---------------------------------------------------

    // backward(tape, self) runs with self's grad allocated; it reads
    // value(input)/grad_ptr(input) for the inputs it captured.
    Val custom(const std::vector<Val>& inputs, TensorT<T> out,
               std::function<void(Tape&, Val)> backward) {
        Node n;
        n.owned = std::move(out);
        for (Val in : inputs) n.needs_grad = n.needs_grad || needs_grad(in);
        if (n.needs_grad) n.back = std::move(backward);
        return push(std::move(n));
    }

    // --- elementwise ---------------------------------------------------------

    Val add(Val a, Val b) {
        check_same_shape("add", a, b);
        TensorT<T> out = clone_shape(a);
        const auto& av = value(a).v;
        const auto& bv = value(b).v;
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = av[i] + bv[i];
        return custom({a, b}, std::move(out), [a, b](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            int64_t n = tp.value(self).numel();
            if (T* ga = tp.grad_ptr(a))
                for (int64_t i = 0; i < n; ++i) ga[i] += go[i];
            if (T* gb = tp.grad_ptr(b))
                for (int64_t i = 0; i < n; ++i) gb[i] += go[i];
        });
    }

    Val sub(Val a, Val b) {
        check_same_shape("sub", a, b);
        TensorT<T> out = clone_shape(a);
        const auto& av = value(a).v;
        const auto& bv = value(b).v;
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = av[i] - bv[i];
        return custom({a, b}, std::move(out), [a, b](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            int64_t n = tp.value(self).numel();
            if (T* ga = tp.grad_ptr(a))
                for (int64_t i = 0; i < n; ++i) ga[i] += go[i];
            if (T* gb = tp.grad_ptr(b))
                for (int64_t i = 0; i < n; ++i) gb[i] -= go[i];
        });
    }

    Val mul(Val a, Val b) {
        check_same_shape("mul", a, b);
        TensorT<T> out = clone_shape(a);
        const auto& av = value(a).v;
        const auto& bv = value(b).v;
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = av[i] * bv[i];
        return custom({a, b}, std::move(out), [a, b](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            const T* av = tp.value(a).v.data();
            const T* bv = tp.value(b).v.data();
            int64_t n = tp.value(self).numel();
            if (T* ga = tp.grad_ptr(a))
                for (int64_t i = 0; i < n; ++i) ga[i] += go[i] * bv[i];
            if (T* gb = tp.grad_ptr(b))
                for (int64_t i = 0; i < n; ++i) gb[i] += go[i] * av[i];
        });
    }

    Val scale(Val a, T s) {
        TensorT<T> out = clone_shape(a);
        const auto& av = value(a).v;
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = av[i] * s;
        return custom({a}, std::move(out), [a, s](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            int64_t n = tp.value(self).numel();
            if (T* ga = tp.grad_ptr(a))
                for (int64_t i = 0; i < n; ++i) ga[i] += go[i] * s;
        });
    }

    Val relu(Val a) {
        TensorT<T> out = clone_shape(a);
        const auto& av = value(a).v;
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = av[i] > T(0) ? av[i] : T(0);
        return custom({a}, std::move(out), [a](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            const T* av = tp.value(a).v.data();
            int64_t n = tp.value(self).numel();
            if (T* ga = tp.grad_ptr(a))
                for (int64_t i = 0; i < n; ++i) ga[i] += av[i] > T(0) ? go[i] : T(0);
        });
    }

    Val leaky_relu(Val a, T slope = T(0.2)) {
        TensorT<T> out = clone_shape(a);
        const auto& av = value(a).v;
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = av[i] > T(0) ? av[i] : slope * av[i];
        return custom({a}, std::move(out), [a, slope](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            const T* av = tp.value(a).v.data();
            int64_t n = tp.value(self).numel();
            if (T* ga = tp.grad_ptr(a))
                for (int64_t i = 0; i < n; ++i) ga[i] += (av[i] > T(0) ? go[i] : slope * go[i]);
        });
    }

    // softplus(x) = log(1 + exp(x)); used for nonnegative densities.
    Val softplus(Val a) {
        TensorT<T> out = clone_shape(a);
        const auto& av = value(a).v;
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = softplus_scalar(av[i]);
        return custom({a}, std::move(out), [a](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            const T* av = tp.value(a).v.data();
            int64_t n = tp.value(self).numel();
            if (T* ga = tp.grad_ptr(a))
                for (int64_t i = 0; i < n; ++i) ga[i] += go[i] * sigmoid_scalar(av[i]);
        });
    }

    // Hard clamp to [0,1]; gradient passes inside the closed interval.
    Val clamp01(Val a) {
        TensorT<T> out = clone_shape(a);
        const auto& av = value(a).v;
        for (size_t i = 0; i < out.v.size(); ++i)
            out.v[i] = av[i] < T(0) ? T(0) : (av[i] > T(1) ? T(1) : av[i]);
        return custom({a}, std::move(out), [a](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            const T* av = tp.value(a).v.data();
            int64_t n = tp.value(self).numel();
            if (T* ga = tp.grad_ptr(a))
                for (int64_t i = 0; i < n; ++i)
                    ga[i] += (av[i] >= T(0) && av[i] <= T(1)) ? go[i] : T(0);
        });
    }

    // --- shape ops -----------------------------------------------------------

    // Concatenation along the last dimension; leading dims must agree.
    Val concat(const std::vector<Val>& parts) {
        if (parts.empty()) throw InvalidArgument("concat: no inputs");
        std::vector<int> shape = value(parts[0]).shape;
        int64_t rows = shape_numel(shape) / shape.back();
        int total_c = 0;
        for (Val p : parts) {
            const auto& s = value(p).shape;
            if (std::vector<int>(s.begin(), s.end() - 1) !=
                std::vector<int>(shape.begin(), shape.end() - 1))
                throw InvalidArgument("concat: leading dims mismatch " + shape_str(s) + " vs " +
                                      shape_str(shape));
            total_c += s.back();
        }
        shape.back() = total_c;
        TensorT<T> out(shape);
        int64_t off = 0;
        for (Val p : parts) {
            const auto& pv = value(p);
            int c = pv.shape.back();
            for (int64_t r = 0; r < rows; ++r)
                for (int j = 0; j < c; ++j) out.v[size_t(r * total_c + off + j)] = pv.v[size_t(r * c + j)];
            off += c;
        }
        auto inputs = parts;
        return custom(parts, std::move(out), [inputs, rows, total_c](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            int64_t off = 0;
            for (Val p : inputs) {
                int c = tp.value(p).shape.back();
                if (T* gp = tp.grad_ptr(p)) {
                    for (int64_t r = 0; r < rows; ++r)
                        for (int j = 0; j < c; ++j) gp[r * c + j] += go[r * total_c + off + j];
                }
                off += c;
            }
        });
    }

    // Channel slice [c0, c1) along the last dimension.
    Val slice_channels(Val a, int c0, int c1) {
        const auto& av = value(a);
        int c = av.shape.back();
        if (c0 < 0 || c1 > c || c0 >= c1)
            throw InvalidArgument("slice_channels: bad range on " + shape_str(av.shape));
        std::vector<int> shape = av.shape;
        shape.back() = c1 - c0;
        int64_t rows = shape_numel(shape) / (c1 - c0);
        TensorT<T> out(shape);
        for (int64_t r = 0; r < rows; ++r)
            for (int j = c0; j < c1; ++j)
                out.v[size_t(r * (c1 - c0) + (j - c0))] = av.v[size_t(r * c + j)];
        return custom({a}, std::move(out), [a, c0, c1, rows, c](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            if (T* ga = tp.grad_ptr(a)) {
                for (int64_t r = 0; r < rows; ++r)
                    for (int j = c0; j < c1; ++j) ga[r * c + j] += go[r * (c1 - c0) + (j - c0)];
            }
        });
    }

    Val reshape(Val a, std::vector<int> shape) {
        const auto& av = value(a);
        if (shape_numel(shape) != av.numel())
            throw InvalidArgument("reshape: numel mismatch " + shape_str(av.shape) + " -> " +
                                  shape_str(shape));
        TensorT<T> out(shape, av.v);
        return custom({a}, std::move(out), [a](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            int64_t n = tp.value(self).numel();
            if (T* ga = tp.grad_ptr(a))
                for (int64_t i = 0; i < n; ++i) ga[i] += go[i];
        });
    }

    // --- linear layers ---------------------------------------------------------

    // x [N,in] * w [in,out] + b [out]
    Val dense(Val x, Val w, Val b) {
        const auto& xv = value(x);
        const auto& wv = value(w);
        const auto& bv = value(b);
        if (xv.rank() != 2 || wv.rank() != 2 || xv.dim(1) != wv.dim(0) || bv.numel() != wv.dim(1))
            throw InvalidArgument("dense: shape mismatch x" + shape_str(xv.shape) + " w" +
                                  shape_str(wv.shape) + " b" + shape_str(bv.shape));
        int64_t n = xv.dim(0);
        int in = xv.dim(1), outc = wv.dim(1);
        TensorT<T> out({int(n), outc});
        const T* xp = xv.v.data();
        const T* wp = wv.v.data();
        const T* bp = bv.v.data();
        T* op = out.v.data();
        parallel_for(0, n, [&](int64_t lo, int64_t hi) {
            for (int64_t r = lo; r < hi; ++r) {
                T* orow = op + r * outc;
                for (int j = 0; j < outc; ++j) orow[j] = bp[j];
                const T* xrow = xp + r * in;
                for (int k = 0; k < in; ++k) {
                    T a = xrow[k];
                    const T* wrow = wp + int64_t(k) * outc;
                    for (int j = 0; j < outc; ++j) orow[j] += a * wrow[j];
                }
            }
        });
        return custom({x, w, b}, std::move(out), [x, w, b, n, in, outc](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            const T* xp = tp.value(x).v.data();
            const T* wp = tp.value(w).v.data();
            if (T* gx = tp.grad_ptr(x)) {
                parallel_for(0, n, [&](int64_t lo, int64_t hi) {
                    for (int64_t r = lo; r < hi; ++r) {
                        const T* grow = go + r * outc;
                        T* gxrow = gx + r * in;
                        for (int k = 0; k < in; ++k) {
                            const T* wrow = wp + int64_t(k) * outc;
                            T acc = T(0);
                            for (int j = 0; j < outc; ++j) acc += grow[j] * wrow[j];
                            gxrow[k] += acc;
                        }
                    }
                });
            }
            if (T* gw = tp.grad_ptr(w)) {
                // Partitioned over weight rows: deterministic for any worker count.
                parallel_for(0, in, [&](int64_t klo, int64_t khi) {
                    for (int64_t k = klo; k < khi; ++k) {
                        T* gwrow = gw + k * outc;
                        for (int64_t r = 0; r < n; ++r) {
                            T a = xp[r * in + k];
                            const T* grow = go + r * outc;
                            for (int j = 0; j < outc; ++j) gwrow[j] += a * grow[j];
                        }
                    }
                });
            }
            if (T* gb = tp.grad_ptr(b)) {
                for (int64_t r = 0; r < n; ++r) {
                    const T* grow = go + r * outc;
                    for (int j = 0; j < outc; ++j) gb[j] += grow[j];
                }
            }
        });
    }

    // x [H,W,Cin], w [kh,kw,Cin,Cout], b [Cout]
    Val conv2d(Val x, Val w, Val b, int stride, int pad) {
        const auto& xv = value(x);
        const auto& wv = value(w);
        const auto& bv = value(b);
        if (xv.rank() != 3 || wv.rank() != 4 || xv.dim(2) != wv.dim(2) || bv.numel() != wv.dim(3))
            throw InvalidArgument("conv2d: shape mismatch x" + shape_str(xv.shape) + " w" +
                                  shape_str(wv.shape) + " b" + shape_str(bv.shape));
        int h = xv.dim(0), wd = xv.dim(1), ci = xv.dim(2);
        int kh = wv.dim(0), kw = wv.dim(1), co = wv.dim(3);
        int ho = (h + 2 * pad - kh) / stride + 1;
        int wo = (wd + 2 * pad - kw) / stride + 1;
        if (ho <= 0 || wo <= 0) throw InvalidArgument("conv2d: empty output for x" + shape_str(xv.shape));
        TensorT<T> out({ho, wo, co});
        conv2d_forward(xv.v.data(), wv.v.data(), bv.v.data(), out.v.data(), h, wd, ci, kh, kw, co,
                       ho, wo, stride, pad);
        return custom({x, w, b}, std::move(out),
                      [x, w, b, h, wd, ci, kh, kw, co, ho, wo, stride, pad](Tape& tp, Val self) {
                          const T* go = tp.grad(self).g.data();
                          conv2d_backward(tp.value(x).v.data(), tp.value(w).v.data(), go,
                                          tp.grad_ptr(x), tp.grad_ptr(w), tp.grad_ptr(b), h, wd, ci,
                                          kh, kw, co, ho, wo, stride, pad);
                      });
    }

    // Bilinear upsampling by exactly 2x with half-texel alignment.
    Val bilinear_resize2x(Val x) {
        const auto& xv = value(x);
        if (xv.rank() != 3) throw InvalidArgument("bilinear_resize2x: expected [H,W,C]");
        int h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
        int h2 = h * 2, w2 = w * 2;
        TensorT<T> out({h2, w2, c});
        resize2x_forward(xv.v.data(), out.v.data(), h, w, c);
        return custom({x}, std::move(out), [x, h, w, c](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            if (T* gx = tp.grad_ptr(x)) resize2x_backward(go, gx, h, w, c);
        });
    }

    // Per-row L2 normalization of 3-channel rows: y = x / sqrt(|x|^2 + eps).
    Val normalize3(Val a, T eps) {
        const auto& av = value(a);
        if (av.shape.back() != 3) throw InvalidArgument("normalize3: last dim must be 3");
        int64_t rows = av.numel() / 3;
        TensorT<T> out = clone_shape(a);
        for (int64_t r = 0; r < rows; ++r) {
            const T* x = av.v.data() + r * 3;
            T s = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + eps);
            for (int j = 0; j < 3; ++j) out.v[size_t(r * 3 + j)] = x[j] / s;
        }
        return custom({a}, std::move(out), [a, rows, eps](Tape& tp, Val self) {
            const T* go = tp.grad(self).g.data();
            const T* av = tp.value(a).v.data();
            if (T* ga = tp.grad_ptr(a)) {
                for (int64_t r = 0; r < rows; ++r) {
                    const T* x = av + r * 3;
                    const T* gy = go + r * 3;
                    T s2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + eps;
                    T s = std::sqrt(s2);
                    T xg = x[0] * gy[0] + x[1] * gy[1] + x[2] * gy[2];
                    for (int j = 0; j < 3; ++j) ga[r * 3 + j] += gy[j] / s - x[j] * xg / (s2 * s);
                }
            }
        });
    }

    // --- reductions ------------------------------------------------------------

    // Mean squared error over all entries.
    Val mse(Val a, Val b) {
        check_same_shape("mse", a, b);
        const auto& av = value(a).v;
        const auto& bv = value(b).v;
        T acc = T(0);
        for (size_t i = 0; i < av.size(); ++i) {
            T d = av[i] - bv[i];
            acc += d * d;
        }
        T inv = T(1) / T(av.size());
        TensorT<T> out = TensorT<T>::scalar(acc * inv);
        return custom({a, b}, std::move(out), [a, b, inv](Tape& tp, Val self) {
            T go = tp.grad(self).g[0];
            const T* av = tp.value(a).v.data();
            const T* bv = tp.value(b).v.data();
            int64_t n = tp.value(a).numel();
            T c = T(2) * inv * go;
            if (T* ga = tp.grad_ptr(a))
                for (int64_t i = 0; i < n; ++i) ga[i] += c * (av[i] - bv[i]);
            if (T* gb = tp.grad_ptr(b))
                for (int64_t i = 0; i < n; ++i) gb[i] -= c * (av[i] - bv[i]);
        });
    }

    // Mean absolute error over all entries.
    Val l1(Val a, Val b) {
        check_same_shape("l1", a, b);
        const auto& av = value(a).v;
        const auto& bv = value(b).v;
        T acc = T(0);
        for (size_t i = 0; i < av.size(); ++i) acc += std::abs(av[i] - bv[i]);
        T inv = T(1) / T(av.size());
        TensorT<T> out = TensorT<T>::scalar(acc * inv);
        return custom({a, b}, std::move(out), [a, b, inv](Tape& tp, Val self) {
            T go = tp.grad(self).g[0];
            const T* av = tp.value(a).v.data();
            const T* bv = tp.value(b).v.data();
            int64_t n = tp.value(a).numel();
            T c = inv * go;
            if (T* ga = tp.grad_ptr(a))
                for (int64_t i = 0; i < n; ++i)
                    ga[i] += av[i] > bv[i] ? c : (av[i] < bv[i] ? -c : T(0));
            if (T* gb = tp.grad_ptr(b))
                for (int64_t i = 0; i < n; ++i)
                    gb[i] -= av[i] > bv[i] ? c : (av[i] < bv[i] ? -c : T(0));
        });
    }

    // Mean over masked texels of the squared channel-vector error:
    //   sum_{texel in mask} |a - b|^2 / denom,  mask broadcast over channels.
    Val masked_sq_mean(Val a, Val b, std::vector<uint8_t> mask, T denom) {
        check_same_shape("masked_sq_mean", a, b);
        const auto& av = value(a);
        int c = av.shape.back();
        int64_t texels = av.numel() / c;
        if (int64_t(mask.size()) != texels)
            throw InvalidArgument("masked_sq_mean: mask size != texel count");
        if (denom <= T(0)) throw InvalidArgument("masked_sq_mean: empty mask");
        T acc = T(0);
        const auto& bv = value(b);
        for (int64_t t = 0; t < texels; ++t) {
            if (!mask[size_t(t)]) continue;
            for (int j = 0; j < c; ++j) {
                T d = av.v[size_t(t * c + j)] - bv.v[size_t(t * c + j)];
                acc += d * d;
            }
        }
        TensorT<T> out = TensorT<T>::scalar(acc / denom);
        auto m = std::make_shared<std::vector<uint8_t>>(std::move(mask));
        return custom({a, b}, std::move(out), [a, b, m, c, texels, denom](Tape& tp, Val self) {
            T go = tp.grad(self).g[0];
            const T* av = tp.value(a).v.data();
            const T* bv = tp.value(b).v.data();
            T s = T(2) * go / denom;
            T* ga = tp.grad_ptr(a);
            T* gb = tp.grad_ptr(b);
            for (int64_t t = 0; t < texels; ++t) {
                if (!(*m)[size_t(t)]) continue;
                for (int j = 0; j < c; ++j) {
                    T d = s * (av[t * c + j] - bv[t * c + j]);
                    if (ga) ga[t * c + j] += d;
                    if (gb) gb[t * c + j] -= d;
                }
            }
        });
    }

    // Weighted sum of scalars.
    Val weighted_sum(const std::vector<Val>& terms, const std::vector<T>& weights) {
        if (terms.size() != weights.size()) throw InvalidArgument("weighted_sum: size mismatch");
        T acc = T(0);
        for (size_t i = 0; i < terms.size(); ++i) acc += weights[i] * value(terms[i]).v[0];
        auto ts = terms;
        auto ws = weights;
        return custom(terms, TensorT<T>::scalar(acc), [ts, ws](Tape& tp, Val self) {
            T go = tp.grad(self).g[0];
            for (size_t i = 0; i < ts.size(); ++i)
                if (T* g = tp.grad_ptr(ts[i])) g[0] += ws[i] * go;
        });
    }

    // --- backward ---------------------------------------------------------------

    void backward(Val loss) {
        if (value(loss).numel() != 1) throw InvalidArgument("backward: loss must be scalar");
        for (Node& n : nodes_)
            if (n.needs_grad) n.tensor().ensure_grad();
        nodes_[size_t(loss.id)].tensor().g[0] = T(1);
        for (int64_t i = int64_t(nodes_.size()) - 1; i >= 0; --i) {
            Node& n = nodes_[size_t(i)];
            if (n.needs_grad && n.back) n.back(*this, Val{int32_t(i)});
        }
    }

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        TensorT<T> owned;
        TensorT<T>* ext = nullptr;
        std::function<void(Tape&, Val)> back;
        bool needs_grad = false;

        TensorT<T>& tensor() { return ext ? *ext : owned; }
        const TensorT<T>& tensor() const { return ext ? *ext : owned; }
    };

    std::vector<Node> nodes_;

    Val push(Node&& n) {
        nodes_.push_back(std::move(n));
        return Val{int32_t(nodes_.size() - 1)};
    }

    TensorT<T> clone_shape(Val a) { return TensorT<T>(value(a).shape); }

    void check_same_shape(const char* op, Val a, Val b) const {
        if (value(a).shape != value(b).shape)
            throw InvalidArgument(std::string(op) + ": shape mismatch " + shape_str(value(a).shape) +
                                  " vs " + shape_str(value(b).shape));
    }

    static T softplus_scalar(T x) {
        if (x > T(20)) return x;
        if (x < T(-20)) return std::exp(x);
        return std::log1p(std::exp(x));
    }
    static T sigmoid_scalar(T x) { return T(1) / (T(1) + std::exp(-x)); }

    static void conv2d_forward(const T* x, const T* w, const T* b, T* out, int h, int wd, int ci,
                               int kh, int kw, int co, int ho, int wo, int stride, int pad) {
        parallel_for(0, ho, [&](int64_t ylo, int64_t yhi) {
            std::vector<T> acc(size_t(co), T(0));
            for (int64_t y = ylo; y < yhi; ++y) {
                for (int xo = 0; xo < wo; ++xo) {
                    for (int j = 0; j < co; ++j) acc[size_t(j)] = b[j];
                    for (int ky = 0; ky < kh; ++ky) {
                        int iy = int(y) * stride - pad + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            int ix = xo * stride - pad + kx;
                            if (ix < 0 || ix >= wd) continue;
                            const T* xp = x + (int64_t(iy) * wd + ix) * ci;
                            const T* wp = w + ((int64_t(ky) * kw + kx) * ci) * co;
                            for (int k = 0; k < ci; ++k) {
                                T a = xp[k];
                                const T* wrow = wp + int64_t(k) * co;
                                for (int j = 0; j < co; ++j) acc[size_t(j)] += a * wrow[j];
                            }
                        }
                    }
                    T* orow = out + (y * wo + xo) * co;
                    for (int j = 0; j < co; ++j) orow[j] = acc[size_t(j)];
                }
            }
        });
    }

    static void conv2d_backward(const T* x, const T* w, const T* go, T* gx, T* gw, T* gb, int h,
                                int wd, int ci, int kh, int kw, int co, int ho, int wo, int stride,
                                int pad) {
        if (gb) {
            for (int64_t i = 0; i < int64_t(ho) * wo; ++i) {
                const T* grow = go + i * co;
                for (int j = 0; j < co; ++j) gb[j] += grow[j];
            }
        }
        if (gw) {
            // One task per (ky,kx,ci) weight row: disjoint writes.
            parallel_for(0, int64_t(kh) * kw * ci, [&](int64_t lo, int64_t hi) {
                for (int64_t t = lo; t < hi; ++t) {
                    int k = int(t % ci);
                    int kx = int((t / ci) % kw);
                    int ky = int(t / (int64_t(ci) * kw));
                    T* gwrow = gw + t * co;
                    for (int y = 0; y < ho; ++y) {
                        int iy = y * stride - pad + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (int xo = 0; xo < wo; ++xo) {
                            int ix = xo * stride - pad + kx;
                            if (ix < 0 || ix >= wd) continue;
                            T a = x[(int64_t(iy) * wd + ix) * ci + k];
                            const T* grow = go + (int64_t(y) * wo + xo) * co;
                            for (int j = 0; j < co; ++j) gwrow[j] += a * grow[j];
                        }
                    }
                }
            });
        }
        if (gx) {
            // Partitioned over input rows: each row receives from a bounded
            // set of output positions.
            parallel_for(0, h, [&](int64_t iylo, int64_t iyhi) {
                for (int64_t iy = iylo; iy < iyhi; ++iy) {
                    for (int ky = 0; ky < kh; ++ky) {
                        int ynum = int(iy) + pad - ky;
                        if (ynum < 0 || ynum % stride) continue;
                        int y = ynum / stride;
                        if (y >= ho) continue;
                        for (int ix = 0; ix < wd; ++ix) {
                            T* gxrow = gx + (iy * wd + ix) * ci;
                            for (int kx = 0; kx < kw; ++kx) {
                                int xnum = ix + pad - kx;
                                if (xnum < 0 || xnum % stride) continue;
                                int xo = xnum / stride;
                                if (xo >= wo) continue;
                                const T* grow = go + (int64_t(y) * wo + xo) * co;
                                const T* wp = w + ((int64_t(ky) * kw + kx) * ci) * co;
                                for (int k = 0; k < ci; ++k) {
                                    const T* wrow = wp + int64_t(k) * co;
                                    T acc = T(0);
                                    for (int j = 0; j < co; ++j) acc += wrow[j] * grow[j];
                                    gxrow[k] += acc;
                                }
                            }
                        }
                    }
                }
            });
        }
    }

    static void resize2x_forward(const T* x, T* out, int h, int w, int c) {
        int h2 = h * 2, w2 = w * 2;
        for (int y2 = 0; y2 < h2; ++y2) {
            double sy = (y2 + 0.5) / 2.0 - 0.5;
            int y0 = int(std::floor(sy));
            double fy = sy - y0;
            int y1 = std::min(y0 + 1, h - 1);
            y0 = std::max(y0, 0);
            for (int x2 = 0; x2 < w2; ++x2) {
                double sx = (x2 + 0.5) / 2.0 - 0.5;
                int x0 = int(std::floor(sx));
                double fx = sx - x0;
                int x1 = std::min(x0 + 1, w - 1);
                x0 = std::max(x0, 0);
                const T* p00 = x + (int64_t(y0) * w + x0) * c;
                const T* p10 = x + (int64_t(y0) * w + x1) * c;
                const T* p01 = x + (int64_t(y1) * w + x0) * c;
                const T* p11 = x + (int64_t(y1) * w + x1) * c;
                T* o = out + (int64_t(y2) * w2 + x2) * c;
                T w00 = T((1 - fx) * (1 - fy)), w10 = T(fx * (1 - fy));
                T w01 = T((1 - fx) * fy), w11 = T(fx * fy);
                for (int k = 0; k < c; ++k)
                    o[k] = w00 * p00[k] + w10 * p10[k] + w01 * p01[k] + w11 * p11[k];
            }
        }
    }

    static void resize2x_backward(const T* go, T* gx, int h, int w, int c) {
        int h2 = h * 2, w2 = w * 2;
        // Serial scatter keeps accumulation order fixed.
        for (int y2 = 0; y2 < h2; ++y2) {
            double sy = (y2 + 0.5) / 2.0 - 0.5;
            int y0 = int(std::floor(sy));
            double fy = sy - y0;
            int y1 = std::min(y0 + 1, h - 1);
            y0 = std::max(y0, 0);
            for (int x2 = 0; x2 < w2; ++x2) {
                double sx = (x2 + 0.5) / 2.0 - 0.5;
                int x0 = int(std::floor(sx));
                double fx = sx - x0;
                int x1 = std::min(x0 + 1, w - 1);
                x0 = std::max(x0, 0);
                const T* g = go + (int64_t(y2) * w2 + x2) * c;
                T w00 = T((1 - fx) * (1 - fy)), w10 = T(fx * (1 - fy));
                T w01 = T((1 - fx) * fy), w11 = T(fx * fy);
                T* g00 = gx + (int64_t(y0) * w + x0) * c;
                T* g10 = gx + (int64_t(y0) * w + x1) * c;
                T* g01 = gx + (int64_t(y1) * w + x0) * c;
                T* g11 = gx + (int64_t(y1) * w + x1) * c;
                for (int k = 0; k < c; ++k) {
                    g00[k] += w00 * g[k];
                    g10[k] += w10 * g[k];
                    g01[k] += w01 * g[k];
                    g11[k] += w11 * g[k];
                }
            }
        }
    }
};

using TapeF = Tape<float>;
using TapeD = Tape<double>;

// Bias-corrected Adam over a fixed parameter list.
template <class T>
class AdamT {
public:
    struct Config {
        T lr = T(1e-3);
        T beta1 = T(0.9);
        T beta2 = T(0.999);
        T eps = T(1e-8);
    };

    AdamT() = default;
    AdamT(std::vector<TensorT<T>*> params, Config cfg) : cfg_(cfg), params_(std::move(params)) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i]->v.size(), T(0));
            v_[i].assign(params_[i]->v.size(), T(0));
        }
    }

    int64_t step_count() const { return step_; }

    // Consumes the gradients currently held in each parameter's grad slot
    // (missing grad = zero) and clears them.
    void step() {
        ++step_;
        T bc1 = T(1) - std::pow(cfg_.beta1, T(step_));
        T bc2 = T(1) - std::pow(cfg_.beta2, T(step_));
        for (size_t i = 0; i < params_.size(); ++i) {
            TensorT<T>& p = *params_[i];
            if (m_[i].size() != p.v.size())
                throw InvalidArgument("adam: state shape mismatch on parameter " + std::to_string(i));
            const bool has_grad = p.g.size() == p.v.size();
            for (size_t k = 0; k < p.v.size(); ++k) {
                T g = has_grad ? p.g[k] : T(0);
                m_[i][k] = cfg_.beta1 * m_[i][k] + (T(1) - cfg_.beta1) * g;
                v_[i][k] = cfg_.beta2 * v_[i][k] + (T(1) - cfg_.beta2) * g * g;
                T mhat = m_[i][k] / bc1;
                T vhat = v_[i][k] / bc2;
                p.v[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
            p.zero_grad();
        }
    }

private:
    Config cfg_;
    std::vector<TensorT<T>*> params_;
    std::vector<std::vector<T>> m_, v_;
    int64_t step_ = 0;
};

using Adam = AdamT<float>;

}  // namespace surmo
