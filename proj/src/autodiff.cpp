#include "mspl/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "mspl/errors.hpp"

namespace mspl::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

[[noreturn]] void shape_error(const std::string& op, const Shape& a, const Shape& b) {
    throw UsageError(op + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

[[noreturn]] void shape_error(const std::string& op, const Shape& a, const std::string& want) {
    throw UsageError(op + ": expected " + want + ", got shape " + shape_string(a));
}

void require_same_graph(const std::string& op, Var a, Var b) {
    if (a.graph != b.graph || a.graph == nullptr) throw UsageError(op + ": operands belong to different graphs");
}

void require_same_shape(const std::string& op, Var a, Var b) {
    require_same_graph(op, a, b);
    if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

}  // namespace

const Tensor& Var::value() const { return graph->value(*this); }

Var Graph::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

const Graph::Node& Graph::node(Var v) const {
    if (v.graph != this || v.id >= nodes_.size()) throw UsageError("variable does not belong to this graph");
    return nodes_[v.id];
}

Var Graph::constant(Tensor value) { return input(std::move(value), false); }

Var Graph::input(Tensor value, bool requires_grad) {
    Node n;
    n.op = "input";
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

Var Graph::parameter(Parameter& p) {
    Node n;
    n.op = "parameter:" + p.name;
    n.value = p.value;
    n.requires_grad = true;
    n.param = &p;
    return push(std::move(n));
}

Var Graph::record(std::string op, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
    Node n;
    n.op = std::move(op);
    n.value = std::move(value);
    n.inputs.reserve(inputs.size());
    for (const auto& v : inputs) {
        if (v.graph != this) throw UsageError(n.op + ": input from a different graph");
        n.inputs.push_back(v.id);
        n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
}

const Tensor& Graph::value(Var v) const { return node(v).value; }
const Tensor& Graph::grad(Var v) const { return node(v).grad; }
bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }
const std::string& Graph::op_name(Var v) const { return node(v).op; }

void Graph::backward(Var loss) {
    const Node& root = node(loss);
    if (root.value.size() != 1)
        throw UsageError("backward: loss must be a scalar, got shape " + shape_string(root.value.shape()));

    for (auto& n : nodes_) {
        if (n.requires_grad)
            n.grad = Tensor(n.value.shape());
        else
            n.grad = Tensor();
    }
    if (!root.requires_grad) return;
    nodes_[loss.id].grad.fill(1.0);

    std::vector<Tensor*> in_grads;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || !n.backward) continue;
        in_grads.clear();
        for (auto id : n.inputs) in_grads.push_back(nodes_[id].requires_grad ? &nodes_[id].grad : nullptr);
        n.backward(n.grad, in_grads);
    }

    for (auto& n : nodes_) {
        if (!n.param) continue;
        auto dst = n.param->grad.data();
        auto src = n.grad.data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
}

// ---------------------------------------------------------------------------
// Elementwise

Var add(Var a, Var b) {
    require_same_shape("add", a, b);
    Tensor out = a.value();
    const auto bv = b.value().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return a.graph->record("add", std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> in) {
        for (auto* t : in)
            if (t)
                for (std::size_t i = 0; i < g.size(); ++i) (*t)[i] += g[i];
    });
}

Var sub(Var a, Var b) {
    require_same_shape("sub", a, b);
    Tensor out = a.value();
    const auto bv = b.value().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    return a.graph->record("sub", std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> in) {
        if (in[0])
            for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
        if (in[1])
            for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] -= g[i];
    });
}

Var mul(Var a, Var b) {
    require_same_shape("mul", a, b);
    Tensor out = a.value();
    const auto bv = b.value().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    Graph* g = a.graph;
    return g->record("mul", std::move(out), {a, b}, [g, a, b](const Tensor& go, std::span<Tensor* const> in) {
        const auto av = g->value(a).data();
        const auto bv = g->value(b).data();
        if (in[0])
            for (std::size_t i = 0; i < go.size(); ++i) (*in[0])[i] += go[i] * bv[i];
        if (in[1])
            for (std::size_t i = 0; i < go.size(); ++i) (*in[1])[i] += go[i] * av[i];
    });
}

Var scale(Var a, double s) {
    Tensor out = a.value();
    for (auto& v : out.data()) v *= s;
    return a.graph->record("scale", std::move(out), {a}, [s](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += s * g[i];
    });
}

Var add_scalar(Var a, double s) {
    Tensor out = a.value();
    for (auto& v : out.data()) v += s;
    return a.graph->record("add_scalar", std::move(out), {a}, [](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
    });
}

Var sq_diff(Var a, Var b) {
    require_same_shape("sq_diff", a, b);
    const auto av = a.value().data();
    const auto bv = b.value().data();
    std::vector<double> diff(av.size());
    Tensor out(a.shape());
    for (std::size_t i = 0; i < av.size(); ++i) {
        diff[i] = av[i] - bv[i];
        out[i] = diff[i] * diff[i];
    }
    return a.graph->record("sq_diff", std::move(out), {a, b},
                           [diff = std::move(diff)](const Tensor& g, std::span<Tensor* const> in) {
                               if (in[0])
                                   for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += 2.0 * diff[i] * g[i];
                               if (in[1])
                                   for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] -= 2.0 * diff[i] * g[i];
                           });
}

Var relu(Var a) {
    Tensor out = a.value();
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
    Graph* g = a.graph;
    return g->record("relu", std::move(out), {a}, [g, a](const Tensor& go, std::span<Tensor* const> in) {
        const auto av = g->value(a).data();
        for (std::size_t i = 0; i < go.size(); ++i)
            if (av[i] > 0.0) (*in[0])[i] += go[i];
    });
}

// ---------------------------------------------------------------------------
// Linear algebra

Var matmul(Var a, Var b) {
    require_same_graph("matmul", a, b);
    const auto& as = a.shape();
    const auto& bs = b.shape();
    if (as.size() != 2 || bs.size() != 2 || as[1] != bs[0]) shape_error("matmul", as, bs);
    const std::size_t m = as[0], k = as[1], n = bs[1];
    Tensor out(Shape{m, n});
    MatMap(out.data().data(), m, n).noalias() =
        ConstMatMap(a.value().data().data(), m, k) * ConstMatMap(b.value().data().data(), k, n);
    Graph* g = a.graph;
    return g->record("matmul", std::move(out), {a, b}, [g, a, b, m, k, n](const Tensor& go, std::span<Tensor* const> in) {
        ConstMatMap G(go.data().data(), m, n);
        if (in[0]) MatMap(in[0]->data().data(), m, k).noalias() += G * ConstMatMap(g->value(b).data().data(), k, n).transpose();
        if (in[1]) MatMap(in[1]->data().data(), k, n).noalias() += ConstMatMap(g->value(a).data().data(), m, k).transpose() * G;
    });
}

Var add_bias(Var a, Var bias) {
    require_same_graph("add_bias", a, bias);
    const auto& s = a.shape();
    if ((s.size() != 2 && s.size() != 3) || bias.shape().size() != 1 || bias.shape()[0] != s[1])
        shape_error("add_bias", s, bias.shape());
    const std::size_t n = s[0], c = s[1], inner = s.size() == 3 ? s[2] : 1;
    Tensor out = a.value();
    const auto bv = bias.value().data();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j)
            for (std::size_t l = 0; l < inner; ++l) out[(i * c + j) * inner + l] += bv[j];
    return a.graph->record("add_bias", std::move(out), {a, bias},
                           [n, c, inner](const Tensor& g, std::span<Tensor* const> in) {
                               if (in[0])
                                   for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
                               if (in[1])
                                   for (std::size_t i = 0; i < n; ++i)
                                       for (std::size_t j = 0; j < c; ++j) {
                                           double acc = 0.0;
                                           for (std::size_t l = 0; l < inner; ++l) acc += g[(i * c + j) * inner + l];
                                           (*in[1])[j] += acc;
                                       }
                           });
}

// ---------------------------------------------------------------------------
// Convolutional

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride, std::size_t pad) {
    if (stride == 0) throw UsageError("conv1d: stride must be positive");
    if (length + 2 * pad < kernel)
        throw UsageError("conv1d: kernel " + std::to_string(kernel) + " longer than padded input " +
                         std::to_string(length + 2 * pad));
    return (length + 2 * pad - kernel) / stride + 1;
}

Var conv1d(Var x, Var weight, Var bias, std::size_t stride, std::size_t pad) {
    require_same_graph("conv1d", x, weight);
    require_same_graph("conv1d", x, bias);
    const auto& xs = x.shape();
    const auto& ws = weight.shape();
    if (xs.size() != 3 || ws.size() != 3 || ws[1] != xs[1]) shape_error("conv1d", xs, ws);
    if (bias.shape() != Shape{ws[0]}) shape_error("conv1d", ws, bias.shape());

    const std::size_t n = xs[0], cin = xs[1], len = xs[2];
    const std::size_t cout = ws[0], k = ws[2];
    const std::size_t lout = conv1d_output_length(len, k, stride, pad);
    const std::size_t rows = cin * k, cols = n * lout;

    // im2col: column (b, o) holds the receptive field of output position o of sample b.
    std::vector<double> patches(rows * cols, 0.0);
    const auto xv = x.value().data();
    for (std::size_t ci = 0; ci < cin; ++ci)
        for (std::size_t kk = 0; kk < k; ++kk) {
            double* row = patches.data() + (ci * k + kk) * cols;
            for (std::size_t b = 0; b < n; ++b) {
                const double* src = xv.data() + (b * cin + ci) * len;
                for (std::size_t o = 0; o < lout; ++o) {
                    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(o * stride + kk) - static_cast<std::ptrdiff_t>(pad);
                    if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(len)) row[b * lout + o] = src[pos];
                }
            }
        }

    RowMatrix prod = ConstMatMap(weight.value().data().data(), cout, rows) * ConstMatMap(patches.data(), rows, cols);
    Tensor out(Shape{n, cout, lout});
    const auto bv = bias.value().data();
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t co = 0; co < cout; ++co) {
            double* dst = out.data().data() + (b * cout + co) * lout;
            const double* src = prod.data() + co * cols + b * lout;
            for (std::size_t o = 0; o < lout; ++o) dst[o] = src[o] + bv[co];
        }

    Graph* g = x.graph;
    return g->record(
        "conv1d", std::move(out), {x, weight, bias},
        [g, weight, n, cin, len, cout, k, lout, rows, cols, stride, pad, patches = std::move(patches)](
            const Tensor& go, std::span<Tensor* const> in) {
            RowMatrix G(cout, cols);
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t co = 0; co < cout; ++co) {
                    const double* src = go.data().data() + (b * cout + co) * lout;
                    double* dst = G.data() + co * cols + b * lout;
                    std::copy(src, src + lout, dst);
                }
            if (in[1]) MatMap(in[1]->data().data(), cout, rows).noalias() += G * ConstMatMap(patches.data(), rows, cols).transpose();
            if (in[2])
                for (std::size_t co = 0; co < cout; ++co) (*in[2])[co] += G.row(co).sum();
            if (in[0]) {
                RowMatrix dpatch = ConstMatMap(g->value(weight).data().data(), cout, rows).transpose() * G;
                auto dx = in[0]->data();
                for (std::size_t ci = 0; ci < cin; ++ci)
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        const double* row = dpatch.data() + (ci * k + kk) * cols;
                        for (std::size_t b = 0; b < n; ++b) {
                            double* dst = dx.data() + (b * cin + ci) * len;
                            for (std::size_t o = 0; o < lout; ++o) {
                                const std::ptrdiff_t pos =
                                    static_cast<std::ptrdiff_t>(o * stride + kk) - static_cast<std::ptrdiff_t>(pad);
                                if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(len)) dst[pos] += row[b * lout + o];
                            }
                        }
                    }
            }
        });
}

Var upsample2(Var x) {
    const auto& s = x.shape();
    if (s.size() != 3) shape_error("upsample2", s, "rank-3 [N, C, L]");
    const std::size_t rows = s[0] * s[1], len = s[2];
    Tensor out(Shape{s[0], s[1], 2 * len});
    const auto xv = x.value().data();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t l = 0; l < len; ++l) out[r * 2 * len + 2 * l] = out[r * 2 * len + 2 * l + 1] = xv[r * len + l];
    return x.graph->record("upsample2", std::move(out), {x}, [rows, len](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t l = 0; l < len; ++l) (*in[0])[r * len + l] += g[r * 2 * len + 2 * l] + g[r * 2 * len + 2 * l + 1];
    });
}

Var concat_channels(Var a, Var b) {
    require_same_graph("concat_channels", a, b);
    const auto& as = a.shape();
    const auto& bs = b.shape();
    const bool ok = as.size() == bs.size() && (as.size() == 2 || as.size() == 3) && as[0] == bs[0] &&
                    (as.size() == 2 || as[2] == bs[2]);
    if (!ok) shape_error("concat_channels", as, bs);
    const std::size_t n = as[0], ca = as[1], cb = bs[1], inner = as.size() == 3 ? as[2] : 1;
    Shape os = as;
    os[1] = ca + cb;
    Tensor out(os);
    const auto av = a.value().data();
    const auto bv = b.value().data();
    const std::size_t sa = ca * inner, sb = cb * inner;
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(av.data() + i * sa, sa, out.data().data() + i * (sa + sb));
        std::copy_n(bv.data() + i * sb, sb, out.data().data() + i * (sa + sb) + sa);
    }
    return a.graph->record("concat_channels", std::move(out), {a, b},
                           [n, sa, sb](const Tensor& g, std::span<Tensor* const> in) {
                               for (std::size_t i = 0; i < n; ++i) {
                                   const double* src = g.data().data() + i * (sa + sb);
                                   if (in[0])
                                       for (std::size_t j = 0; j < sa; ++j) (*in[0])[i * sa + j] += src[j];
                                   if (in[1])
                                       for (std::size_t j = 0; j < sb; ++j) (*in[1])[i * sb + j] += src[sa + j];
                               }
                           });
}

Var flatten(Var x) {
    const auto& s = x.shape();
    if (s.empty()) shape_error("flatten", s, "rank >= 1");
    Tensor out = x.value().reshaped(Shape{s[0], x.value().size() / s[0]});
    return x.graph->record("flatten", std::move(out), {x}, [](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
    });
}

Var softmax_rows(Var x) {
    const auto& s = x.shape();
    if (s.size() != 2) shape_error("softmax_rows", s, "rank-2 [N, K]");
    const std::size_t n = s[0], k = s[1];
    Tensor out = x.value();
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out.data().data() + i * k;
        const double mx = *std::max_element(row, row + k);
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) z += (row[j] = std::exp(row[j] - mx));
        for (std::size_t j = 0; j < k; ++j) row[j] /= z;
    }
    Tensor probs = out;
    return x.graph->record("softmax_rows", std::move(out), {x},
                           [n, k, probs = std::move(probs)](const Tensor& g, std::span<Tensor* const> in) {
                               for (std::size_t i = 0; i < n; ++i) {
                                   double dot = 0.0;
                                   for (std::size_t j = 0; j < k; ++j) dot += g[i * k + j] * probs[i * k + j];
                                   for (std::size_t j = 0; j < k; ++j)
                                       (*in[0])[i * k + j] += probs[i * k + j] * (g[i * k + j] - dot);
                               }
                           });
}

// ---------------------------------------------------------------------------
// Reductions and fused losses

Var sum(Var x) {
    double acc = 0.0;
    for (double v : x.value().data()) acc += v;
    return x.graph->record("sum", Tensor::scalar(acc), {x}, [](const Tensor& g, std::span<Tensor* const> in) {
        const double gv = g[0];
        for (auto& v : in[0]->data()) v += gv;
    });
}

Var mean(Var x) {
    const double count = static_cast<double>(x.value().size());
    double acc = 0.0;
    for (double v : x.value().data()) acc += v;
    return x.graph->record("mean", Tensor::scalar(acc / count), {x},
                           [count](const Tensor& g, std::span<Tensor* const> in) {
                               const double gv = g[0] / count;
                               for (auto& v : in[0]->data()) v += gv;
                           });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
    const auto& s = logits.shape();
    if (s.size() != 2) shape_error("softmax_cross_entropy", s, "rank-2 [N, K]");
    const std::size_t n = s[0], k = s[1];
    if (labels.size() != n)
        throw UsageError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k)
            throw UsageError("softmax_cross_entropy: label " + std::to_string(labels[i]) + " at row " +
                             std::to_string(i) + " outside [0, " + std::to_string(k) + ")");

    const auto zv = logits.value().data();
    std::vector<double> probs(n * k);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = zv.data() + i * k;
        const double mx = *std::max_element(row, row + k);
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
        const double log_z = mx + std::log(z);
        for (std::size_t j = 0; j < k; ++j) probs[i * k + j] = std::exp(row[j] - log_z);
        loss += log_z - row[labels[i]];
    }
    std::vector<int> y(labels.begin(), labels.end());
    return logits.graph->record(
        "softmax_cross_entropy", Tensor::scalar(loss / static_cast<double>(n)), {logits},
        [n, k, probs = std::move(probs), y = std::move(y)](const Tensor& g, std::span<Tensor* const> in) {
            const double scale = g[0] / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                    const double target = static_cast<std::size_t>(y[i]) == j ? 1.0 : 0.0;
                    (*in[0])[i * k + j] += scale * (probs[i * k + j] - target);
                }
        });
}

Var pdist_rows(Var h) {
    const auto& s = h.shape();
    if (s.size() != 2) shape_error("pdist_rows", s, "rank-2 [N, D]");
    const std::size_t n = s[0], d = s[1];
    const auto hv = h.value().data();
    Tensor out(Shape{n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = hv[i * d + c] - hv[j * d + c];
                acc += diff * diff;
            }
            out[i * n + j] = out[j * n + i] = std::sqrt(acc);
        }
    Tensor dist = out;
    Graph* g = h.graph;
    return g->record("pdist_rows", std::move(out), {h},
                     [g, h, n, d, dist = std::move(dist)](const Tensor& go, std::span<Tensor* const> in) {
                         const auto hv = g->value(h).data();
                         auto dh = in[0]->data();
                         for (std::size_t i = 0; i < n; ++i)
                             for (std::size_t j = i + 1; j < n; ++j) {
                                 const double dij = dist[i * n + j];
                                 if (dij <= 0.0) continue;
                                 const double coeff = (go[i * n + j] + go[j * n + i]) / dij;
                                 for (std::size_t c = 0; c < d; ++c) {
                                     const double diff = coeff * (hv[i * d + c] - hv[j * d + c]);
                                     dh[i * d + c] += diff;
                                     dh[j * d + c] -= diff;
                                 }
                             }
                     });
}

}  // namespace mspl::ad
