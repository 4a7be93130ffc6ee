#include "gfcad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gfcad {

namespace {

std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

void check_finite(const Tensor& t, const char* op) {
    for (double v : t.data()) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::Numeric, std::string(op) + ": non-finite input value");
        }
    }
}

void check_shapes_equal(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw Error(ErrorKind::Numeric, std::string(op) + ": shape mismatch " +
                                            shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

bool needs_grad(const Tensor& t) {
    return t.defined() && (t.node()->requires_grad || t.node()->backprop);
}

std::vector<double>& grad_buf(GradMap& g, const TensorNode* n) {
    auto it = g.find(n);
    if (it == g.end()) {
        it = g.emplace(n, std::vector<double>(n->numel(), 0.0)).first;
    }
    return it->second;
}

const std::vector<double>* grad_of(GradMap& g, const TensorNode* n) {
    auto it = g.find(n);
    return it == g.end() ? nullptr : &it->second;
}

using Backprop = std::function<void(const TensorNode&, GradMap&)>;

Tensor make_result(std::vector<int> shape, std::vector<double> values,
                   std::vector<Tensor> inputs, Backprop bp) {
    if (get_precision() == Precision::F32) {
        for (double& v : values) v = static_cast<double>(static_cast<float>(v));
    }
    auto node = std::make_shared<TensorNode>(std::move(shape), std::move(values));
    bool record = grad_enabled();
    if (record) {
        bool any = false;
        for (const Tensor& t : inputs) any = any || needs_grad(t);
        record = any;
    }
    if (record) {
        node->inputs.reserve(inputs.size());
        for (Tensor& t : inputs) node->inputs.push_back(t.shared());
        node->backprop = std::move(bp);
    }
    return Tensor(std::move(node));
}

// broadcast classification for add/mul: equal shapes, or b is a row vector
// {D} / {1,D} applied across the rows of a {L,D}
enum class Cast { Equal, RowVec };

Cast classify_broadcast(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() == b.shape()) return Cast::Equal;
    bool b_rowvec = (b.shape().size() == 1 && b.shape()[0] == a.cols()) ||
                    (b.shape().size() == 2 && b.shape()[0] == 1 && b.shape()[1] == a.cols());
    if (a.shape().size() == 2 && b_rowvec) return Cast::RowVec;
    throw Error(ErrorKind::Numeric, std::string(op) + ": shape mismatch " +
                                        shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_finite(a, "add");
    check_finite(b, "add");
    Cast cast = classify_broadcast(a, b, "add");
    std::vector<double> out(a.numel());
    const auto& av = a.data();
    const auto& bv = b.data();
    if (cast == Cast::Equal) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    } else {
        int n = a.rows(), d = a.cols();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j)
                out[static_cast<std::size_t>(i) * d + j] =
                    av[static_cast<std::size_t>(i) * d + j] + bv[static_cast<std::size_t>(j)];
    }
    return make_result(a.shape(), std::move(out), {a, b},
                       [cast](const TensorNode& self, GradMap& g) {
                           const auto* dy = grad_of(g, &self);
                           if (!dy) return;
                           const TensorNode* na = self.inputs[0].get();
                           const TensorNode* nb = self.inputs[1].get();
                           if (na->requires_grad || na->backprop) {
                               auto& da = grad_buf(g, na);
                               for (std::size_t i = 0; i < dy->size(); ++i) da[i] += (*dy)[i];
                           }
                           if (nb->requires_grad || nb->backprop) {
                               auto& db = grad_buf(g, nb);
                               if (cast == Cast::Equal) {
                                   for (std::size_t i = 0; i < dy->size(); ++i) db[i] += (*dy)[i];
                               } else {
                                   int n = self.shape[0], d = self.shape[1];
                                   for (int i = 0; i < n; ++i)
                                       for (int j = 0; j < d; ++j)
                                           db[static_cast<std::size_t>(j)] +=
                                               (*dy)[static_cast<std::size_t>(i) * d + j];
                               }
                           }
                       });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_finite(a, "mul");
    check_finite(b, "mul");
    Cast cast = classify_broadcast(a, b, "mul");
    std::vector<double> out(a.numel());
    const auto& av = a.data();
    const auto& bv = b.data();
    if (cast == Cast::Equal) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    } else {
        int n = a.rows(), d = a.cols();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j)
                out[static_cast<std::size_t>(i) * d + j] =
                    av[static_cast<std::size_t>(i) * d + j] * bv[static_cast<std::size_t>(j)];
    }
    return make_result(a.shape(), std::move(out), {a, b},
                       [cast](const TensorNode& self, GradMap& g) {
                           const auto* dy = grad_of(g, &self);
                           if (!dy) return;
                           const TensorNode* na = self.inputs[0].get();
                           const TensorNode* nb = self.inputs[1].get();
                           const auto& av = na->values;
                           const auto& bv = nb->values;
                           bool want_a = na->requires_grad || na->backprop;
                           bool want_b = nb->requires_grad || nb->backprop;
                           if (cast == Cast::Equal) {
                               if (want_a) {
                                   auto& da = grad_buf(g, na);
                                   for (std::size_t i = 0; i < dy->size(); ++i)
                                       da[i] += (*dy)[i] * bv[i];
                               }
                               if (want_b) {
                                   auto& db = grad_buf(g, nb);
                                   for (std::size_t i = 0; i < dy->size(); ++i)
                                       db[i] += (*dy)[i] * av[i];
                               }
                           } else {
                               int n = self.shape[0], d = self.shape[1];
                               if (want_a) {
                                   auto& da = grad_buf(g, na);
                                   for (int i = 0; i < n; ++i)
                                       for (int j = 0; j < d; ++j)
                                           da[static_cast<std::size_t>(i) * d + j] +=
                                               (*dy)[static_cast<std::size_t>(i) * d + j] *
                                               bv[static_cast<std::size_t>(j)];
                               }
                               if (want_b) {
                                   auto& db = grad_buf(g, nb);
                                   for (int i = 0; i < n; ++i)
                                       for (int j = 0; j < d; ++j)
                                           db[static_cast<std::size_t>(j)] +=
                                               (*dy)[static_cast<std::size_t>(i) * d + j] *
                                               av[static_cast<std::size_t>(i) * d + j];
                               }
                           }
                       });
}

Tensor scale(const Tensor& a, double c) {
    check_finite(a, "scale");
    std::vector<double> out(a.numel());
    const auto& av = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
    return make_result(a.shape(), std::move(out), {a},
                       [c](const TensorNode& self, GradMap& g) {
                           const auto* dy = grad_of(g, &self);
                           if (!dy) return;
                           auto& da = grad_buf(g, self.inputs[0].get());
                           for (std::size_t i = 0; i < dy->size(); ++i) da[i] += (*dy)[i] * c;
                       });
}

Tensor add_scalar(const Tensor& a, double c) {
    check_finite(a, "add_scalar");
    std::vector<double> out(a.numel());
    const auto& av = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
    return make_result(a.shape(), std::move(out), {a},
                       [](const TensorNode& self, GradMap& g) {
                           const auto* dy = grad_of(g, &self);
                           if (!dy) return;
                           auto& da = grad_buf(g, self.inputs[0].get());
                           for (std::size_t i = 0; i < dy->size(); ++i) da[i] += (*dy)[i];
                       });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_finite(a, "matmul");
    check_finite(b, "matmul");
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
        throw Error(ErrorKind::Numeric, "matmul: shape mismatch " + shape_str(a.shape()) +
                                            " vs " + shape_str(b.shape()));
    }
    int n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(n) * m, 0.0);
    const double* av = a.data().data();
    const double* bv = b.data().data();
    for (int i = 0; i < n; ++i) {
        double* crow = out.data() + static_cast<std::size_t>(i) * m;
        const double* arow = av + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            double aik = arow[p];
            const double* brow = bv + static_cast<std::size_t>(p) * m;
            for (int j = 0; j < m; ++j) crow[j] += aik * brow[j];
        }
    }
    return make_result(
        {n, m}, std::move(out), {a, b}, [n, k, m](const TensorNode& self, GradMap& g) {
            const auto* dyv = grad_of(g, &self);
            if (!dyv) return;
            const double* dy = dyv->data();
            const TensorNode* na = self.inputs[0].get();
            const TensorNode* nb = self.inputs[1].get();
            if (na->requires_grad || na->backprop) {
                auto& da = grad_buf(g, na);
                const double* bv = nb->values.data();
                for (int i = 0; i < n; ++i)
                    for (int p = 0; p < k; ++p) {
                        const double* dyrow = dy + static_cast<std::size_t>(i) * m;
                        const double* brow = bv + static_cast<std::size_t>(p) * m;
                        double acc = 0.0;
                        for (int j = 0; j < m; ++j) acc += dyrow[j] * brow[j];
                        da[static_cast<std::size_t>(i) * k + p] += acc;
                    }
            }
            if (nb->requires_grad || nb->backprop) {
                auto& db = grad_buf(g, nb);
                const double* av = na->values.data();
                for (int i = 0; i < n; ++i) {
                    const double* arow = av + static_cast<std::size_t>(i) * k;
                    const double* dyrow = dy + static_cast<std::size_t>(i) * m;
                    for (int p = 0; p < k; ++p) {
                        double aik = arow[p];
                        double* dbrow = db.data() + static_cast<std::size_t>(p) * m;
                        for (int j = 0; j < m; ++j) dbrow[j] += aik * dyrow[j];
                    }
                }
            }
        });
}

Tensor sigmoid(const Tensor& a) {
    check_finite(a, "sigmoid");
    std::vector<double> out(a.numel());
    const auto& av = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-av[i]));
    return make_result(a.shape(), std::move(out), {a},
                       [](const TensorNode& self, GradMap& g) {
                           const auto* dy = grad_of(g, &self);
                           if (!dy) return;
                           auto& da = grad_buf(g, self.inputs[0].get());
                           const auto& y = self.values;
                           for (std::size_t i = 0; i < dy->size(); ++i)
                               da[i] += (*dy)[i] * y[i] * (1.0 - y[i]);
                       });
}

Tensor silu(const Tensor& a) {
    check_finite(a, "silu");
    std::vector<double> out(a.numel());
    const auto& av = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = av[i] / (1.0 + std::exp(-av[i]));
    }
    return make_result(a.shape(), std::move(out), {a},
                       [](const TensorNode& self, GradMap& g) {
                           const auto* dy = grad_of(g, &self);
                           if (!dy) return;
                           auto& da = grad_buf(g, self.inputs[0].get());
                           const auto& x = self.inputs[0]->values;
                           for (std::size_t i = 0; i < dy->size(); ++i) {
                               double s = 1.0 / (1.0 + std::exp(-x[i]));
                               da[i] += (*dy)[i] * s * (1.0 + x[i] * (1.0 - s));
                           }
                       });
}

Tensor softmax_rows(const Tensor& a) {
    check_finite(a, "softmax");
    check(a.shape().size() == 2, ErrorKind::Numeric,
          "softmax: expected 2-D input, got " + shape_str(a.shape()));
    int n = a.rows(), c = a.cols();
    std::vector<double> out(a.numel());
    const auto& av = a.data();
    for (int i = 0; i < n; ++i) {
        const double* row = av.data() + static_cast<std::size_t>(i) * c;
        double* orow = out.data() + static_cast<std::size_t>(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (int j = 0; j < c; ++j) orow[j] /= sum;
    }
    return make_result({n, c}, std::move(out), {a},
                       [n, c](const TensorNode& self, GradMap& g) {
                           const auto* dy = grad_of(g, &self);
                           if (!dy) return;
                           auto& da = grad_buf(g, self.inputs[0].get());
                           const auto& y = self.values;
                           for (int i = 0; i < n; ++i) {
                               const double* yr = y.data() + static_cast<std::size_t>(i) * c;
                               const double* dr = dy->data() + static_cast<std::size_t>(i) * c;
                               double dot = 0.0;
                               for (int j = 0; j < c; ++j) dot += dr[j] * yr[j];
                               double* ar = da.data() + static_cast<std::size_t>(i) * c;
                               for (int j = 0; j < c; ++j) ar[j] += (dr[j] - dot) * yr[j];
                           }
                       });
}

Tensor rms_norm(const Tensor& x, const Tensor& gain, double eps) {
    check_finite(x, "rms_norm");
    check_finite(gain, "rms_norm");
    check(x.shape().size() == 2, ErrorKind::Numeric,
          "rms_norm: expected 2-D input, got " + shape_str(x.shape()));
    int n = x.rows(), d = x.cols();
    check(static_cast<int>(gain.numel()) == d, ErrorKind::Numeric,
          "rms_norm: gain shape " + shape_str(gain.shape()) + " does not match feature dim " +
              std::to_string(d));
    std::vector<double> out(x.numel());
    std::vector<double> rms(static_cast<std::size_t>(n));
    const auto& xv = x.data();
    const auto& gv = gain.data();
    for (int i = 0; i < n; ++i) {
        const double* row = xv.data() + static_cast<std::size_t>(i) * d;
        double sq = 0.0;
        for (int j = 0; j < d; ++j) sq += row[j] * row[j];
        double r = std::sqrt(sq / d + eps);
        rms[static_cast<std::size_t>(i)] = r;
        double* orow = out.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) orow[j] = row[j] / r * gv[static_cast<std::size_t>(j)];
    }
    return make_result(
        x.shape(), std::move(out), {x, gain},
        [n, d, rms = std::move(rms)](const TensorNode& self, GradMap& g) {
            const auto* dy = grad_of(g, &self);
            if (!dy) return;
            const TensorNode* nx = self.inputs[0].get();
            const TensorNode* ng = self.inputs[1].get();
            const auto& xv = nx->values;
            const auto& gv = ng->values;
            bool want_x = nx->requires_grad || nx->backprop;
            bool want_g = ng->requires_grad || ng->backprop;
            std::vector<double>* dxp = want_x ? &grad_buf(g, nx) : nullptr;
            std::vector<double>* dgp = want_g ? &grad_buf(g, ng) : nullptr;
            for (int i = 0; i < n; ++i) {
                std::size_t base = static_cast<std::size_t>(i) * d;
                double r = rms[static_cast<std::size_t>(i)];
                if (dgp) {
                    for (int j = 0; j < d; ++j)
                        (*dgp)[static_cast<std::size_t>(j)] += (*dy)[base + j] * xv[base + j] / r;
                }
                if (dxp) {
                    double dot = 0.0;
                    for (int j = 0; j < d; ++j)
                        dot += (*dy)[base + j] * gv[static_cast<std::size_t>(j)] * xv[base + j];
                    double r3 = r * r * r;
                    for (int j = 0; j < d; ++j) {
                        (*dxp)[base + j] += (*dy)[base + j] * gv[static_cast<std::size_t>(j)] / r -
                                            xv[base + j] * dot / (d * r3);
                    }
                }
            }
        });
}

Tensor dwconv_causal(const Tensor& x, const Tensor& w) {
    check_finite(x, "dwconv");
    check_finite(w, "dwconv");
    check(x.shape().size() == 2 && w.shape().size() == 2, ErrorKind::Numeric,
          "dwconv: expected 2-D input and kernel");
    int L = x.rows(), D = x.cols(), K = w.rows();
    check(w.cols() == D, ErrorKind::Numeric,
          "dwconv: kernel shape " + shape_str(w.shape()) + " does not match input " +
              shape_str(x.shape()));
    std::vector<double> out(x.numel(), 0.0);
    const auto& xv = x.data();
    const auto& wv = w.data();
    for (int l = 0; l < L; ++l) {
        double* orow = out.data() + static_cast<std::size_t>(l) * D;
        for (int k = 0; k < K && k <= l; ++k) {
            const double* xrow = xv.data() + static_cast<std::size_t>(l - k) * D;
            const double* wrow = wv.data() + static_cast<std::size_t>(k) * D;
            for (int j = 0; j < D; ++j) orow[j] += wrow[j] * xrow[j];
        }
    }
    return make_result(
        x.shape(), std::move(out), {x, w}, [L, D, K](const TensorNode& self, GradMap& g) {
            const auto* dy = grad_of(g, &self);
            if (!dy) return;
            const TensorNode* nx = self.inputs[0].get();
            const TensorNode* nw = self.inputs[1].get();
            const auto& xv = nx->values;
            const auto& wv = nw->values;
            if (nx->requires_grad || nx->backprop) {
                auto& dx = grad_buf(g, nx);
                for (int l = 0; l < L; ++l) {
                    double* drow = dx.data() + static_cast<std::size_t>(l) * D;
                    for (int k = 0; k < K && l + k < L; ++k) {
                        const double* grow = dy->data() + static_cast<std::size_t>(l + k) * D;
                        const double* wrow = wv.data() + static_cast<std::size_t>(k) * D;
                        for (int j = 0; j < D; ++j) drow[j] += wrow[j] * grow[j];
                    }
                }
            }
            if (nw->requires_grad || nw->backprop) {
                auto& dw = grad_buf(g, nw);
                for (int k = 0; k < K; ++k) {
                    double* wrow = dw.data() + static_cast<std::size_t>(k) * D;
                    for (int l = k; l < L; ++l) {
                        const double* grow = dy->data() + static_cast<std::size_t>(l) * D;
                        const double* xrow = xv.data() + static_cast<std::size_t>(l - k) * D;
                        for (int j = 0; j < D; ++j) wrow[j] += grow[j] * xrow[j];
                    }
                }
            }
        });
}

Tensor embedding_rows(const Tensor& table, const std::vector<int>& indices) {
    check_finite(table, "embedding");
    check(table.shape().size() == 2, ErrorKind::Numeric, "embedding: table must be 2-D");
    int V = table.rows(), D = table.cols();
    for (int idx : indices) {
        check(idx >= 0 && idx < V, ErrorKind::Numeric,
              "embedding: index " + std::to_string(idx) + " outside table of " +
                  std::to_string(V) + " rows");
    }
    int n = static_cast<int>(indices.size());
    std::vector<double> out(static_cast<std::size_t>(n) * D);
    const auto& tv = table.data();
    for (int i = 0; i < n; ++i) {
        const double* src = tv.data() + static_cast<std::size_t>(indices[static_cast<std::size_t>(i)]) * D;
        std::copy(src, src + D, out.data() + static_cast<std::size_t>(i) * D);
    }
    return make_result({n, D}, std::move(out), {table},
                       [D, indices](const TensorNode& self, GradMap& g) {
                           const auto* dy = grad_of(g, &self);
                           if (!dy) return;
                           auto& dt = grad_buf(g, self.inputs[0].get());
                           for (std::size_t i = 0; i < indices.size(); ++i) {
                               double* dst = dt.data() + static_cast<std::size_t>(indices[i]) * D;
                               const double* src = dy->data() + i * D;
                               for (int j = 0; j < D; ++j) dst[j] += src[j];
                           }
                       });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    check_finite(a, "concat_cols");
    check_finite(b, "concat_cols");
    check(a.shape().size() == 2 && b.shape().size() == 2 && a.rows() == b.rows(),
          ErrorKind::Numeric, "concat_cols: shape mismatch " + shape_str(a.shape()) + " vs " +
                                  shape_str(b.shape()));
    int n = a.rows(), p = a.cols(), q = b.cols();
    std::vector<double> out(static_cast<std::size_t>(n) * (p + q));
    const auto& av = a.data();
    const auto& bv = b.data();
    for (int i = 0; i < n; ++i) {
        std::copy(av.data() + static_cast<std::size_t>(i) * p,
                  av.data() + static_cast<std::size_t>(i + 1) * p,
                  out.data() + static_cast<std::size_t>(i) * (p + q));
        std::copy(bv.data() + static_cast<std::size_t>(i) * q,
                  bv.data() + static_cast<std::size_t>(i + 1) * q,
                  out.data() + static_cast<std::size_t>(i) * (p + q) + p);
    }
    return make_result({n, p + q}, std::move(out), {a, b},
                       [n, p, q](const TensorNode& self, GradMap& g) {
                           const auto* dy = grad_of(g, &self);
                           if (!dy) return;
                           const TensorNode* na = self.inputs[0].get();
                           const TensorNode* nb = self.inputs[1].get();
                           if (na->requires_grad || na->backprop) {
                               auto& da = grad_buf(g, na);
                               for (int i = 0; i < n; ++i)
                                   for (int j = 0; j < p; ++j)
                                       da[static_cast<std::size_t>(i) * p + j] +=
                                           (*dy)[static_cast<std::size_t>(i) * (p + q) + j];
                           }
                           if (nb->requires_grad || nb->backprop) {
                               auto& db = grad_buf(g, nb);
                               for (int i = 0; i < n; ++i)
                                   for (int j = 0; j < q; ++j)
                                       db[static_cast<std::size_t>(i) * q + j] +=
                                           (*dy)[static_cast<std::size_t>(i) * (p + q) + p + j];
                           }
                       });
}

Tensor slice_cols(const Tensor& x, int c0, int c1) {
    check_finite(x, "slice_cols");
    check(x.shape().size() == 2 && c0 >= 0 && c1 <= x.cols() && c0 < c1, ErrorKind::Numeric,
          "slice_cols: bad range");
    int n = x.rows(), d = x.cols(), w = c1 - c0;
    std::vector<double> out(static_cast<std::size_t>(n) * w);
    const auto& xv = x.data();
    for (int i = 0; i < n; ++i)
        std::copy(xv.data() + static_cast<std::size_t>(i) * d + c0,
                  xv.data() + static_cast<std::size_t>(i) * d + c1,
                  out.data() + static_cast<std::size_t>(i) * w);
    return make_result({n, w}, std::move(out), {x},
                       [n, d, w, c0](const TensorNode& self, GradMap& g) {
                           const auto* dy = grad_of(g, &self);
                           if (!dy) return;
                           auto& dx = grad_buf(g, self.inputs[0].get());
                           for (int i = 0; i < n; ++i)
                               for (int j = 0; j < w; ++j)
                                   dx[static_cast<std::size_t>(i) * d + c0 + j] +=
                                       (*dy)[static_cast<std::size_t>(i) * w + j];
                       });
}

Tensor slice_rows(const Tensor& x, int r0, int r1) {
    check_finite(x, "slice_rows");
    check(x.shape().size() == 2 && r0 >= 0 && r1 <= x.rows() && r0 < r1, ErrorKind::Numeric,
          "slice_rows: bad range");
    int d = x.cols(), h = r1 - r0;
    std::vector<double> out(static_cast<std::size_t>(h) * d);
    const auto& xv = x.data();
    std::copy(xv.data() + static_cast<std::size_t>(r0) * d,
              xv.data() + static_cast<std::size_t>(r1) * d, out.data());
    return make_result({h, d}, std::move(out), {x},
                       [d, h, r0](const TensorNode& self, GradMap& g) {
                           const auto* dy = grad_of(g, &self);
                           if (!dy) return;
                           auto& dx = grad_buf(g, self.inputs[0].get());
                           for (std::size_t i = 0; i < static_cast<std::size_t>(h) * d; ++i)
                               dx[static_cast<std::size_t>(r0) * d + i] += (*dy)[i];
                       });
}

Tensor sum_all(const Tensor& x) {
    check_finite(x, "sum_all");
    double s = 0.0;
    for (double v : x.data()) s += v;
    return make_result({1}, {s}, {x}, [](const TensorNode& self, GradMap& g) {
        const auto* dy = grad_of(g, &self);
        if (!dy) return;
        auto& dx = grad_buf(g, self.inputs[0].get());
        for (double& v : dx) v += (*dy)[0];
    });
}

Tensor mask_rows(const Tensor& x, const std::vector<std::uint8_t>& mask) {
    check_finite(x, "mask_rows");
    check(x.shape().size() == 2 && mask.size() == static_cast<std::size_t>(x.rows()),
          ErrorKind::Numeric, "mask_rows: mask length does not match rows");
    int n = x.rows(), d = x.cols();
    std::vector<double> out(x.numel(), 0.0);
    const auto& xv = x.data();
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<std::size_t>(i)]) continue;
        std::copy(xv.data() + static_cast<std::size_t>(i) * d,
                  xv.data() + static_cast<std::size_t>(i + 1) * d,
                  out.data() + static_cast<std::size_t>(i) * d);
    }
    return make_result(x.shape(), std::move(out), {x},
                       [mask, d](const TensorNode& self, GradMap& g) {
                           const auto* dy = grad_of(g, &self);
                           if (!dy) return;
                           auto& dx = grad_buf(g, self.inputs[0].get());
                           for (std::size_t i = 0; i < mask.size(); ++i) {
                               if (!mask[i]) continue;
                               for (int j = 0; j < d; ++j)
                                   dx[i * d + j] += (*dy)[i * d + j];
                           }
                       });
}

Tensor mse_masked(const Tensor& pred, const Tensor& target,
                  const std::vector<std::uint8_t>& row_mask) {
    check_finite(pred, "mse");
    check_finite(target, "mse");
    check_shapes_equal(pred, target, "mse");
    check(pred.shape().size() == 2 && row_mask.size() == static_cast<std::size_t>(pred.rows()),
          ErrorKind::Numeric, "mse: mask length does not match rows");
    int n = pred.rows(), d = pred.cols();
    std::size_t n_valid = 0;
    for (auto m : row_mask) n_valid += m ? 1 : 0;
    check(n_valid > 0, ErrorKind::Numeric, "mse: empty row mask");
    double denom = static_cast<double>(n_valid) * d;
    const auto& pv = pred.data();
    const auto& tv = target.data();
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!row_mask[static_cast<std::size_t>(i)]) continue;
        for (int j = 0; j < d; ++j) {
            double e = pv[static_cast<std::size_t>(i) * d + j] -
                       tv[static_cast<std::size_t>(i) * d + j];
            loss += e * e;
        }
    }
    return make_result(
        {1}, {loss / denom}, {pred, target},
        [row_mask, d, denom](const TensorNode& self, GradMap& g) {
            const auto* dy = grad_of(g, &self);
            if (!dy) return;
            const TensorNode* np = self.inputs[0].get();
            const TensorNode* nt = self.inputs[1].get();
            const auto& pv = np->values;
            const auto& tv = nt->values;
            double c = 2.0 * (*dy)[0] / denom;
            if (np->requires_grad || np->backprop) {
                auto& dp = grad_buf(g, np);
                for (std::size_t i = 0; i < row_mask.size(); ++i) {
                    if (!row_mask[i]) continue;
                    for (int j = 0; j < d; ++j)
                        dp[i * d + j] += c * (pv[i * d + j] - tv[i * d + j]);
                }
            }
            if (nt->requires_grad || nt->backprop) {
                auto& dt = grad_buf(g, nt);
                for (std::size_t i = 0; i < row_mask.size(); ++i) {
                    if (!row_mask[i]) continue;
                    for (int j = 0; j < d; ++j)
                        dt[i * d + j] -= c * (pv[i * d + j] - tv[i * d + j]);
                }
            }
        });
}

Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets,
                          const std::vector<std::uint8_t>& row_mask) {
    check_finite(logits, "cross_entropy");
    check(logits.shape().size() == 2, ErrorKind::Numeric, "cross_entropy: logits must be 2-D");
    int n = logits.rows(), c = logits.cols();
    check(targets.size() == static_cast<std::size_t>(n) &&
              row_mask.size() == static_cast<std::size_t>(n),
          ErrorKind::Numeric, "cross_entropy: targets/mask length does not match rows");
    std::size_t n_valid = 0;
    for (std::size_t i = 0; i < row_mask.size(); ++i) {
        if (!row_mask[i]) continue;
        ++n_valid;
        check(targets[i] >= 0 && targets[i] < c, ErrorKind::Numeric,
              "cross_entropy: target class out of range");
    }
    check(n_valid > 0, ErrorKind::Numeric, "cross_entropy: empty row mask");
    const auto& lv = logits.data();
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!row_mask[static_cast<std::size_t>(i)]) continue;
        const double* row = lv.data() + static_cast<std::size_t>(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
        loss += mx + std::log(sum) - row[targets[static_cast<std::size_t>(i)]];
    }
    double inv = 1.0 / static_cast<double>(n_valid);
    return make_result(
        {1}, {loss * inv}, {logits},
        [targets, row_mask, c, inv](const TensorNode& self, GradMap& g) {
            const auto* dy = grad_of(g, &self);
            if (!dy) return;
            auto& dl = grad_buf(g, self.inputs[0].get());
            const auto& lv = self.inputs[0]->values;
            double scale = (*dy)[0] * inv;
            for (std::size_t i = 0; i < row_mask.size(); ++i) {
                if (!row_mask[i]) continue;
                const double* row = lv.data() + i * c;
                double mx = row[0];
                for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
                double sum = 0.0;
                for (int j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
                double* drow = dl.data() + i * c;
                for (int j = 0; j < c; ++j) {
                    double p = std::exp(row[j] - mx) / sum;
                    drow[j] += scale * (p - (j == targets[i] ? 1.0 : 0.0));
                }
            }
        });
}

Tensor linear_scan(const Tensor& A, const Tensor& B, const Tensor& X) {
    check_finite(A, "linear_scan");
    check_finite(B, "linear_scan");
    check_finite(X, "linear_scan");
    check_shapes_equal(A, B, "linear_scan");
    check_shapes_equal(A, X, "linear_scan");
    check(A.shape().size() == 2, ErrorKind::Numeric, "linear_scan: expected 2-D inputs");
    int L = A.rows(), D = A.cols();
    std::vector<double> out(A.numel(), 0.0);
    const auto& av = A.data();
    const auto& bv = B.data();
    const auto& xv = X.data();
    for (int k = 1; k < L; ++k) {
        const double* sp = out.data() + static_cast<std::size_t>(k - 1) * D;
        const double* ap = av.data() + static_cast<std::size_t>(k - 1) * D;
        const double* bp = bv.data() + static_cast<std::size_t>(k - 1) * D;
        const double* xp = xv.data() + static_cast<std::size_t>(k - 1) * D;
        double* sn = out.data() + static_cast<std::size_t>(k) * D;
        for (int j = 0; j < D; ++j) sn[j] = ap[j] * sp[j] + bp[j] * xp[j];
    }
    return make_result(
        A.shape(), std::move(out), {A, B, X}, [L, D](const TensorNode& self, GradMap& g) {
            const auto* dyv = grad_of(g, &self);
            if (!dyv) return;
            const TensorNode* na = self.inputs[0].get();
            const TensorNode* nb = self.inputs[1].get();
            const TensorNode* nx = self.inputs[2].get();
            const auto& av = na->values;
            const auto& bv = nb->values;
            const auto& xv = nx->values;
            const auto& sv = self.values;
            bool want_a = na->requires_grad || na->backprop;
            bool want_b = nb->requires_grad || nb->backprop;
            bool want_x = nx->requires_grad || nx->backprop;
            std::vector<double>* da = want_a ? &grad_buf(g, na) : nullptr;
            std::vector<double>* db = want_b ? &grad_buf(g, nb) : nullptr;
            std::vector<double>* dx = want_x ? &grad_buf(g, nx) : nullptr;
            // adjoint recurrence: lambda_k = dS[k] + A[k] (.) lambda_{k+1}
            std::vector<double> lambda(dyv->begin() + static_cast<std::ptrdiff_t>(
                                                          static_cast<std::size_t>(L - 1) * D),
                                       dyv->end());
            for (int k = L - 2; k >= 0; --k) {
                std::size_t row = static_cast<std::size_t>(k) * D;
                for (int j = 0; j < D; ++j) {
                    double lam = lambda[static_cast<std::size_t>(j)];
                    if (da) (*da)[row + j] += lam * sv[row + j];
                    if (db) (*db)[row + j] += lam * xv[row + j];
                    if (dx) (*dx)[row + j] += lam * bv[row + j];
                    lambda[static_cast<std::size_t>(j)] =
                        (*dyv)[row + j] + av[row + j] * lam;
                }
            }
        });
}

}  // namespace gfcad
