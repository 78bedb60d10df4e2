// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#include "argcore/tensor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "argcore/errors.hpp"

namespace argcore {

namespace {

thread_local bool g_grad_enabled = true;

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

void validate_shape(const std::vector<int>& shape) {
    for (int d : shape) {
        if (d <= 0) throw DimensionError("non-positive dimension in shape " + format_shape(shape));
    }
}

void check_finite(const std::vector<double>& data, const char* where) {
    for (double v : data) {
        if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + where);
    }
}

#ifndef NDEBUG
constexpr bool kDebugChecks = true;
#else
constexpr bool kDebugChecks = false;
#endif

void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->shape != b->shape) {
        throw DimensionError(std::string(op) + ": shape mismatch " + format_shape(a->shape) + " vs " +
                             format_shape(b->shape));
    }
}

void require_rank(const TensorPtr& t, std::size_t rank, const char* op) {
    if (t->shape.size() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                             format_shape(t->shape));
    }
}

}  // namespace

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set(bool on) { g_grad_enabled = on; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

namespace testing {
bool corrupt_relu_backward = false;
}

std::string format_shape(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

double canonical_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += t;
    return acc;
}

TensorPtr Tensor::create(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    validate_shape(shape);
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
        throw DimensionError("data length " + std::to_string(data.size()) + " does not match shape " +
                             format_shape(shape));
    }
    check_finite(data, "tensor construction");
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(data);
    t->requires_grad = requires_grad;
    if (requires_grad) t->grad.assign(t->data.size(), 0.0);
    return t;
}

TensorPtr Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    const auto n = shape_numel(shape);
    return create(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0), requires_grad);
}

TensorPtr Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    const auto n = shape_numel(shape);
    return create(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value), requires_grad);
}

TensorPtr Tensor::scalar(double value, bool requires_grad) {
    return create({1}, {value}, requires_grad);
}

TensorPtr Tensor::from_op(std::vector<int> shape, std::vector<double> data, std::vector<TensorPtr> parents,
                          std::function<void(const Tensor&)> backward) {
    validate_shape(shape);
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
        throw DimensionError("op result length does not match shape " + format_shape(shape));
    }
    if (kDebugChecks) check_finite(data, "op result");
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(data);
    bool track = false;
    if (g_grad_enabled) {
        for (const auto& p : parents) {
            if (p->requires_grad) {
                track = true;
                break;
            }
        }
    }
    if (track) {
        t->requires_grad = true;
        t->parents_ = std::move(parents);
        t->backward_fn_ = std::move(backward);
    }
    return t;
}

double Tensor::value() const {
    if (numel() != 1) throw DimensionError("value() requires a scalar, got " + format_shape(shape));
    return data[0];
}

void Tensor::zero_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    else std::fill(grad.begin(), grad.end(), 0.0);
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::backward() {
    if (numel() != 1) throw DimensionError("backward() requires a scalar loss, got " + format_shape(shape));
    if (!requires_grad) return;

    // Iterative DFS for a topological order over recorded parents.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    struct Frame {
        Tensor* node;
        std::size_t next;
    };
    std::vector<Frame> stack;
    stack.push_back({this, 0});
    visited.insert(this);
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.node->parents_.size()) {
            Tensor* p = f.node->parents_[f.next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    for (Tensor* n : order) n->ensure_grad();
    grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* n = *it;
        if (n->backward_fn_) n->backward_fn_(*n);
    }
}

// ---------------------------------------------------------------------------
// elementwise / structural
// ---------------------------------------------------------------------------

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + b->data[i];
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    return Tensor::from_op(a->shape, std::move(out), {a, b}, [pa, pb](const Tensor& self) {
        if (pa->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
        if (pb->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i];
    });
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] - b->data[i];
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    return Tensor::from_op(a->shape, std::move(out), {a, b}, [pa, pb](const Tensor& self) {
        if (pa->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
        if (pb->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
    });
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * b->data[i];
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    return Tensor::from_op(a->shape, std::move(out), {a, b}, [pa, pb](const Tensor& self) {
        if (pa->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * pb->data[i];
        if (pb->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i] * pa->data[i];
    });
}

TensorPtr scale(const TensorPtr& a, double c) {
    if (!std::isfinite(c)) throw NumericError("scale: non-finite factor");
    std::vector<double> out(a->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * c;
    Tensor* pa = a.get();
    return Tensor::from_op(a->shape, std::move(out), {a}, [pa, c](const Tensor& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * c;
    });
}

TensorPtr relu(const TensorPtr& x) {
    std::vector<double> out(x->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
    Tensor* px = x.get();
    return Tensor::from_op(x->shape, std::move(out), {x}, [px](const Tensor& self) {
        const double k = testing::corrupt_relu_backward ? 2.0 : 1.0;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (px->data[i] > 0.0) px->grad[i] += k * self.grad[i];
        }
    });
}

TensorPtr reshape(const TensorPtr& x, std::vector<int> new_shape) {
    validate_shape(new_shape);
    if (shape_numel(new_shape) != x->numel()) {
        throw DimensionError("reshape: cannot view " + format_shape(x->shape) + " as " + format_shape(new_shape));
    }
    Tensor* px = x.get();
    return Tensor::from_op(std::move(new_shape), x->data, {x}, [px](const Tensor& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i];
    });
}

TensorPtr transpose(const TensorPtr& x) {
    require_rank(x, 2, "transpose");
    const int r = x->dim(0), c = x->dim(1);
    std::vector<double> out(static_cast<std::size_t>(r) * c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[static_cast<std::size_t>(j) * r + i] = x->at(i, j);
    Tensor* px = x.get();
    return Tensor::from_op({c, r}, std::move(out), {x}, [px, r, c](const Tensor& self) {
        for (int j = 0; j < c; ++j)
            for (int i = 0; i < r; ++i) px->grad[static_cast<std::size_t>(i) * c + j] += self.at(j, i);
    });
}

TensorPtr concat_cols(const TensorPtr& a, const TensorPtr& b) {
    require_rank(a, 2, "concat_cols");
    require_rank(b, 2, "concat_cols");
    if (a->dim(0) != b->dim(0)) {
        throw DimensionError("concat_cols: row mismatch " + format_shape(a->shape) + " vs " + format_shape(b->shape));
    }
    const int n = a->dim(0), da = a->dim(1), db = b->dim(1);
    std::vector<double> out(static_cast<std::size_t>(n) * (da + db));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < da; ++j) out[static_cast<std::size_t>(i) * (da + db) + j] = a->at(i, j);
        for (int j = 0; j < db; ++j) out[static_cast<std::size_t>(i) * (da + db) + da + j] = b->at(i, j);
    }
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    return Tensor::from_op({n, da + db}, std::move(out), {a, b}, [pa, pb, n, da, db](const Tensor& self) {
        for (int i = 0; i < n; ++i) {
            if (pa->requires_grad)
                for (int j = 0; j < da; ++j) pa->grad[static_cast<std::size_t>(i) * da + j] += self.at(i, j);
            if (pb->requires_grad)
                for (int j = 0; j < db; ++j) pb->grad[static_cast<std::size_t>(i) * db + j] += self.at(i, da + j);
        }
    });
}

TensorPtr concat_rows(const std::vector<TensorPtr>& rows) {
    if (rows.empty()) throw DimensionError("concat_rows: empty input");
    const int d = rows[0]->dim(1);
    int total = 0;
    for (const auto& r : rows) {
        require_rank(r, 2, "concat_rows");
        if (r->dim(1) != d) {
            throw DimensionError("concat_rows: column mismatch " + format_shape(rows[0]->shape) + " vs " +
                                 format_shape(r->shape));
        }
        total += r->dim(0);
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(total) * d);
    for (const auto& r : rows) out.insert(out.end(), r->data.begin(), r->data.end());
    std::vector<Tensor*> raw;
    raw.reserve(rows.size());
    for (const auto& r : rows) raw.push_back(r.get());
    return Tensor::from_op({total, d}, std::move(out), rows, [raw, d](const Tensor& self) {
        std::size_t off = 0;
        for (Tensor* p : raw) {
            const std::size_t n = p->data.size();
            if (p->requires_grad)
                for (std::size_t i = 0; i < n; ++i) p->grad[i] += self.grad[off + i];
            off += n;
        }
        (void)d;
    });
}

TensorPtr sum_all(const TensorPtr& x) {
    double acc = 0.0;
    for (double v : x->data) acc += v;
    Tensor* px = x.get();
    return Tensor::from_op({1}, {acc}, {x}, [px](const Tensor& self) {
        for (std::size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += self.grad[0];
    });
}

// ---------------------------------------------------------------------------
// matrix / reduction
// ---------------------------------------------------------------------------

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    if (a->dim(1) != b->dim(0)) {
        throw DimensionError("matmul: inner dimensions differ, " + format_shape(a->shape) + " vs " +
                             format_shape(b->shape));
    }
    const int m = a->dim(0), k = a->dim(1), n = b->dim(1);
    std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const double av = a->at(i, p);
            if (av == 0.0) continue;
            const double* brow = &b->data[static_cast<std::size_t>(p) * n];
            double* orow = &out[static_cast<std::size_t>(i) * n];
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    return Tensor::from_op({m, n}, std::move(out), {a, b}, [pa, pb, m, k, n](const Tensor& self) {
        if (pa->requires_grad) {
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j) acc += self.at(i, j) * pb->data[static_cast<std::size_t>(p) * n + j];
                    pa->grad[static_cast<std::size_t>(i) * k + p] += acc;
                }
        }
        if (pb->requires_grad) {
            for (int p = 0; p < k; ++p)
                for (int j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < m; ++i) acc += pa->data[static_cast<std::size_t>(i) * k + p] * self.at(i, j);
                    pb->grad[static_cast<std::size_t>(p) * n + j] += acc;
                }
        }
    });
}

TensorPtr graph_matmul(const TensorPtr& g, const TensorPtr& z) {
    require_rank(g, 2, "graph_matmul");
    require_rank(z, 2, "graph_matmul");
    if (g->dim(1) != z->dim(0)) {
        throw DimensionError("graph_matmul: inner dimensions differ, " + format_shape(g->shape) + " vs " +
                             format_shape(z->shape));
    }
    const int m = g->dim(0), k = g->dim(1), n = z->dim(1);
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            terms.clear();
            for (int p = 0; p < k; ++p) terms.push_back(g->at(i, p) * z->at(p, j));
            out[static_cast<std::size_t>(i) * n + j] = canonical_sum(terms);
        }
    }
    Tensor* pg = g.get();
    Tensor* pz = z.get();
    return Tensor::from_op({m, n}, std::move(out), {g, z}, [pg, pz, m, k, n](const Tensor& self) {
        if (pg->requires_grad) {
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j) acc += self.at(i, j) * pz->data[static_cast<std::size_t>(p) * n + j];
                    pg->grad[static_cast<std::size_t>(i) * k + p] += acc;
                }
        }
        if (pz->requires_grad) {
            for (int p = 0; p < k; ++p)
                for (int j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < m; ++i) acc += pg->data[static_cast<std::size_t>(i) * k + p] * self.at(i, j);
                    pz->grad[static_cast<std::size_t>(p) * n + j] += acc;
                }
        }
    });
}

TensorPtr add_rowvec(const TensorPtr& m, const TensorPtr& v) {
    require_rank(m, 2, "add_rowvec");
    require_rank(v, 2, "add_rowvec");
    if (v->dim(0) != 1 || v->dim(1) != m->dim(1)) {
        throw DimensionError("add_rowvec: expected [1x" + std::to_string(m->dim(1)) + "], got " +
                             format_shape(v->shape));
    }
    const int n = m->dim(0), d = m->dim(1);
    std::vector<double> out(m->data.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(i) * d + j] = m->at(i, j) + v->at(0, j);
    Tensor* pm = m.get();
    Tensor* pv = v.get();
    return Tensor::from_op(m->shape, std::move(out), {m, v}, [pm, pv, n, d](const Tensor& self) {
        if (pm->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pm->grad[i] += self.grad[i];
        if (pv->requires_grad) {
            for (int j = 0; j < d; ++j) {
                double acc = 0.0;
                for (int i = 0; i < n; ++i) acc += self.at(i, j);
                pv->grad[static_cast<std::size_t>(j)] += acc;
            }
        }
    });
}

TensorPtr sub_colvec(const TensorPtr& m, const TensorPtr& c) {
    require_rank(m, 2, "sub_colvec");
    require_rank(c, 2, "sub_colvec");
    if (c->dim(0) != m->dim(0) || c->dim(1) != 1) {
        throw DimensionError("sub_colvec: expected [" + std::to_string(m->dim(0)) + "x1], got " +
                             format_shape(c->shape));
    }
    const int n = m->dim(0), d = m->dim(1);
    std::vector<double> out(m->data.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(i) * d + j] = m->at(i, j) - c->at(i, 0);
    Tensor* pm = m.get();
    Tensor* pc = c.get();
    return Tensor::from_op(m->shape, std::move(out), {m, c}, [pm, pc, n, d](const Tensor& self) {
        if (pm->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) pm->grad[i] += self.grad[i];
        if (pc->requires_grad) {
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int j = 0; j < d; ++j) acc += self.at(i, j);
                pc->grad[static_cast<std::size_t>(i)] -= acc;
            }
        }
    });
}

TensorPtr row_sum(const TensorPtr& x) {
    require_rank(x, 2, "row_sum");
    const int n = x->dim(0), d = x->dim(1);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += x->at(i, j);
        out[static_cast<std::size_t>(i)] = acc;
    }
    Tensor* px = x.get();
    return Tensor::from_op({n, 1}, std::move(out), {x}, [px, n, d](const Tensor& self) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) px->grad[static_cast<std::size_t>(i) * d + j] += self.at(i, 0);
    });
}

TensorPtr row_inv_norm_guarded(const TensorPtr& x, double var_eps) {
    require_rank(x, 2, "row_inv_norm_guarded");
    const int n = x->dim(0), d = x->dim(1);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double ss = 0.0;
        for (int j = 0; j < d; ++j) ss += x->at(i, j) * x->at(i, j);
        out[static_cast<std::size_t>(i)] = (ss / d < var_eps) ? 0.0 : 1.0 / std::sqrt(ss);
    }
    Tensor* px = x.get();
    return Tensor::from_op({n, 1}, std::move(out), {x}, [px, n, d](const Tensor& self) {
        for (int i = 0; i < n; ++i) {
            const double inv = self.at(i, 0);
            if (inv == 0.0) continue;
            const double k = -inv * inv * inv * self.grad[static_cast<std::size_t>(i)];
            for (int j = 0; j < d; ++j)
                px->grad[static_cast<std::size_t>(i) * d + j] += k * px->data[static_cast<std::size_t>(i) * d + j];
        }
    });
}

TensorPtr pairwise_sad(const TensorPtr& x) {
    require_rank(x, 2, "pairwise_sad");
    const int n = x->dim(0), d = x->dim(1);
    std::vector<double> out(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += std::abs(x->at(i, k) - x->at(j, k));
            out[static_cast<std::size_t>(i) * n + j] = acc;
        }
    Tensor* px = x.get();
    return Tensor::from_op({n, n}, std::move(out), {x}, [px, n, d](const Tensor& self) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double g = self.at(i, j);
                if (g == 0.0) continue;
                for (int k = 0; k < d; ++k) {
                    const double diff = px->data[static_cast<std::size_t>(i) * d + k] -
                                        px->data[static_cast<std::size_t>(j) * d + k];
                    const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                    px->grad[static_cast<std::size_t>(i) * d + k] += g * s;
                    px->grad[static_cast<std::size_t>(j) * d + k] -= g * s;
                }
            }
    });
}

TensorPtr maxpool_rows(const TensorPtr& x) {
    require_rank(x, 2, "maxpool_rows");
    const int n = x->dim(0), d = x->dim(1);
    std::vector<double> out(static_cast<std::size_t>(d));
    std::vector<int> arg(static_cast<std::size_t>(d), 0);
    for (int j = 0; j < d; ++j) {
        double best = x->at(0, j);
        int bi = 0;
        for (int i = 1; i < n; ++i) {
            if (x->at(i, j) > best) {
                best = x->at(i, j);
                bi = i;
            }
        }
        out[static_cast<std::size_t>(j)] = best;
        arg[static_cast<std::size_t>(j)] = bi;
    }
    Tensor* px = x.get();
    return Tensor::from_op({1, d}, std::move(out), {x}, [px, d, arg = std::move(arg)](const Tensor& self) {
        for (int j = 0; j < d; ++j)
            px->grad[static_cast<std::size_t>(arg[static_cast<std::size_t>(j)]) * d + j] += self.at(0, j);
    });
}

TensorPtr meanpool_rows(const TensorPtr& x) {
    require_rank(x, 2, "meanpool_rows");
    const int n = x->dim(0), d = x->dim(1);
    std::vector<double> out(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(j)] += x->at(i, j);
    for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(j)] /= n;
    Tensor* px = x.get();
    return Tensor::from_op({1, d}, std::move(out), {x}, [px, n, d](const Tensor& self) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) px->grad[static_cast<std::size_t>(i) * d + j] += self.at(0, j) / n;
    });
}

// ---------------------------------------------------------------------------
// neural ops
// ---------------------------------------------------------------------------

TensorPtr conv2d(const TensorPtr& input, const TensorPtr& kernels, int stride, int padding) {
    require_rank(input, 3, "conv2d input");
    require_rank(kernels, 4, "conv2d kernels");
    if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
    if (padding < 0) throw ConfigError("conv2d: padding must be >= 0");
    const int cin = input->dim(0), h = input->dim(1), w = input->dim(2);
    const int cout = kernels->dim(0), kcin = kernels->dim(1), kh = kernels->dim(2), kw = kernels->dim(3);
    if (kcin != cin) {
        throw DimensionError("conv2d: kernel channels " + format_shape(kernels->shape) + " do not match input " +
                             format_shape(input->shape));
    }
    if (kh > h + 2 * padding || kw > w + 2 * padding) {
        throw ConfigError("conv2d: kernel " + format_shape(kernels->shape) + " larger than padded input " +
                          format_shape(input->shape) + " with padding " + std::to_string(padding));
    }
    const int oh = (h + 2 * padding - kh) / stride + 1;
    const int ow = (w + 2 * padding - kw) / stride + 1;

    std::vector<double> out(static_cast<std::size_t>(cout) * oh * ow, 0.0);
    for (int co = 0; co < cout; ++co) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (int ci = 0; ci < cin; ++ci) {
                    for (int ky = 0; ky < kh; ++ky) {
                        const int iy = oy * stride - padding + ky;
                        if (iy < 0 || iy >= h) continue;
                        const double* irow = &input->data[(static_cast<std::size_t>(ci) * h + iy) * w];
                        const double* krow = &kernels->data[((static_cast<std::size_t>(co) * cin + ci) * kh + ky) * kw];
                        for (int kx = 0; kx < kw; ++kx) {
                            const int ix = ox * stride - padding + kx;
                            if (ix < 0 || ix >= w) continue;
                            acc += irow[ix] * krow[kx];
                        }
                    }
                }
                out[(static_cast<std::size_t>(co) * oh + oy) * ow + ox] = acc;
            }
        }
    }
    Tensor* pin = input.get();
    Tensor* pk = kernels.get();
    return Tensor::from_op(
        {cout, oh, ow}, std::move(out), {input, kernels},
        [pin, pk, cin, h, w, cout, kh, kw, oh, ow, stride, padding](const Tensor& self) {
            for (int co = 0; co < cout; ++co) {
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox) {
                        const double g = self.grad[(static_cast<std::size_t>(co) * oh + oy) * ow + ox];
                        if (g == 0.0) continue;
                        for (int ci = 0; ci < cin; ++ci) {
                            for (int ky = 0; ky < kh; ++ky) {
                                const int iy = oy * stride - padding + ky;
                                if (iy < 0 || iy >= h) continue;
                                for (int kx = 0; kx < kw; ++kx) {
                                    const int ix = ox * stride - padding + kx;
                                    if (ix < 0 || ix >= w) continue;
                                    const std::size_t ii = (static_cast<std::size_t>(ci) * h + iy) * w + ix;
                                    const std::size_t ki =
                                        ((static_cast<std::size_t>(co) * cin + ci) * kh + ky) * kw + kx;
                                    if (pin->requires_grad) pin->grad[ii] += g * pk->data[ki];
                                    if (pk->requires_grad) pk->grad[ki] += g * pin->data[ii];
                                }
                            }
                        }
                    }
                }
            }
        });
}

TensorPtr add_channel_bias(const TensorPtr& x, const TensorPtr& bias) {
    require_rank(x, 3, "add_channel_bias");
    if (bias->shape != std::vector<int>{x->dim(0)}) {
        throw DimensionError("add_channel_bias: expected [" + std::to_string(x->dim(0)) + "], got " +
                             format_shape(bias->shape));
    }
    const int c = x->dim(0), hw = x->dim(1) * x->dim(2);
    std::vector<double> out(x->data.size());
    for (int ci = 0; ci < c; ++ci) {
        const double b = bias->at(ci);
        for (int i = 0; i < hw; ++i) out[static_cast<std::size_t>(ci) * hw + i] = x->data[static_cast<std::size_t>(ci) * hw + i] + b;
    }
    Tensor* px = x.get();
    Tensor* pb = bias.get();
    return Tensor::from_op(x->shape, std::move(out), {x, bias}, [px, pb, c, hw](const Tensor& self) {
        if (px->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i];
        if (pb->requires_grad) {
            for (int ci = 0; ci < c; ++ci) {
                double acc = 0.0;
                for (int i = 0; i < hw; ++i) acc += self.grad[static_cast<std::size_t>(ci) * hw + i];
                pb->grad[static_cast<std::size_t>(ci)] += acc;
            }
        }
    });
}

namespace {

// Shared softmax kernel; mask == nullptr means all entries active.
TensorPtr softmax_impl(const TensorPtr& x, const Tensor* mask, const TensorPtr& mask_hold) {
    require_rank(x, 2, "row_softmax");
    const int n = x->dim(0), d = x->dim(1);
    std::vector<double> out(x->data.size(), 0.0);
    std::vector<double> terms;
    for (int i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        int active = 0;
        for (int j = 0; j < d; ++j) {
            if (mask && mask->at(i, j) < 0.5) continue;
            ++active;
            if (x->at(i, j) > mx) mx = x->at(i, j);
        }
        // every row keeps at least one active entry: self-relations stay unmasked
        if (mask) assert(active > 0);
        (void)active;
        terms.clear();
        for (int j = 0; j < d; ++j) {
            if (mask && mask->at(i, j) < 0.5) continue;
            terms.push_back(std::exp(x->at(i, j) - mx));
        }
        std::vector<double> sorted = terms;
        const double denom = canonical_sum(sorted);
        int t = 0;
        for (int j = 0; j < d; ++j) {
            if (mask && mask->at(i, j) < 0.5) continue;
            out[static_cast<std::size_t>(i) * d + j] = terms[static_cast<std::size_t>(t++)] / denom;
        }
    }
    Tensor* px = x.get();
    std::vector<TensorPtr> parents = {x};
    if (mask_hold) parents.push_back(mask_hold);
    std::vector<double> probs = out;
    return Tensor::from_op(x->shape, std::move(out), std::move(parents),
                           [px, n, d, probs = std::move(probs)](const Tensor& self) {
                               for (int i = 0; i < n; ++i) {
                                   double dot = 0.0;
                                   for (int j = 0; j < d; ++j)
                                       dot += self.at(i, j) * probs[static_cast<std::size_t>(i) * d + j];
                                   for (int j = 0; j < d; ++j) {
                                       const double y = probs[static_cast<std::size_t>(i) * d + j];
                                       if (y == 0.0) continue;
                                       px->grad[static_cast<std::size_t>(i) * d + j] += y * (self.at(i, j) - dot);
                                   }
                               }
                           });
}

}  // namespace

TensorPtr row_softmax(const TensorPtr& x) { return softmax_impl(x, nullptr, nullptr); }

TensorPtr masked_row_softmax(const TensorPtr& x, const TensorPtr& mask) {
    require_same_shape(x, mask, "masked_row_softmax");
    return softmax_impl(x, mask.get(), mask);
}

TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& labels) {
    require_rank(logits, 2, "cross_entropy");
    const int m = logits->dim(0), c = logits->dim(1);
    if (static_cast<int>(labels.size()) != m) {
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(m) +
                             " rows");
    }
    for (int i = 0; i < m; ++i) {
        if (labels[static_cast<std::size_t>(i)] < 0 || labels[static_cast<std::size_t>(i)] >= c) {
            throw DataError("cross_entropy: row " + std::to_string(i) + " label " +
                            std::to_string(labels[static_cast<std::size_t>(i)]) + " outside [0," + std::to_string(c) +
                            ")");
        }
    }
    std::vector<double> probs(logits->data.size());
    double loss = 0.0;
    for (int i = 0; i < m; ++i) {
        double mx = logits->at(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, logits->at(i, j));
        double denom = 0.0;
        for (int j = 0; j < c; ++j) denom += std::exp(logits->at(i, j) - mx);
        const double lse = mx + std::log(denom);
        loss += lse - logits->at(i, labels[static_cast<std::size_t>(i)]);
        for (int j = 0; j < c; ++j)
            probs[static_cast<std::size_t>(i) * c + j] = std::exp(logits->at(i, j) - mx) / denom;
    }
    loss /= m;
    Tensor* pl = logits.get();
    return Tensor::from_op({1}, {loss}, {logits},
                           [pl, m, c, labels, probs = std::move(probs)](const Tensor& self) {
                               const double g = self.grad[0] / m;
                               for (int i = 0; i < m; ++i)
                                   for (int j = 0; j < c; ++j) {
                                       const double onehot = labels[static_cast<std::size_t>(i)] == j ? 1.0 : 0.0;
                                       pl->grad[static_cast<std::size_t>(i) * c + j] +=
                                           g * (probs[static_cast<std::size_t>(i) * c + j] - onehot);
                                   }
                           });
}

}  // namespace argcore
