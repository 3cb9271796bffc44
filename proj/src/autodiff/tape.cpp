#include "pointedge/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "pointedge/errors.hpp"

namespace pointedge::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) { return ConstMap(t.data(), t.rows(), t.cols()); }
MutMap as_matrix(Tensor& t) { return MutMap(t.data(), t.rows(), t.cols()); }

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw ValidationError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " + b.shape_string());
}

void require_rank2(const char* op, const Tensor& t) {
    if (t.rank() != 2) throw ValidationError(std::string(op) + ": expected rank-2 tensor, got " + t.shape_string());
}

Tape& tape_of(Var v) {
    if (!v.valid()) throw ValidationError("operation on an unbound Var");
    return *v.tape();
}

Tape& tape_of(Var a, Var b) {
    Tape& t = tape_of(a);
    if (&t != &tape_of(b)) throw ValidationError("operands live on different tapes");
    return t;
}

// Applies g_in += dy * f'(x) elementwise where f' is computed from (x, y).
template <typename Deriv>
Var unary(Var x, Tensor y, Deriv deriv) {
    Tape& tape = tape_of(x);
    const std::size_t xi = x.id();
    return tape.record(std::move(y), {x}, [xi, deriv](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        const Tensor& xv = t.value(xi);
        const Tensor& yv = t.value(self);
        Tensor& gx = t.grad_buffer(xi);
        for (std::size_t i = 0; i < g.size(); ++i) gx.data()[i] += g.data()[i] * deriv(xv.data()[i], yv.data()[i]);
    });
}

void check_groups(const char* op, const Groups& groups, std::size_t source_rows) {
    if (groups.offsets.empty() || groups.offsets.front() != 0) {
        throw ValidationError(std::string(op) + ": group offsets must start at 0");
    }
    for (std::size_t g = 0; g + 1 < groups.offsets.size(); ++g) {
        if (groups.offsets[g + 1] < groups.offsets[g]) {
            throw ValidationError(std::string(op) + ": group offsets must be non-decreasing");
        }
    }
    if (!groups.members.empty() && groups.members.size() != groups.entries()) {
        throw ValidationError(std::string(op) + ": member list length does not match offsets");
    }
    if (groups.members.empty() && groups.entries() > source_rows) {
        throw ValidationError(std::string(op) + ": groups cover more rows than the source has");
    }
    for (std::size_t m : groups.members) {
        if (m >= source_rows) {
            throw ValidationError(std::string(op) + ": member row " + std::to_string(m) + " out of range for " +
                                  std::to_string(source_rows) + " rows");
        }
    }
}

}  // namespace

const Tensor& Var::value() const { return tape_of(*this).value(id_); }

Groups Groups::contiguous(std::size_t groups, std::size_t size_each) {
    Groups out;
    out.offsets.resize(groups + 1);
    for (std::size_t g = 0; g <= groups; ++g) out.offsets[g] = g * size_each;
    return out;
}

Var Tape::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, false, false, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, true, false, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
    bool needs = false;
    for (const Var& v : inputs) {
        if (v.tape() != this) throw ValidationError("input Var belongs to a different tape");
        needs = needs || nodes_[v.id()].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, needs, false, needs ? std::move(fn) : BackwardFn{}});
    return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::grad(Var v) { return grad_buffer(v.id()); }

Tensor& Tape::grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Tensor(n.value.shape(), 0.0);
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::backward(Var out) {
    if (out.tape() != this) throw ValidationError("backward: output belongs to a different tape");
    if (value(out.id()).size() != 1) {
        throw ValidationError("backward: output must be a scalar, got " + value(out.id()).shape_string());
    }
    if (backward_done_) throw ValidationError("backward: tape already differentiated");
    backward_done_ = true;
    grad_buffer(out.id()).data()[0] = 1.0;
    for (std::size_t i = out.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.backward && n.has_grad) n.backward(*this, i);
    }
}

Var matmul(Var a, Var b) {
    Tape& tape = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_rank2("matmul", av);
    require_rank2("matmul", bv);
    if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
    Tensor y = Tensor::zeros(av.rows(), bv.cols());
    as_matrix(y).noalias() = as_matrix(av) * as_matrix(bv);
    const std::size_t ai = a.id(), bi = b.id();
    return tape.record(std::move(y), {a, b}, [ai, bi](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        if (t.requires_grad(ai)) as_matrix(t.grad_buffer(ai)).noalias() += as_matrix(g) * as_matrix(t.value(bi)).transpose();
        if (t.requires_grad(bi)) as_matrix(t.grad_buffer(bi)).noalias() += as_matrix(t.value(ai)).transpose() * as_matrix(g);
    });
}

Var bias_add(Var x, Var bias) {
    Tape& tape = tape_of(x, bias);
    const Tensor& xv = x.value();
    const Tensor& bv = bias.value();
    require_rank2("bias_add", xv);
    if (bv.size() != xv.cols()) shape_error("bias_add", xv, bv);
    Tensor y = xv;
    for (std::size_t r = 0; r < y.rows(); ++r) {
        auto row = y.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv.data()[c];
    }
    const std::size_t xi = x.id(), bi = bias.id();
    return tape.record(std::move(y), {x, bias}, [xi, bi](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        if (t.requires_grad(xi)) {
            Tensor& gx = t.grad_buffer(xi);
            for (std::size_t i = 0; i < g.size(); ++i) gx.data()[i] += g.data()[i];
        }
        if (t.requires_grad(bi)) {
            Tensor& gb = t.grad_buffer(bi);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                auto row = g.row(r);
                for (std::size_t c = 0; c < row.size(); ++c) gb.data()[c] += row[c];
            }
        }
    });
}

Var relu(Var x) {
    Tensor y = x.value();
    for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
    return unary(x, std::move(y), [](double xv, double) { return xv > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var x) {
    Tensor y = x.value();
    for (double& v : y.values()) {
        v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return unary(x, std::move(y), [](double, double yv) { return yv * (1.0 - yv); });
}

Var log(Var x) {
    Tensor y = x.value();
    for (double& v : y.values()) {
        if (!(v > 0.0)) throw ValidationError("log: non-positive input " + std::to_string(v));
        v = std::log(v);
    }
    return unary(x, std::move(y), [](double xv, double) { return 1.0 / xv; });
}

Var scale(Var x, double factor) {
    Tensor y = x.value();
    for (double& v : y.values()) v *= factor;
    return unary(x, std::move(y), [factor](double, double) { return factor; });
}

Var clamp(Var x, double lo, double hi) {
    Tensor y = x.value();
    for (double& v : y.values()) v = std::clamp(v, lo, hi);
    return unary(x, std::move(y), [lo, hi](double xv, double) { return (xv >= lo && xv <= hi) ? 1.0 : 0.0; });
}

namespace {

template <typename Fwd, typename DA, typename DB>
Var binary(const char* op, Var a, Var b, Fwd fwd, DA da, DB db) {
    Tape& tape = tape_of(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (!av.same_shape(bv)) shape_error(op, av, bv);
    Tensor y(av.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = fwd(av.data()[i], bv.data()[i]);
    const std::size_t ai = a.id(), bi = b.id();
    return tape.record(std::move(y), {a, b}, [ai, bi, da, db](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        const Tensor& avv = t.value(ai);
        const Tensor& bvv = t.value(bi);
        if (t.requires_grad(ai)) {
            Tensor& ga = t.grad_buffer(ai);
            for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * da(avv.data()[i], bvv.data()[i]);
        }
        if (t.requires_grad(bi)) {
            Tensor& gb = t.grad_buffer(bi);
            for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] += g.data()[i] * db(avv.data()[i], bvv.data()[i]);
        }
    });
}

}  // namespace

Var add(Var a, Var b) {
    return binary(
        "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
    return binary(
        "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
    return binary(
        "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Var softmax_rows(Var x) {
    Tape& tape = tape_of(x);
    const Tensor& xv = x.value();
    require_rank2("softmax_rows", xv);
    Tensor y = xv;
    for (std::size_t r = 0; r < y.rows(); ++r) {
        auto row = y.row(r);
        if (row.empty()) continue;
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) sum += (v = std::exp(v - mx));
        for (double& v : row) v /= sum;
    }
    const std::size_t xi = x.id();
    return tape.record(std::move(y), {x}, [xi](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        const Tensor& yv = t.value(self);
        Tensor& gx = t.grad_buffer(xi);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            auto gr = g.row(r);
            auto yr = yv.row(r);
            double dot = 0.0;
            for (std::size_t c = 0; c < gr.size(); ++c) dot += gr[c] * yr[c];
            auto out = gx.row(r);
            for (std::size_t c = 0; c < gr.size(); ++c) out[c] += yr[c] * (gr[c] - dot);
        }
    });
}

Var log_softmax_rows(Var x) {
    Tape& tape = tape_of(x);
    const Tensor& xv = x.value();
    require_rank2("log_softmax_rows", xv);
    Tensor y = xv;
    for (std::size_t r = 0; r < y.rows(); ++r) {
        auto row = y.row(r);
        if (row.empty()) continue;
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double v : row) sum += std::exp(v - mx);
        const double lse = mx + std::log(sum);
        for (double& v : row) v -= lse;
    }
    const std::size_t xi = x.id();
    return tape.record(std::move(y), {x}, [xi](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        const Tensor& yv = t.value(self);
        Tensor& gx = t.grad_buffer(xi);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            auto gr = g.row(r);
            auto yr = yv.row(r);
            double gsum = 0.0;
            for (double v : gr) gsum += v;
            auto out = gx.row(r);
            for (std::size_t c = 0; c < gr.size(); ++c) out[c] += gr[c] - std::exp(yr[c]) * gsum;
        }
    });
}

Var concat_cols(std::initializer_list<Var> parts) {
    return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ValidationError("concat_cols: no inputs");
    Tape& tape = tape_of(parts.front());
    const std::size_t rows = parts.front().value().rows();
    std::vector<std::size_t> ids, widths;
    std::size_t total = 0;
    for (const Var& p : parts) {
        tape_of(parts.front(), p);
        const Tensor& v = p.value();
        require_rank2("concat_cols", v);
        if (v.rows() != rows) shape_error("concat_cols", parts.front().value(), v);
        ids.push_back(p.id());
        widths.push_back(v.cols());
        total += v.cols();
    }
    Tensor y = Tensor::zeros(rows, total);
    std::size_t offset = 0;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        for (std::size_t r = 0; r < rows; ++r) std::copy_n(v.row(r).data(), v.cols(), y.row(r).data() + offset);
        offset += v.cols();
    }
    return tape.record(std::move(y), parts, [ids, widths](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (t.requires_grad(ids[k]) && widths[k] > 0) {
                Tensor& gp = t.grad_buffer(ids[k]);
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    const double* src = g.row(r).data() + off;
                    double* dst = gp.row(r).data();
                    for (std::size_t c = 0; c < widths[k]; ++c) dst[c] += src[c];
                }
            }
            off += widths[k];
        }
    });
}

Var gather_rows(Var x, std::span<const std::size_t> rows) {
    Tape& tape = tape_of(x);
    const Tensor& xv = x.value();
    require_rank2("gather_rows", xv);
    const std::size_t c = xv.cols();
    Tensor y = Tensor::zeros(rows.size(), c);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= xv.rows()) {
            throw ValidationError("gather_rows: row " + std::to_string(rows[i]) + " out of range for " +
                                  xv.shape_string());
        }
        std::copy_n(xv.row(rows[i]).data(), c, y.row(i).data());
    }
    const std::size_t xi = x.id();
    return tape.record(std::move(y), {x},
                       [xi, idx = std::vector<std::size_t>(rows.begin(), rows.end())](Tape& t, std::size_t self) {
                           const Tensor& g = t.grad_buffer(self);
                           Tensor& gx = t.grad_buffer(xi);
                           const std::size_t cc = g.cols();
                           for (std::size_t i = 0; i < idx.size(); ++i) {
                               const double* src = g.row(i).data();
                               double* dst = gx.row(idx[i]).data();
                               for (std::size_t k = 0; k < cc; ++k) dst[k] += src[k];
                           }
                       });
}

Var pick_per_row(Var x, std::span<const std::size_t> cols) {
    Tape& tape = tape_of(x);
    const Tensor& xv = x.value();
    require_rank2("pick_per_row", xv);
    if (cols.size() != xv.rows()) {
        throw ValidationError("pick_per_row: " + std::to_string(cols.size()) + " column indices for " +
                              xv.shape_string());
    }
    Tensor y = Tensor::zeros(xv.rows(), 1);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        if (cols[r] >= xv.cols()) throw ValidationError("pick_per_row: column index out of range");
        y.at(r, 0) = xv.at(r, cols[r]);
    }
    const std::size_t xi = x.id();
    return tape.record(std::move(y), {x},
                       [xi, idx = std::vector<std::size_t>(cols.begin(), cols.end())](Tape& t, std::size_t self) {
                           const Tensor& g = t.grad_buffer(self);
                           Tensor& gx = t.grad_buffer(xi);
                           for (std::size_t r = 0; r < idx.size(); ++r) gx.at(r, idx[r]) += g.at(r, 0);
                       });
}

Var sum_all(Var x) {
    Tape& tape = tape_of(x);
    double s = 0.0;
    for (double v : x.value().values()) s += v;
    const std::size_t xi = x.id();
    return tape.record(Tensor::scalar(s), {x}, [xi](Tape& t, std::size_t self) {
        const double g = t.grad_buffer(self).item();
        for (double& v : t.grad_buffer(xi).values()) v += g;
    });
}

Var mean_all(Var x) {
    const std::size_t n = x.value().size();
    if (n == 0) throw ValidationError("mean_all: empty tensor");
    return scale(sum_all(x), 1.0 / static_cast<double>(n));
}

Var scatter_max_groups(Var x, const Groups& groups) {
    Tape& tape = tape_of(x);
    const Tensor& xv = x.value();
    require_rank2("scatter_max_groups", xv);
    check_groups("scatter_max_groups", groups, xv.rows());
    const std::size_t c = xv.cols();
    const std::size_t n = groups.count();
    Tensor y = Tensor::zeros(n, c);
    std::vector<std::size_t> argmax(n * c, 0);
    for (std::size_t g = 0; g < n; ++g) {
        const std::size_t begin = groups.offsets[g], end = groups.offsets[g + 1];
        if (begin == end) throw ValidationError("scatter_max_groups: group " + std::to_string(g) + " is empty");
        for (std::size_t k = 0; k < c; ++k) {
            std::size_t best = groups.member(begin);
            double best_v = xv.at(best, k);
            for (std::size_t t = begin + 1; t < end; ++t) {
                const std::size_t row = groups.member(t);
                const double v = xv.at(row, k);
                if (v > best_v || (v == best_v && row < best)) {
                    best = row;
                    best_v = v;
                }
            }
            y.at(g, k) = best_v;
            argmax[g * c + k] = best;
        }
    }
    const std::size_t xi = x.id();
    return tape.record(std::move(y), {x}, [xi, c, argmax = std::move(argmax)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        Tensor& gx = t.grad_buffer(xi);
        for (std::size_t i = 0; i < argmax.size(); ++i) gx.at(argmax[i], i % c) += g.data()[i];
    });
}

Var group_weighted_sum(Var x, const Groups& groups, std::span<const double> weights) {
    Tape& tape = tape_of(x);
    const Tensor& xv = x.value();
    require_rank2("group_weighted_sum", xv);
    check_groups("group_weighted_sum", groups, xv.rows());
    if (weights.size() != groups.entries()) {
        throw ValidationError("group_weighted_sum: " + std::to_string(weights.size()) + " weights for " +
                              std::to_string(groups.entries()) + " entries");
    }
    const std::size_t c = xv.cols();
    Tensor y = Tensor::zeros(groups.count(), c);
    for (std::size_t g = 0; g < groups.count(); ++g) {
        double* out = y.row(g).data();
        for (std::size_t t = groups.offsets[g]; t < groups.offsets[g + 1]; ++t) {
            const double* src = xv.row(groups.member(t)).data();
            const double w = weights[t];
            for (std::size_t k = 0; k < c; ++k) out[k] += w * src[k];
        }
    }
    const std::size_t xi = x.id();
    return tape.record(std::move(y), {x},
                       [xi, groups, w = std::vector<double>(weights.begin(), weights.end())](Tape& t,
                                                                                               std::size_t self) {
                           const Tensor& g = t.grad_buffer(self);
                           Tensor& gx = t.grad_buffer(xi);
                           const std::size_t cc = g.cols();
                           for (std::size_t grp = 0; grp < groups.count(); ++grp) {
                               const double* src = g.row(grp).data();
                               for (std::size_t e = groups.offsets[grp]; e < groups.offsets[grp + 1]; ++e) {
                                   double* dst = gx.row(groups.member(e)).data();
                                   for (std::size_t k = 0; k < cc; ++k) dst[k] += w[e] * src[k];
                               }
                           }
                       });
}

Var group_weighted_sum(Var x, const Groups& groups, Var weights) {
    Tape& tape = tape_of(x, weights);
    const Tensor& xv = x.value();
    const Tensor& wv = weights.value();
    require_rank2("group_weighted_sum", xv);
    check_groups("group_weighted_sum", groups, xv.rows());
    if (wv.rank() != 2 || wv.cols() != 1 || wv.rows() != groups.entries()) {
        throw ValidationError("group_weighted_sum: weights " + wv.shape_string() + " do not match " +
                              std::to_string(groups.entries()) + " entries");
    }
    const std::size_t c = xv.cols();
    Tensor y = Tensor::zeros(groups.count(), c);
    for (std::size_t g = 0; g < groups.count(); ++g) {
        double* out = y.row(g).data();
        for (std::size_t t = groups.offsets[g]; t < groups.offsets[g + 1]; ++t) {
            const double* src = xv.row(groups.member(t)).data();
            const double w = wv.data()[t];
            for (std::size_t k = 0; k < c; ++k) out[k] += w * src[k];
        }
    }
    const std::size_t xi = x.id(), wi = weights.id();
    return tape.record(std::move(y), {x, weights}, [xi, wi, groups](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        const Tensor& xvv = t.value(xi);
        const Tensor& wvv = t.value(wi);
        const std::size_t cc = g.cols();
        const bool need_x = t.requires_grad(xi), need_w = t.requires_grad(wi);
        Tensor* gx = need_x ? &t.grad_buffer(xi) : nullptr;
        Tensor* gw = need_w ? &t.grad_buffer(wi) : nullptr;
        for (std::size_t grp = 0; grp < groups.count(); ++grp) {
            const double* src = g.row(grp).data();
            for (std::size_t e = groups.offsets[grp]; e < groups.offsets[grp + 1]; ++e) {
                const std::size_t row = groups.member(e);
                if (need_x) {
                    double* dst = gx->row(row).data();
                    const double w = wvv.data()[e];
                    for (std::size_t k = 0; k < cc; ++k) dst[k] += w * src[k];
                }
                if (need_w) {
                    const double* xr = xvv.row(row).data();
                    double dot = 0.0;
                    for (std::size_t k = 0; k < cc; ++k) dot += xr[k] * src[k];
                    gw->data()[e] += dot;
                }
            }
        }
    });
}

Var group_softmax(Var scores, const Groups& groups) {
    Tape& tape = tape_of(scores);
    const Tensor& sv = scores.value();
    if (sv.rank() != 2 || sv.cols() != 1 || sv.rows() != groups.entries() || !groups.members.empty()) {
        throw ValidationError("group_softmax: expected an entries x 1 column over contiguous groups, got " +
                              sv.shape_string());
    }
    check_groups("group_softmax", groups, sv.rows());
    Tensor y = sv;
    for (std::size_t g = 0; g < groups.count(); ++g) {
        const std::size_t b = groups.offsets[g], e = groups.offsets[g + 1];
        if (b == e) continue;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t t = b; t < e; ++t) mx = std::max(mx, y.data()[t]);
        double sum = 0.0;
        for (std::size_t t = b; t < e; ++t) sum += (y.data()[t] = std::exp(y.data()[t] - mx));
        for (std::size_t t = b; t < e; ++t) y.data()[t] /= sum;
    }
    const std::size_t si = scores.id();
    return tape.record(std::move(y), {scores}, [si, groups](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        const Tensor& yv = t.value(self);
        Tensor& gs = t.grad_buffer(si);
        for (std::size_t grp = 0; grp < groups.count(); ++grp) {
            const std::size_t b = groups.offsets[grp], e = groups.offsets[grp + 1];
            double dot = 0.0;
            for (std::size_t k = b; k < e; ++k) dot += g.data()[k] * yv.data()[k];
            for (std::size_t k = b; k < e; ++k) gs.data()[k] += yv.data()[k] * (g.data()[k] - dot);
        }
    });
}

Var group_normalize(Var weights, const Groups& groups) {
    Tape& tape = tape_of(weights);
    const Tensor& wv = weights.value();
    if (wv.rank() != 2 || wv.cols() != 1 || wv.rows() != groups.entries() || !groups.members.empty()) {
        throw ValidationError("group_normalize: expected an entries x 1 column over contiguous groups, got " +
                              wv.shape_string());
    }
    check_groups("group_normalize", groups, wv.rows());
    Tensor y = wv;
    std::vector<double> sums(groups.count(), 0.0);
    for (std::size_t g = 0; g < groups.count(); ++g) {
        for (std::size_t t = groups.offsets[g]; t < groups.offsets[g + 1]; ++t) sums[g] += wv.data()[t];
        if (groups.offsets[g + 1] > groups.offsets[g] && !(sums[g] > 0.0)) {
            throw ValidationError("group_normalize: group " + std::to_string(g) + " has non-positive weight sum");
        }
        for (std::size_t t = groups.offsets[g]; t < groups.offsets[g + 1]; ++t) y.data()[t] /= sums[g];
    }
    const std::size_t wi = weights.id();
    return tape.record(std::move(y), {weights}, [wi, groups, sums = std::move(sums)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        const Tensor& yv = t.value(self);
        Tensor& gw = t.grad_buffer(wi);
        for (std::size_t grp = 0; grp < groups.count(); ++grp) {
            const std::size_t b = groups.offsets[grp], e = groups.offsets[grp + 1];
            double dot = 0.0;
            for (std::size_t k = b; k < e; ++k) dot += g.data()[k] * yv.data()[k];
            for (std::size_t k = b; k < e; ++k) gw.data()[k] += (g.data()[k] - dot) / sums[grp];
        }
    });
}

}  // namespace pointedge::ad
