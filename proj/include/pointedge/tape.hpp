#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "pointedge/tensor.hpp"

namespace pointedge::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while its tape lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    std::size_t id() const noexcept { return id_; }
    Tape* tape() const noexcept { return tape_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Records executed primitives in creation order. Creation order is a valid
/// topological order, so backward() simply walks the node list in reverse.
/// One forward/backward flow per tape.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var parameter(Tensor value);

    /// Appends a node. `fn` is dropped when no input requires a gradient.
    Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
    Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn);

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    /// Gradient accumulated for a node; a zero tensor when nothing flowed into it.
    const Tensor& grad(Var v);
    /// Mutable gradient buffer, allocated (zero) on first use.
    Tensor& grad_buffer(std::size_t id);
    bool has_grad(std::size_t id) const { return nodes_[id].has_grad; }

    /// Seeds d(out)/d(out) = 1 for a 1x1 output and propagates to every node.
    void backward(Var out);

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool has_grad = false;
        BackwardFn backward;
    };
    std::deque<Node> nodes_;
    bool backward_done_ = false;
};

/// Row groups: group g covers entries [offsets[g], offsets[g+1]). `members`
/// maps each entry to a source row; empty means entry t is row t.
struct Groups {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> members;

    std::size_t count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
    std::size_t entries() const { return offsets.empty() ? 0 : offsets.back(); }
    std::size_t member(std::size_t t) const { return members.empty() ? t : members[t]; }

    static Groups contiguous(std::size_t groups, std::size_t size_each);
};

// Linear algebra and elementwise primitives.
Var matmul(Var a, Var b);
Var bias_add(Var x, Var bias);
Var relu(Var x);
Var sigmoid(Var x);
Var log(Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var clamp(Var x, double lo, double hi);

// Row-wise primitives.
Var softmax_rows(Var x);
Var log_softmax_rows(Var x);
Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var gather_rows(Var x, std::span<const std::size_t> rows);
/// Picks x[r, cols[r]] for every row; result is rows x 1.
Var pick_per_row(Var x, std::span<const std::size_t> cols);
Var sum_all(Var x);
Var mean_all(Var x);

// Grouped primitives.
/// Column-wise max over each group's member rows. Gradient goes only to the
/// argmax row; ties resolve to the lowest source row index.
Var scatter_max_groups(Var x, const Groups& groups);
/// out[g] = sum over entries t of group g of weights[t] * x[member(t)], weights constant.
Var group_weighted_sum(Var x, const Groups& groups, std::span<const double> weights);
/// Same with differentiable weights (entries x 1).
Var group_weighted_sum(Var x, const Groups& groups, Var weights);
/// Softmax of an entries x 1 column within each group (contiguous entries).
Var group_softmax(Var scores, const Groups& groups);
/// w[t] / sum of w over t's group, for an entries x 1 column.
Var group_normalize(Var weights, const Groups& groups);

}  // namespace pointedge::ad
