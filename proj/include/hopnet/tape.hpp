#pragma once

#include <vector>

#include "hopnet/mat.hpp"

namespace hopnet::nn {

/// Reverse-mode tape over dense row-major matrices. Nodes are appended in
/// topological order; backward() walks them once in reverse and accumulates
/// parameter gradients into externally supplied sinks.
class Tape {
  public:
    using Id = int;

    /// Leaf holding a value that never needs a gradient (features, masks).
    Id constant(Mat value);
    /// Leaf referencing external parameter storage; grad may be null when
    /// the caller only wants a forward pass.
    Id param(const Mat* value, Mat* grad);

    /// y = x * W + b (W: in x out, b: 1 x out, broadcast over rows).
    Id linear(Id x, Id w, Id b);
    Id softplus(Id x);
    /// Per-row layer normalization with learnable scale/offset (1 x C).
    Id layer_norm(Id x, Id gamma, Id beta);
    Id concat_cols(const std::vector<Id>& xs);
    /// y[j] = x[idx[j]]
    Id gather_rows(Id x, std::vector<int> idx);
    /// y[s] = sum of rows j with seg[j] == s; zero rows for empty segments.
    Id segment_sum(Id x, std::vector<int> seg, int n_seg);
    /// y[j] = factors[j] * x[j]
    Id scale_rows(Id x, std::vector<double> factors);
    Id add(Id a, Id b);

    const Mat& value(Id id) const;
    int rows(Id id) const { return value(id).rows; }
    int cols(Id id) const { return value(id).cols; }

    /// Seeds d(output)/d(node) for one or more outputs and runs the reverse
    /// pass once. Each pair is (node id, adjoint of the same shape).
    void backward(const std::vector<std::pair<Id, Mat>>& seeds);

  private:
    enum class Op {
        Constant,
        Param,
        Linear,
        Softplus,
        LayerNorm,
        ConcatCols,
        GatherRows,
        SegmentSum,
        ScaleRows,
        Add,
    };

    struct Node {
        Op op;
        Mat own;              // value storage for non-param nodes
        const Mat* ref = nullptr; // external value for params
        Mat* grad_sink = nullptr; // external gradient accumulator for params
        std::vector<Id> in;
        std::vector<int> idx;      // gather/segment metadata
        std::vector<double> scale; // scale_rows metadata
        int n_seg = 0;
        const Mat& val() const { return ref ? *ref : own; }
    };

    Id push(Node n);
    std::vector<Node> nodes_;

    static constexpr double kLnEps = 1e-5;
};

} // namespace hopnet::nn
