#include "hopnet/tape.hpp"

#include <cmath>
#include <string>

namespace hopnet::nn {

namespace {

double softplus_val(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

Tape::Id Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::constant(Mat value) {
    Node n;
    n.op = Op::Constant;
    n.own = std::move(value);
    return push(std::move(n));
}

Tape::Id Tape::param(const Mat* value, Mat* grad) {
    Node n;
    n.op = Op::Param;
    n.ref = value;
    n.grad_sink = grad;
    return push(std::move(n));
}

Tape::Id Tape::linear(Id x, Id w, Id b) {
    const Mat& X = value(x);
    const Mat& W = value(w);
    const Mat& B = value(b);
    if (X.cols != W.rows || B.rows != 1 || B.cols != W.cols)
        throw ShapeMismatch("linear: X " + std::to_string(X.rows) + "x" +
                            std::to_string(X.cols) + " W " + std::to_string(W.rows) +
                            "x" + std::to_string(W.cols));
    Node n;
    n.op = Op::Linear;
    n.in = {x, w, b};
    n.own = Mat(X.rows, W.cols);
    for (int r = 0; r < X.rows; ++r) {
        double* y = n.own.row(r);
        for (int c = 0; c < W.cols; ++c) y[c] = B.at(0, c);
        const double* xr = X.row(r);
        for (int i = 0; i < X.cols; ++i) {
            const double xi = xr[i];
            const double* wrow = W.row(i);
            for (int c = 0; c < W.cols; ++c) y[c] += xi * wrow[c];
        }
    }
    return push(std::move(n));
}

Tape::Id Tape::softplus(Id x) {
    const Mat& X = value(x);
    Node n;
    n.op = Op::Softplus;
    n.in = {x};
    n.own = Mat(X.rows, X.cols);
    for (std::size_t i = 0; i < X.d.size(); ++i) n.own.d[i] = softplus_val(X.d[i]);
    return push(std::move(n));
}

Tape::Id Tape::layer_norm(Id x, Id gamma, Id beta) {
    const Mat& X = value(x);
    const Mat& G = value(gamma);
    const Mat& B = value(beta);
    if (G.rows != 1 || G.cols != X.cols || B.rows != 1 || B.cols != X.cols)
        throw ShapeMismatch("layer_norm scale/offset shape");
    Node n;
    n.op = Op::LayerNorm;
    n.in = {x, gamma, beta};
    n.own = Mat(X.rows, X.cols);
    const int C = X.cols;
    for (int r = 0; r < X.rows; ++r) {
        const double* xr = X.row(r);
        double mean = 0.0;
        for (int c = 0; c < C; ++c) mean += xr[c];
        mean /= C;
        double var = 0.0;
        for (int c = 0; c < C; ++c) var += (xr[c] - mean) * (xr[c] - mean);
        var /= C;
        const double inv = 1.0 / std::sqrt(var + kLnEps);
        double* y = n.own.row(r);
        for (int c = 0; c < C; ++c)
            y[c] = (xr[c] - mean) * inv * G.at(0, c) + B.at(0, c);
    }
    return push(std::move(n));
}

Tape::Id Tape::concat_cols(const std::vector<Id>& xs) {
    if (xs.empty()) throw ShapeMismatch("concat_cols of nothing");
    const int rows = value(xs[0]).rows;
    int cols = 0;
    for (Id id : xs) {
        if (value(id).rows != rows) throw ShapeMismatch("concat_cols row mismatch");
        cols += value(id).cols;
    }
    Node n;
    n.op = Op::ConcatCols;
    n.in = xs;
    n.own = Mat(rows, cols);
    for (int r = 0; r < rows; ++r) {
        double* y = n.own.row(r);
        int off = 0;
        for (Id id : xs) {
            const Mat& X = value(id);
            const double* xr = X.row(r);
            for (int c = 0; c < X.cols; ++c) y[off + c] = xr[c];
            off += X.cols;
        }
    }
    return push(std::move(n));
}

Tape::Id Tape::gather_rows(Id x, std::vector<int> idx) {
    const Mat& X = value(x);
    Node n;
    n.op = Op::GatherRows;
    n.in = {x};
    n.own = Mat(static_cast<int>(idx.size()), X.cols);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        if (idx[j] < 0 || idx[j] >= X.rows) throw OutOfRange("gather_rows index");
        const double* src = X.row(idx[j]);
        double* dst = n.own.row(static_cast<int>(j));
        for (int c = 0; c < X.cols; ++c) dst[c] = src[c];
    }
    n.idx = std::move(idx);
    return push(std::move(n));
}

Tape::Id Tape::segment_sum(Id x, std::vector<int> seg, int n_seg) {
    const Mat& X = value(x);
    if (static_cast<int>(seg.size()) != X.rows)
        throw ShapeMismatch("segment_sum seg size");
    Node n;
    n.op = Op::SegmentSum;
    n.in = {x};
    n.n_seg = n_seg;
    n.own = Mat(n_seg, X.cols);
    for (int r = 0; r < X.rows; ++r) {
        if (seg[r] < 0 || seg[r] >= n_seg) throw OutOfRange("segment_sum segment id");
        double* dst = n.own.row(seg[r]);
        const double* src = X.row(r);
        for (int c = 0; c < X.cols; ++c) dst[c] += src[c];
    }
    n.idx = std::move(seg);
    return push(std::move(n));
}

Tape::Id Tape::scale_rows(Id x, std::vector<double> factors) {
    const Mat& X = value(x);
    if (static_cast<int>(factors.size()) != X.rows)
        throw ShapeMismatch("scale_rows factor count");
    Node n;
    n.op = Op::ScaleRows;
    n.in = {x};
    n.own = Mat(X.rows, X.cols);
    for (int r = 0; r < X.rows; ++r) {
        const double f = factors[r];
        const double* src = X.row(r);
        double* dst = n.own.row(r);
        for (int c = 0; c < X.cols; ++c) dst[c] = f * src[c];
    }
    n.scale = std::move(factors);
    return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (!A.same_shape(B)) throw ShapeMismatch("add shape mismatch");
    Node n;
    n.op = Op::Add;
    n.in = {a, b};
    n.own = Mat(A.rows, A.cols);
    for (std::size_t i = 0; i < A.d.size(); ++i) n.own.d[i] = A.d[i] + B.d[i];
    return push(std::move(n));
}

const Mat& Tape::value(Id id) const { return nodes_.at(id).val(); }

void Tape::backward(const std::vector<std::pair<Id, Mat>>& seeds) {
    std::vector<Mat> grads(nodes_.size());
    std::vector<bool> live(nodes_.size(), false);

    auto grad_of = [&](Id id) -> Mat& {
        if (!live[id]) {
            const Mat& v = nodes_[id].val();
            grads[id] = Mat(v.rows, v.cols);
            live[id] = true;
        }
        return grads[id];
    };

    for (const auto& [id, seed] : seeds) {
        const Mat& v = nodes_.at(id).val();
        if (seed.rows != v.rows || seed.cols != v.cols)
            throw ShapeMismatch("backward seed shape");
        Mat& g = grad_of(id);
        for (std::size_t i = 0; i < g.d.size(); ++i) g.d[i] += seed.d[i];
    }

    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        if (!live[id]) continue;
        Node& n = nodes_[id];
        const Mat& gy = grads[id];
        switch (n.op) {
            case Op::Constant:
                break;
            case Op::Param:
                if (n.grad_sink) {
                    Mat& s = *n.grad_sink;
                    for (std::size_t i = 0; i < s.d.size(); ++i) s.d[i] += gy.d[i];
                }
                break;
            case Op::Linear: {
                const Mat& X = nodes_[n.in[0]].val();
                const Mat& W = nodes_[n.in[1]].val();
                Mat& gx = grad_of(n.in[0]);
                Mat& gw = grad_of(n.in[1]);
                Mat& gb = grad_of(n.in[2]);
                for (int r = 0; r < X.rows; ++r) {
                    const double* gyr = gy.row(r);
                    const double* xr = X.row(r);
                    double* gxr = gx.row(r);
                    for (int c = 0; c < W.cols; ++c) gb.at(0, c) += gyr[c];
                    for (int i = 0; i < X.cols; ++i) {
                        const double* wrow = W.row(i);
                        double* gwrow = gw.row(i);
                        double acc = 0.0;
                        const double xi = xr[i];
                        for (int c = 0; c < W.cols; ++c) {
                            acc += gyr[c] * wrow[c];
                            gwrow[c] += xi * gyr[c];
                        }
                        gxr[i] += acc;
                    }
                }
                break;
            }
            case Op::Softplus: {
                const Mat& X = nodes_[n.in[0]].val();
                Mat& gx = grad_of(n.in[0]);
                for (std::size_t i = 0; i < X.d.size(); ++i)
                    gx.d[i] += gy.d[i] * sigmoid(X.d[i]);
                break;
            }
            case Op::LayerNorm: {
                const Mat& X = nodes_[n.in[0]].val();
                const Mat& G = nodes_[n.in[1]].val();
                Mat& gx = grad_of(n.in[0]);
                Mat& gg = grad_of(n.in[1]);
                Mat& gb = grad_of(n.in[2]);
                const int C = X.cols;
                for (int r = 0; r < X.rows; ++r) {
                    const double* xr = X.row(r);
                    const double* gyr = gy.row(r);
                    double mean = 0.0;
                    for (int c = 0; c < C; ++c) mean += xr[c];
                    mean /= C;
                    double var = 0.0;
                    for (int c = 0; c < C; ++c) var += (xr[c] - mean) * (xr[c] - mean);
                    var /= C;
                    const double inv = 1.0 / std::sqrt(var + kLnEps);
                    // dxhat, plus accumulate scale/offset grads
                    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                    for (int c = 0; c < C; ++c) {
                        const double xhat = (xr[c] - mean) * inv;
                        const double dxhat = gyr[c] * G.at(0, c);
                        gg.at(0, c) += gyr[c] * xhat;
                        gb.at(0, c) += gyr[c];
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += dxhat * xhat;
                    }
                    double* gxr = gx.row(r);
                    for (int c = 0; c < C; ++c) {
                        const double xhat = (xr[c] - mean) * inv;
                        const double dxhat = gyr[c] * G.at(0, c);
                        gxr[c] += inv * (dxhat - sum_dxhat / C - xhat * sum_dxhat_xhat / C);
                    }
                }
                break;
            }
            case Op::ConcatCols: {
                int off = 0;
                for (Id src : n.in) {
                    const Mat& X = nodes_[src].val();
                    Mat& gx = grad_of(src);
                    for (int r = 0; r < X.rows; ++r) {
                        const double* gyr = gy.row(r);
                        double* gxr = gx.row(r);
                        for (int c = 0; c < X.cols; ++c) gxr[c] += gyr[off + c];
                    }
                    off += X.cols;
                }
                break;
            }
            case Op::GatherRows: {
                Mat& gx = grad_of(n.in[0]);
                for (std::size_t j = 0; j < n.idx.size(); ++j) {
                    const double* gyr = gy.row(static_cast<int>(j));
                    double* gxr = gx.row(n.idx[j]);
                    for (int c = 0; c < gx.cols; ++c) gxr[c] += gyr[c];
                }
                break;
            }
            case Op::SegmentSum: {
                Mat& gx = grad_of(n.in[0]);
                for (int r = 0; r < gx.rows; ++r) {
                    const double* gyr = gy.row(n.idx[r]);
                    double* gxr = gx.row(r);
                    for (int c = 0; c < gx.cols; ++c) gxr[c] += gyr[c];
                }
                break;
            }
            case Op::ScaleRows: {
                Mat& gx = grad_of(n.in[0]);
                for (int r = 0; r < gx.rows; ++r) {
                    const double f = n.scale[r];
                    const double* gyr = gy.row(r);
                    double* gxr = gx.row(r);
                    for (int c = 0; c < gx.cols; ++c) gxr[c] += f * gyr[c];
                }
                break;
            }
            case Op::Add: {
                Mat& ga = grad_of(n.in[0]);
                Mat& gb2 = grad_of(n.in[1]);
                for (std::size_t i = 0; i < gy.d.size(); ++i) {
                    ga.d[i] += gy.d[i];
                    gb2.d[i] += gy.d[i];
                }
                break;
            }
        }
    }
}

} // namespace hopnet::nn
