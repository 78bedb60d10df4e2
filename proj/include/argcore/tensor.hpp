// Copyright (C) 2026 the argcore authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace argcore {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Thread-local switch: when disabled, ops do not record the backward graph.
// Evaluation paths wrap themselves in NoGradGuard so forwards stay pure.
struct GradMode {
    static bool enabled();
    static void set(bool on);
};

struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();

private:
    bool prev_;
};

namespace testing {
// Negative control for the gradient checker: doubles the ReLU backward.
extern bool corrupt_relu_backward;
}  // namespace testing

// Dense row-major 64-bit float tensor with reverse-mode gradients for the
// fixed op set below. Values are validated finite on construction; op results
// are re-checked in debug builds.
class Tensor : public std::enable_shared_from_this<Tensor> {
public:
    std::vector<int> shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;  // same length as data once allocated

    static TensorPtr create(std::vector<int> shape, std::vector<double> data, bool requires_grad = false);
    static TensorPtr zeros(std::vector<int> shape, bool requires_grad = false);
    static TensorPtr full(std::vector<int> shape, double value, bool requires_grad = false);
    static TensorPtr scalar(double value, bool requires_grad = false);

    // Wires an op result into the autodiff graph. Internal to op
    // implementations; backward reads self.grad and accumulates into parents.
    static TensorPtr from_op(std::vector<int> shape, std::vector<double> data, std::vector<TensorPtr> parents,
                             std::function<void(const Tensor&)> backward);

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    double& at(int i) { return data[static_cast<std::size_t>(i)]; }
    double at(int i) const { return data[static_cast<std::size_t>(i)]; }
    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
    double& at(int i, int j, int k) {
        return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double at(int i, int j, int k) const {
        return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double& at(int i, int j, int k, int l) {
        return data[((static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }
    double at(int i, int j, int k, int l) const {
        return data[((static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }

    double value() const;  // scalar tensors only

    void zero_grad();
    void ensure_grad();

    // Reverse-mode pass from a scalar; accumulates into requires_grad leaves.
    void backward();

    const std::vector<TensorPtr>& parents() const { return parents_; }

private:
    std::vector<TensorPtr> parents_;
    std::function<void(const Tensor&)> backward_fn_;
};

std::string format_shape(const std::vector<int>& shape);

// Sums a multiset of terms in a canonical (value-sorted) order so the result
// depends only on the multiset, not on input ordering. Used where permutation
// equivariance must hold bit-exactly. Destroys the input vector's order.
double canonical_sum(std::vector<double>& terms);

// ---- elementwise / structural ----
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, double c);
TensorPtr relu(const TensorPtr& x);
TensorPtr reshape(const TensorPtr& x, std::vector<int> new_shape);
TensorPtr transpose(const TensorPtr& x);
TensorPtr concat_cols(const TensorPtr& a, const TensorPtr& b);
TensorPtr concat_rows(const std::vector<TensorPtr>& rows);
TensorPtr sum_all(const TensorPtr& x);

// ---- matrix / reduction ----
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
// matmul with the inner reduction done via canonical_sum; use when the inner
// index enumerates actors and bit-exact permutation equivariance is required.
TensorPtr graph_matmul(const TensorPtr& g, const TensorPtr& z);
TensorPtr add_rowvec(const TensorPtr& m, const TensorPtr& v);   // [N,D] + [1,D]
TensorPtr sub_colvec(const TensorPtr& m, const TensorPtr& c);   // [N,D] - [N,1]
TensorPtr row_sum(const TensorPtr& x);                          // [N,D] -> [N,1]
TensorPtr row_inv_norm_guarded(const TensorPtr& x, double var_eps);  // [N,D] -> [N,1]
TensorPtr pairwise_sad(const TensorPtr& x);                     // [N,D] -> [N,N]
TensorPtr maxpool_rows(const TensorPtr& x);                     // [N,D] -> [1,D]
TensorPtr meanpool_rows(const TensorPtr& x);                    // [N,D] -> [1,D]

// ---- neural ops ----
TensorPtr conv2d(const TensorPtr& input, const TensorPtr& kernels, int stride, int padding);
TensorPtr add_channel_bias(const TensorPtr& x, const TensorPtr& bias);  // [C,H,W] + [C]
TensorPtr row_softmax(const TensorPtr& x);
TensorPtr masked_row_softmax(const TensorPtr& x, const TensorPtr& mask);
TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& labels);

}  // namespace argcore
