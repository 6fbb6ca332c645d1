#ifndef DERMX_AUTODIFF_HPP
#define DERMX_AUTODIFF_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace dermx::ad {

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Data-independent flat index map: out[k] = in[idx[k]], with idx[k] == -1
// reading as zero. Shared because conv geometries repeat every step.
using IndexMap = std::shared_ptr<const std::vector<int64_t>>;

class Tensor;

// Backward rule: given the op's own output and the upstream gradient,
// produce one gradient tensor per parent (built from the same primitive
// ops, which is what makes gradients-of-gradients work).
using Vjp = std::function<std::vector<Tensor>(const Tensor& self, const Tensor& grad)>;

struct Node {
    Shape shape;
    std::vector<double> value;
    bool requires_grad = false;
    std::vector<Tensor>* parents = nullptr;  // owned; null for leaves
    Vjp vjp;
    const char* op = "leaf";
    ~Node();
};

class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Shape shape, std::vector<double> value);
    static Tensor scalar(double v);
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);
    // differentiable leaf (model parameter / probe input)
    static Tensor param(Shape shape, std::vector<double> value);

    bool defined() const { return n_ != nullptr; }
    const Shape& shape() const { return n_->shape; }
    int64_t numel() const { return static_cast<int64_t>(n_->value.size()); }
    bool requires_grad() const { return n_->requires_grad; }
    const char* op() const { return n_->op; }

    const std::vector<double>& data() const { return n_->value; }
    // In-place mutation is only sound for leaves (optimizer updates).
    std::vector<double>& leaf_data();
    double item() const;

    Tensor detach() const;

    Node* node() const { return n_.get(); }
    long nodeUseCount() const { return n_.use_count(); }

private:
    friend Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                          Vjp vjp, const char* op);
    std::shared_ptr<Node> n_;
};

// --- graph recording control -------------------------------------------------

bool grad_enabled();

struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

// --- elementwise -------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor reciprocal(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor silu(const Tensor& a);
// gradient masked to zero where clamping is active
Tensor clamp(const Tensor& a, double lo, double hi);

// --- linear / structural -----------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);  // (m,k) x (k,n)
Tensor transpose(const Tensor& a);                // 2-D
Tensor reshape(const Tensor& a, Shape shape);
Tensor gather(const Tensor& a, const IndexMap& idx, Shape out_shape);
Tensor scatter_add(const Tensor& a, const IndexMap& idx, Shape out_shape);

// --- reductions / selectors --------------------------------------------------

Tensor sum_all(const Tensor& a);  // -> {1}
Tensor row_sum(const Tensor& a);  // (r,c) -> {r}
Tensor row_max(const Tensor& a);  // (r,c) -> {r}, subgradient to first argmax
Tensor row_min(const Tensor& a);

// --- composite helpers -------------------------------------------------------

Tensor mean_all(const Tensor& a);
Tensor broadcast_rows(const Tensor& v, int64_t rows);  // {c} -> (rows,c)
Tensor broadcast_cols(const Tensor& v, int64_t cols);  // {r} -> (r,cols)
Tensor softmax_rows(const Tensor& a);                  // shift-stable
Tensor concat_cols(const Tensor& a, const Tensor& b);

// --- autodiff ----------------------------------------------------------------

// d(output)/d(wrt) for a scalar output. With create_graph the returned
// gradients stay differentiable (used to train through Grad-CAM); without it
// they are detached constants.
std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& wrt, bool create_graph);

// --- cached index-map builders ------------------------------------------------

struct ConvGeometry {
    int64_t n, c_in, h, w;
    int64_t kh, kw;
    int64_t stride;
    int64_t pad_top, pad_left, pad_bottom, pad_right;
    int64_t out_h() const { return (h + pad_top + pad_bottom - kh) / stride + 1; }
    int64_t out_w() const { return (w + pad_left + pad_right - kw) / stride + 1; }
};

// rows ordered (n, oy, ox), cols (c, ky, kx)
IndexMap im2col_map(const ConvGeometry& g);
// rows ordered (n, c, oy, ox), cols (ky, kx)  [depthwise]
IndexMap im2col_depthwise_map(const ConvGeometry& g);
// (n*oh*ow, c_out) -> (n, c_out, oh, ow) flat permutation
IndexMap nhwc_to_nchw_map(int64_t n, int64_t hw, int64_t c);
// tile a {c} vector across rows of an (r,c) matrix
IndexMap tile_rows_map(int64_t rows, int64_t cols);
// tile a {r} vector across columns of an (r,c) matrix
IndexMap tile_cols_map(int64_t rows, int64_t cols);
// per-element channel id for an (n,c,h,w) tensor, flattened
IndexMap channel_of_nchw_map(int64_t n, int64_t c, int64_t hw);
// per-element row id for an (r,c) matrix, flattened
IndexMap row_of_map(int64_t rows, int64_t cols);
// (n,c,p) element -> (n,p): scatter target for summing out channels
IndexMap sum_channels_map(int64_t n, int64_t c, int64_t hw);
// tile per-channel kernel weights {c*kk} over (n,c,ohw,kk) patch rows
IndexMap dw_weight_tile_map(int64_t n, int64_t c, int64_t ohw, int64_t kk);
// all-zero map of the given length (broadcast a scalar)
IndexMap zero_map(int64_t n);

}  // namespace dermx::ad

#endif  // DERMX_AUTODIFF_HPP
