#include "dermx/autodiff.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dermx/errors.hpp"

namespace dermx::ad {

namespace {

thread_local bool g_grad_enabled = true;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check(bool ok, const std::string& msg) {
    if (!ok) throw SchemaError("autodiff: " + msg);
}

}  // namespace

int64_t numel(const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ")";
    return os.str();
}

Node::~Node() {
    if (!parents) return;
    // iterative teardown: long graphs must not recurse through ~shared_ptr
    std::vector<Tensor> pending;
    pending.swap(*parents);
    delete parents;
    parents = nullptr;
    while (!pending.empty()) {
        Tensor t = std::move(pending.back());
        pending.pop_back();
        Node* n = t.node();
        if (n && n->parents && t.node() && t.nodeUseCount() == 1) {
            pending.insert(pending.end(), std::make_move_iterator(n->parents->begin()),
                           std::make_move_iterator(n->parents->end()));
            n->parents->clear();
        }
    }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents, Vjp vjp,
               const char* op) {
    check(numel(shape) == static_cast<int64_t>(value.size()),
          std::string(op) + ": value size does not match shape " + shape_str(shape));
    bool rg = false;
    if (g_grad_enabled)
        for (const auto& p : parents) rg = rg || p.requires_grad();
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->op = op;
    if (rg) {
        n->requires_grad = true;
        n->parents = new std::vector<Tensor>(std::move(parents));
        n->vjp = std::move(vjp);
    }
    Tensor t;
    t.n_ = std::move(n);
    return t;
}

// --- Tensor ------------------------------------------------------------------

Tensor Tensor::constant(Shape shape, std::vector<double> value) {
    return make_op(std::move(shape), std::move(value), {}, {}, "leaf");
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::zeros(Shape shape) {
    std::vector<double> v(static_cast<size_t>(dermx::ad::numel(shape)), 0.0);
    return constant(std::move(shape), std::move(v));
}

Tensor Tensor::full(Shape shape, double fill) {
    std::vector<double> v(static_cast<size_t>(dermx::ad::numel(shape)), fill);
    return constant(std::move(shape), std::move(v));
}

Tensor Tensor::param(Shape shape, std::vector<double> value) {
    Tensor t = constant(std::move(shape), std::move(value));
    t.n_->requires_grad = true;
    t.n_->op = "param";
    return t;
}

std::vector<double>& Tensor::leaf_data() {
    check(n_ && !n_->parents, "leaf_data() is only valid on leaves");
    return n_->value;
}

double Tensor::item() const {
    check(n_ && n_->value.size() == 1, "item() requires a scalar tensor");
    return n_->value[0];
}

Tensor Tensor::detach() const {
    check(n_ != nullptr, "detach() on undefined tensor");
    return constant(n_->shape, n_->value);
}

// --- elementwise -------------------------------------------------------------

namespace {

const std::vector<double>& val(const Tensor& t) { return t.data(); }

const Tensor& parent(const Tensor& self, size_t i) { return self.node()->parents->at(i); }

bool needs(const Tensor& self, size_t i) { return parent(self, i).requires_grad(); }

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    check(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                      " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(val(a).size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = val(a)[i] + val(b)[i];
    return make_op(a.shape(), std::move(out), {a, b},
                   [](const Tensor& self, const Tensor& g) -> std::vector<Tensor> {
                       return {needs(self, 0) ? g : Tensor(), needs(self, 1) ? g : Tensor()};
                   },
                   "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> out(val(a).size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = val(a)[i] - val(b)[i];
    return make_op(a.shape(), std::move(out), {a, b},
                   [](const Tensor& self, const Tensor& g) -> std::vector<Tensor> {
                       return {needs(self, 0) ? g : Tensor(), needs(self, 1) ? neg(g) : Tensor()};
                   },
                   "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> out(val(a).size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = val(a)[i] * val(b)[i];
    return make_op(a.shape(), std::move(out), {a, b},
                   [](const Tensor& self, const Tensor& g) -> std::vector<Tensor> {
                       return {needs(self, 0) ? mul(g, parent(self, 1)) : Tensor(),
                               needs(self, 1) ? mul(g, parent(self, 0)) : Tensor()};
                   },
                   "mul");
}

Tensor div(const Tensor& a, const Tensor& b) { return mul(a, reciprocal(b)); }

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor add_scalar(const Tensor& a, double s) {
    std::vector<double> out(val(a).size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = val(a)[i] + s;
    return make_op(a.shape(), std::move(out), {a},
                   [](const Tensor&, const Tensor& g) -> std::vector<Tensor> { return {g}; },
                   "add_scalar");
}

Tensor mul_scalar(const Tensor& a, double s) {
    std::vector<double> out(val(a).size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = val(a)[i] * s;
    return make_op(a.shape(), std::move(out), {a},
                   [s](const Tensor&, const Tensor& g) -> std::vector<Tensor> {
                       return {mul_scalar(g, s)};
                   },
                   "mul_scalar");
}

Tensor exp(const Tensor& a) {
    std::vector<double> out(val(a).size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(val(a)[i]);
    return make_op(a.shape(), std::move(out), {a},
                   [](const Tensor& self, const Tensor& g) -> std::vector<Tensor> {
                       return {mul(g, self)};
                   },
                   "exp");
}

Tensor log(const Tensor& a) {
    std::vector<double> out(val(a).size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(val(a)[i]);
    return make_op(a.shape(), std::move(out), {a},
                   [](const Tensor& self, const Tensor& g) -> std::vector<Tensor> {
                       return {mul(g, reciprocal(parent(self, 0)))};
                   },
                   "log");
}

Tensor sqrt(const Tensor& a) {
    std::vector<double> out(val(a).size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(val(a)[i]);
    return make_op(a.shape(), std::move(out), {a},
                   [](const Tensor& self, const Tensor& g) -> std::vector<Tensor> {
                       return {mul(g, mul_scalar(reciprocal(self), 0.5))};
                   },
                   "sqrt");
}

Tensor reciprocal(const Tensor& a) {
    std::vector<double> out(val(a).size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / val(a)[i];
    return make_op(a.shape(), std::move(out), {a},
                   [](const Tensor& self, const Tensor& g) -> std::vector<Tensor> {
                       return {neg(mul(g, mul(self, self)))};
                   },
                   "reciprocal");
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(val(a).size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = val(a)[i] > 0.0 ? val(a)[i] : 0.0;
    return make_op(a.shape(), std::move(out), {a},
                   [](const Tensor& self, const Tensor& g) -> std::vector<Tensor> {
                       const auto& x = val(parent(self, 0));
                       std::vector<double> mask(x.size());
                       for (size_t i = 0; i < x.size(); ++i) mask[i] = x[i] > 0.0 ? 1.0 : 0.0;
                       return {mul(g, Tensor::constant(self.shape(), std::move(mask)))};
                   },
                   "relu");
}

Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(val(a).size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double x = val(a)[i];
        out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    return make_op(a.shape(), std::move(out), {a},
                   [](const Tensor& self, const Tensor& g) -> std::vector<Tensor> {
                       // g * s * (1 - s)
                       return {mul(g, mul(self, add_scalar(neg(self), 1.0)))};
                   },
                   "sigmoid");
}

Tensor silu(const Tensor& a) { return mul(a, sigmoid(a)); }

Tensor clamp(const Tensor& a, double lo, double hi) {
    std::vector<double> out(val(a).size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(val(a)[i], lo, hi);
    return make_op(a.shape(), std::move(out), {a},
                   [lo, hi](const Tensor& self, const Tensor& g) -> std::vector<Tensor> {
                       const auto& x = val(parent(self, 0));
                       std::vector<double> mask(x.size());
                       for (size_t i = 0; i < x.size(); ++i)
                           mask[i] = (x[i] >= lo && x[i] <= hi) ? 1.0 : 0.0;
                       return {mul(g, Tensor::constant(self.shape(), std::move(mask)))};
                   },
                   "clamp");
}

// --- linear / structural -----------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    check(a.shape().size() == 2 && b.shape().size() == 2, "matmul expects 2-D operands");
    const int64_t m = a.shape()[0], k = a.shape()[1], k2 = b.shape()[0], n = b.shape()[1];
    check(k == k2, "matmul inner dimensions differ: " + shape_str(a.shape()) + " x " +
                       shape_str(b.shape()));
    std::vector<double> out(static_cast<size_t>(m) * n);
    {
        Eigen::Map<const RowMat> A(val(a).data(), m, k);
        Eigen::Map<const RowMat> B(val(b).data(), k, n);
        Eigen::Map<RowMat> O(out.data(), m, n);
        O.noalias() = A * B;
    }
    return make_op({m, n}, std::move(out), {a, b},
                   [](const Tensor& self, const Tensor& g) -> std::vector<Tensor> {
                       return {needs(self, 0) ? matmul(g, transpose(parent(self, 1))) : Tensor(),
                               needs(self, 1) ? matmul(transpose(parent(self, 0)), g) : Tensor()};
                   },
                   "matmul");
}

Tensor transpose(const Tensor& a) {
    check(a.shape().size() == 2, "transpose expects a 2-D tensor");
    const int64_t r = a.shape()[0], c = a.shape()[1];
    std::vector<double> out(val(a).size());
    for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) out[j * r + i] = val(a)[i * c + j];
    return make_op({c, r}, std::move(out), {a},
                   [](const Tensor&, const Tensor& g) -> std::vector<Tensor> {
                       return {transpose(g)};
                   },
                   "transpose");
}

Tensor reshape(const Tensor& a, Shape shape) {
    check(numel(shape) == a.numel(), "reshape: element count mismatch");
    Shape original = a.shape();
    return make_op(std::move(shape), val(a), {a},
                   [original](const Tensor&, const Tensor& g) -> std::vector<Tensor> {
                       return {reshape(g, original)};
                   },
                   "reshape");
}

Tensor gather(const Tensor& a, const IndexMap& idx, Shape out_shape) {
    check(numel(out_shape) == static_cast<int64_t>(idx->size()), "gather: index map size mismatch");
    std::vector<double> out(idx->size());
    const auto& src = val(a);
    for (size_t k = 0; k < idx->size(); ++k) {
        const int64_t i = (*idx)[k];
        out[k] = i >= 0 ? src[static_cast<size_t>(i)] : 0.0;
    }
    Shape in_shape = a.shape();
    return make_op(std::move(out_shape), std::move(out), {a},
                   [idx, in_shape](const Tensor&, const Tensor& g) -> std::vector<Tensor> {
                       return {scatter_add(g, idx, in_shape)};
                   },
                   "gather");
}

Tensor scatter_add(const Tensor& a, const IndexMap& idx, Shape out_shape) {
    check(static_cast<int64_t>(idx->size()) == a.numel(), "scatter_add: index map size mismatch");
    std::vector<double> out(static_cast<size_t>(numel(out_shape)), 0.0);
    const auto& src = val(a);
    for (size_t k = 0; k < idx->size(); ++k) {
        const int64_t i = (*idx)[k];
        if (i >= 0) out[static_cast<size_t>(i)] += src[k];
    }
    Shape in_shape = a.shape();
    return make_op(std::move(out_shape), std::move(out), {a},
                   [idx, in_shape](const Tensor&, const Tensor& g) -> std::vector<Tensor> {
                       return {gather(g, idx, in_shape)};
                   },
                   "scatter_add");
}

// --- reductions / selectors --------------------------------------------------

Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double x : val(a)) s += x;
    Shape in_shape = a.shape();
    const int64_t n = a.numel();
    return make_op({1}, {s}, {a},
                   [in_shape, n](const Tensor&, const Tensor& g) -> std::vector<Tensor> {
                       return {gather(g, zero_map(n), in_shape)};
                   },
                   "sum_all");
}

Tensor row_sum(const Tensor& a) {
    check(a.shape().size() == 2, "row_sum expects a 2-D tensor");
    const int64_t r = a.shape()[0], c = a.shape()[1];
    std::vector<double> out(static_cast<size_t>(r), 0.0);
    for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) out[i] += val(a)[i * c + j];
    return make_op({r}, std::move(out), {a},
                   [r, c](const Tensor&, const Tensor& g) -> std::vector<Tensor> {
                       return {gather(g, row_of_map(r, c), {r, c})};
                   },
                   "row_sum");
}

namespace {

Tensor row_extremum(const Tensor& a, bool take_max, const char* op) {
    check(a.shape().size() == 2, std::string(op) + " expects a 2-D tensor");
    const int64_t r = a.shape()[0], c = a.shape()[1];
    std::vector<double> out(static_cast<size_t>(r));
    auto arg = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(r));
    for (int64_t i = 0; i < r; ++i) {
        int64_t best = i * c;
        for (int64_t j = 1; j < c; ++j) {
            const bool better = take_max ? val(a)[i * c + j] > val(a)[best]
                                         : val(a)[i * c + j] < val(a)[best];
            if (better) best = i * c + j;
        }
        out[static_cast<size_t>(i)] = val(a)[best];
        (*arg)[static_cast<size_t>(i)] = best;
    }
    IndexMap amap = arg;
    Shape in_shape = a.shape();
    return make_op({r}, std::move(out), {a},
                   [amap, in_shape](const Tensor&, const Tensor& g) -> std::vector<Tensor> {
                       return {scatter_add(g, amap, in_shape)};
                   },
                   op);
}

}  // namespace

Tensor row_max(const Tensor& a) { return row_extremum(a, true, "row_max"); }
Tensor row_min(const Tensor& a) { return row_extremum(a, false, "row_min"); }

// --- composite helpers -------------------------------------------------------

Tensor mean_all(const Tensor& a) { return mul_scalar(sum_all(a), 1.0 / a.numel()); }

Tensor broadcast_rows(const Tensor& v, int64_t rows) {
    check(v.shape().size() == 1, "broadcast_rows expects a 1-D tensor");
    const int64_t c = v.shape()[0];
    return gather(v, tile_rows_map(rows, c), {rows, c});
}

Tensor broadcast_cols(const Tensor& v, int64_t cols) {
    check(v.shape().size() == 1, "broadcast_cols expects a 1-D tensor");
    const int64_t r = v.shape()[0];
    return gather(v, row_of_map(r, cols), {r, cols});
}

Tensor softmax_rows(const Tensor& a) {
    check(a.shape().size() == 2, "softmax_rows expects a 2-D tensor");
    const int64_t c = a.shape()[1];
    // shifting by a detached row max keeps softmax exact and stable
    Tensor shifted = sub(a, broadcast_cols(row_max(a).detach(), c));
    Tensor e = exp(shifted);
    return mul(e, broadcast_cols(reciprocal(row_sum(e)), c));
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    check(a.shape().size() == 2 && b.shape().size() == 2 && a.shape()[0] == b.shape()[0],
          "concat_cols expects 2-D tensors with equal row counts");
    const int64_t r = a.shape()[0], p = a.shape()[1], q = b.shape()[1];
    static std::mutex mu;
    static std::unordered_map<std::string, std::pair<IndexMap, IndexMap>> cache;
    std::pair<IndexMap, IndexMap> maps;
    {
        std::lock_guard<std::mutex> lock(mu);
        const std::string key = std::to_string(r) + ":" + std::to_string(p) + ":" + std::to_string(q);
        auto it = cache.find(key);
        if (it == cache.end()) {
            auto ma = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(r * p));
            auto mb = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(r * q));
            for (int64_t i = 0; i < r; ++i) {
                for (int64_t j = 0; j < p; ++j) (*ma)[i * p + j] = i * (p + q) + j;
                for (int64_t j = 0; j < q; ++j) (*mb)[i * q + j] = i * (p + q) + p + j;
            }
            it = cache.emplace(key, std::make_pair(IndexMap(ma), IndexMap(mb))).first;
        }
        maps = it->second;
    }
    return add(scatter_add(a, maps.first, {r, p + q}), scatter_add(b, maps.second, {r, p + q}));
}

// --- autodiff ----------------------------------------------------------------

std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& wrt, bool create_graph) {
    check(output.defined() && output.numel() == 1, "grad() requires a defined scalar output");
    std::vector<Tensor> result(wrt.size());

    auto zeros_like = [](const Tensor& t) { return Tensor::zeros(t.shape()); };
    if (!output.requires_grad()) {
        for (size_t i = 0; i < wrt.size(); ++i) result[i] = zeros_like(wrt[i]);
        return result;
    }

    // iterative DFS topological order over the requires_grad subgraph
    std::vector<Tensor> topo;
    std::unordered_set<Node*> visited;
    struct Frame {
        Tensor t;
        size_t next_child = 0;
    };
    std::vector<Frame> stack;
    stack.push_back({output, 0});
    visited.insert(output.node());
    while (!stack.empty()) {
        Frame& f = stack.back();
        Node* n = f.t.node();
        const size_t n_children = n->parents ? n->parents->size() : 0;
        if (f.next_child < n_children) {
            const Tensor& child = (*n->parents)[f.next_child++];
            if (child.requires_grad() && !visited.count(child.node())) {
                visited.insert(child.node());
                stack.push_back({child, 0});
            }
        } else {
            topo.push_back(f.t);
            stack.pop_back();
        }
    }

    std::unordered_map<Node*, Tensor> grads;
    grads[output.node()] = Tensor::full(output.shape(), 1.0);

    std::unique_ptr<NoGradGuard> guard;
    if (!create_graph) guard = std::make_unique<NoGradGuard>();

    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        const Tensor& t = *it;
        auto git = grads.find(t.node());
        if (git == grads.end()) continue;
        Tensor g = git->second;
        if (!t.node()->parents) continue;
        std::vector<Tensor> pgrads = t.node()->vjp(t, g);
        check(pgrads.size() == t.node()->parents->size(),
              std::string(t.node()->op) + ": vjp returned wrong arity");
        for (size_t i = 0; i < pgrads.size(); ++i) {
            const Tensor& p = (*t.node()->parents)[i];
            if (!p.requires_grad() || !pgrads[i].defined()) continue;
            check(pgrads[i].shape() == p.shape(),
                  std::string(t.node()->op) + ": vjp shape mismatch for parent " + std::to_string(i));
            auto slot = grads.find(p.node());
            if (slot == grads.end()) {
                grads.emplace(p.node(), pgrads[i]);
            } else {
                slot->second = add(slot->second, pgrads[i]);
            }
        }
    }

    for (size_t i = 0; i < wrt.size(); ++i) {
        auto it = grads.find(wrt[i].node());
        result[i] = it == grads.end() ? zeros_like(wrt[i]) : it->second;
    }
    return result;
}

// --- cached index maps ---------------------------------------------------------

namespace {

std::mutex g_map_mutex;
std::unordered_map<std::string, IndexMap> g_map_cache;

IndexMap cached(const std::string& key, const std::function<std::vector<int64_t>()>& build) {
    std::lock_guard<std::mutex> lock(g_map_mutex);
    auto it = g_map_cache.find(key);
    if (it != g_map_cache.end()) return it->second;
    auto m = std::make_shared<std::vector<int64_t>>(build());
    g_map_cache.emplace(key, m);
    return m;
}

}  // namespace

IndexMap im2col_map(const ConvGeometry& g) {
    std::ostringstream key;
    key << "im2col:" << g.n << "," << g.c_in << "," << g.h << "," << g.w << "," << g.kh << ","
        << g.kw << "," << g.stride << "," << g.pad_top << "," << g.pad_left << "," << g.pad_bottom
        << "," << g.pad_right;
    return cached(key.str(), [g]() {
        const int64_t oh = g.out_h(), ow = g.out_w();
        std::vector<int64_t> idx(static_cast<size_t>(g.n * oh * ow * g.c_in * g.kh * g.kw));
        size_t k = 0;
        for (int64_t n = 0; n < g.n; ++n)
            for (int64_t oy = 0; oy < oh; ++oy)
                for (int64_t ox = 0; ox < ow; ++ox)
                    for (int64_t c = 0; c < g.c_in; ++c)
                        for (int64_t ky = 0; ky < g.kh; ++ky)
                            for (int64_t kx = 0; kx < g.kw; ++kx) {
                                const int64_t y = oy * g.stride + ky - g.pad_top;
                                const int64_t x = ox * g.stride + kx - g.pad_left;
                                idx[k++] = (y < 0 || y >= g.h || x < 0 || x >= g.w)
                                               ? -1
                                               : ((n * g.c_in + c) * g.h + y) * g.w + x;
                            }
        return idx;
    });
}

IndexMap im2col_depthwise_map(const ConvGeometry& g) {
    std::ostringstream key;
    key << "im2col_dw:" << g.n << "," << g.c_in << "," << g.h << "," << g.w << "," << g.kh << ","
        << g.kw << "," << g.stride << "," << g.pad_top << "," << g.pad_left << "," << g.pad_bottom
        << "," << g.pad_right;
    return cached(key.str(), [g]() {
        const int64_t oh = g.out_h(), ow = g.out_w();
        std::vector<int64_t> idx(static_cast<size_t>(g.n * g.c_in * oh * ow * g.kh * g.kw));
        size_t k = 0;
        for (int64_t n = 0; n < g.n; ++n)
            for (int64_t c = 0; c < g.c_in; ++c)
                for (int64_t oy = 0; oy < oh; ++oy)
                    for (int64_t ox = 0; ox < ow; ++ox)
                        for (int64_t ky = 0; ky < g.kh; ++ky)
                            for (int64_t kx = 0; kx < g.kw; ++kx) {
                                const int64_t y = oy * g.stride + ky - g.pad_top;
                                const int64_t x = ox * g.stride + kx - g.pad_left;
                                idx[k++] = (y < 0 || y >= g.h || x < 0 || x >= g.w)
                                               ? -1
                                               : ((n * g.c_in + c) * g.h + y) * g.w + x;
                            }
        return idx;
    });
}

IndexMap nhwc_to_nchw_map(int64_t n, int64_t hw, int64_t c) {
    const std::string key = "nhwc:" + std::to_string(n) + ":" + std::to_string(hw) + ":" + std::to_string(c);
    return cached(key, [n, hw, c]() {
        // output laid out (n, c, p); element read from (n, p, c)
        std::vector<int64_t> idx(static_cast<size_t>(n * hw * c));
        size_t k = 0;
        for (int64_t i = 0; i < n; ++i)
            for (int64_t ch = 0; ch < c; ++ch)
                for (int64_t p = 0; p < hw; ++p) idx[k++] = (i * hw + p) * c + ch;
        return idx;
    });
}

IndexMap tile_rows_map(int64_t rows, int64_t cols) {
    const std::string key = "tile_rows:" + std::to_string(rows) + ":" + std::to_string(cols);
    return cached(key, [rows, cols]() {
        std::vector<int64_t> idx(static_cast<size_t>(rows * cols));
        for (int64_t i = 0; i < rows * cols; ++i) idx[static_cast<size_t>(i)] = i % cols;
        return idx;
    });
}

IndexMap tile_cols_map(int64_t rows, int64_t cols) { return row_of_map(rows, cols); }

IndexMap channel_of_nchw_map(int64_t n, int64_t c, int64_t hw) {
    const std::string key =
        "chan:" + std::to_string(n) + ":" + std::to_string(c) + ":" + std::to_string(hw);
    return cached(key, [n, c, hw]() {
        std::vector<int64_t> idx(static_cast<size_t>(n * c * hw));
        for (int64_t k = 0; k < n * c * hw; ++k) idx[static_cast<size_t>(k)] = (k / hw) % c;
        return idx;
    });
}

IndexMap row_of_map(int64_t rows, int64_t cols) {
    const std::string key = "row_of:" + std::to_string(rows) + ":" + std::to_string(cols);
    return cached(key, [rows, cols]() {
        std::vector<int64_t> idx(static_cast<size_t>(rows * cols));
        for (int64_t k = 0; k < rows * cols; ++k) idx[static_cast<size_t>(k)] = k / cols;
        return idx;
    });
}

IndexMap sum_channels_map(int64_t n, int64_t c, int64_t hw) {
    const std::string key =
        "sumchan:" + std::to_string(n) + ":" + std::to_string(c) + ":" + std::to_string(hw);
    return cached(key, [n, c, hw]() {
        std::vector<int64_t> idx(static_cast<size_t>(n * c * hw));
        size_t k = 0;
        for (int64_t i = 0; i < n; ++i)
            for (int64_t ch = 0; ch < c; ++ch)
                for (int64_t p = 0; p < hw; ++p) idx[k++] = i * hw + p;
        return idx;
    });
}

IndexMap dw_weight_tile_map(int64_t n, int64_t c, int64_t ohw, int64_t kk) {
    const std::string key = "dwtile:" + std::to_string(n) + ":" + std::to_string(c) + ":" +
                            std::to_string(ohw) + ":" + std::to_string(kk);
    return cached(key, [n, c, ohw, kk]() {
        std::vector<int64_t> idx(static_cast<size_t>(n * c * ohw * kk));
        size_t k = 0;
        for (int64_t i = 0; i < n; ++i)
            for (int64_t ch = 0; ch < c; ++ch)
                for (int64_t p = 0; p < ohw; ++p)
                    for (int64_t j = 0; j < kk; ++j) idx[k++] = ch * kk + j;
        return idx;
    });
}

IndexMap zero_map(int64_t n) {
    const std::string key = "zero:" + std::to_string(n);
    return cached(key, [n]() { return std::vector<int64_t>(static_cast<size_t>(n), 0); });
}

}  // namespace dermx::ad
