#include "hessgan/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "hessgan/errors.hpp"
#include "hessgan/kernels.hpp"

namespace hessgan {

// ---------------------------------------------------------------------------
// Activations

ActivationSpec ActivationSpec::parse(std::string_view text) {
    if (text == "tanh") return {Activation::tanh};
    if (text == "relu") return {Activation::relu};
    if (text == "sigmoid") return {Activation::sigmoid};
    if (text == "identity" || text == "linear") return {Activation::identity};
    if (text.starts_with("leaky-relu") || text.starts_with("leaky_relu")) {
        ActivationSpec spec{Activation::leaky_relu};
        auto open = text.find('(');
        if (open != std::string_view::npos) {
            auto close = text.find(')', open);
            if (close == std::string_view::npos) {
                throw ConfigError("unterminated activation argument: " + std::string(text));
            }
            spec.slope = std::stod(std::string(text.substr(open + 1, close - open - 1)));
        }
        return spec;
    }
    throw ConfigError("unknown activation '" + std::string(text) + "'");
}

std::string ActivationSpec::name() const {
    switch (kind) {
        case Activation::tanh:
            return "tanh";
        case Activation::relu:
            return "relu";
        case Activation::leaky_relu: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "leaky-relu(%.17g)", slope);
            return buf;
        }
        case Activation::sigmoid:
            return "sigmoid";
        case Activation::identity:
            return "identity";
    }
    return "?";
}

namespace {

double activate(const ActivationSpec& act, double z) {
    switch (act.kind) {
        case Activation::tanh:
            return std::tanh(z);
        case Activation::relu:
            return z > 0.0 ? z : 0.0;
        case Activation::leaky_relu:
            return z > 0.0 ? z : act.slope * z;
        case Activation::sigmoid:
            return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        case Activation::identity:
            return z;
    }
    return z;
}

// First and second derivative of the activation, expressed through z and a = σ(z).
// Kinks (relu family at exactly 0) use the left derivative and a zero second derivative.
double activation_d1(const ActivationSpec& act, double z, double a) {
    switch (act.kind) {
        case Activation::tanh:
            return 1.0 - a * a;
        case Activation::relu:
            return z > 0.0 ? 1.0 : 0.0;
        case Activation::leaky_relu:
            return z > 0.0 ? 1.0 : act.slope;
        case Activation::sigmoid:
            return a * (1.0 - a);
        case Activation::identity:
            return 1.0;
    }
    return 1.0;
}

double activation_d2(const ActivationSpec& act, double a) {
    switch (act.kind) {
        case Activation::tanh:
            return -2.0 * a * (1.0 - a * a);
        case Activation::sigmoid:
            return a * (1.0 - a) * (1.0 - 2.0 * a);
        default:
            return 0.0;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// MlpNetwork

MlpNetwork::MlpNetwork(std::vector<std::size_t> layer_dims, std::vector<ActivationSpec> activations)
    : dims_(std::move(layer_dims)), activations_(std::move(activations)) {
    if (dims_.size() < 3) {
        throw ConfigError("an MLP needs at least one hidden layer (got " +
                          std::to_string(dims_.size()) + " layer dims)");
    }
    if (activations_.size() + 1 != dims_.size()) {
        throw ConfigError("activation count " + std::to_string(activations_.size()) +
                          " does not match layer count " + std::to_string(dims_.size() - 1));
    }
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (dims_[i] == 0) throw ConfigError("layer dim " + std::to_string(i) + " is zero");
    }
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        offsets_.push_back(offsets_.back() + dims_[l] * dims_[l + 1] + dims_[l + 1]);
    }
}

ParamVector MlpNetwork::init_params(std::uint64_t seed) const {
    ParamVector p(param_count(), 0.0);
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < num_layers(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layer_in(l) + layer_out(l)));
        std::uniform_real_distribution<double> dist(-limit, limit);
        const std::size_t off = weight_offset(l);
        for (std::size_t i = 0; i < layer_in(l) * layer_out(l); ++i) p[off + i] = dist(rng);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Losses

ScalarLossSpec ScalarLossSpec::bce(std::vector<double> labels) {
    ScalarLossSpec s;
    s.kind = Kind::binary_cross_entropy;
    s.targets = std::move(labels);
    return s;
}

ScalarLossSpec ScalarLossSpec::of(Kind kind) {
    ScalarLossSpec s;
    s.kind = kind;
    return s;
}

ScalarLossSpec ScalarLossSpec::squared(std::vector<double> targets) {
    ScalarLossSpec s;
    s.kind = Kind::squared_error;
    s.targets = std::move(targets);
    return s;
}

namespace {

using Kind = ScalarLossSpec::Kind;

void validate_loss(const ScalarLossSpec& loss, std::size_t rows, std::size_t cols) {
    const bool scalar_head = loss.kind == Kind::binary_cross_entropy || loss.kind == Kind::neg_log ||
                             loss.kind == Kind::log_one_minus;
    if (scalar_head && cols != 1) {
        throw ConfigError("probability losses need a single output column, network has " +
                          std::to_string(cols));
    }
    if (loss.kind == Kind::binary_cross_entropy && loss.targets.size() != rows) {
        throw ConfigError("bce loss: " + std::to_string(loss.targets.size()) + " labels for " +
                          std::to_string(rows) + " rows");
    }
    if (loss.kind == Kind::squared_error && loss.targets.size() != rows * cols) {
        throw ConfigError("squared-error loss: target size does not match output");
    }
    if (!loss.row_weights.empty() && loss.row_weights.size() != rows) {
        throw ConfigError("loss row weights do not match the batch size");
    }
}

double row_weight(const ScalarLossSpec& loss, std::size_t r, std::size_t rows) {
    return loss.row_weights.empty() ? 1.0 / static_cast<double>(rows) : loss.row_weights[r];
}

bool clamped(double p) { return p < kProbClamp || p > 1.0 - kProbClamp; }
double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

// Loss of one output row.
double row_loss(const ScalarLossSpec& loss, std::span<const double> out, std::size_t r) {
    switch (loss.kind) {
        case Kind::binary_cross_entropy: {
            const double p = clamp_prob(out[0]);
            const double y = loss.targets[r];
            return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        }
        case Kind::neg_log:
            return -std::log(clamp_prob(out[0]));
        case Kind::log_one_minus:
            return std::log(1.0 - clamp_prob(out[0]));
        case Kind::squared_error: {
            double s = 0.0;
            for (std::size_t c = 0; c < out.size(); ++c) {
                const double d = out[c] - loss.targets[r * out.size() + c];
                s += d * d;
            }
            return 0.5 * s;
        }
        case Kind::linear: {
            double s = 0.0;
            for (double v : out) s += v;
            return s;
        }
    }
    return 0.0;
}

// d(row loss)/d(out) and the diagonal second derivative (all losses here have
// diagonal output Hessians). The clamp is flat, so both vanish outside it.
void row_loss_derivs(const ScalarLossSpec& loss, std::span<const double> out, std::size_t r,
                     std::span<double> d1, std::span<double> d2) {
    switch (loss.kind) {
        case Kind::binary_cross_entropy:
        case Kind::neg_log:
        case Kind::log_one_minus: {
            const double p = out[0];
            if (clamped(p)) {
                d1[0] = 0.0;
                d2[0] = 0.0;
                return;
            }
            if (loss.kind == Kind::neg_log) {
                d1[0] = -1.0 / p;
                d2[0] = 1.0 / (p * p);
            } else if (loss.kind == Kind::log_one_minus) {
                d1[0] = -1.0 / (1.0 - p);
                d2[0] = -1.0 / ((1.0 - p) * (1.0 - p));
            } else {
                const double y = loss.targets[r];
                d1[0] = -y / p + (1.0 - y) / (1.0 - p);
                d2[0] = y / (p * p) + (1.0 - y) / ((1.0 - p) * (1.0 - p));
            }
            return;
        }
        case Kind::squared_error:
            for (std::size_t c = 0; c < out.size(); ++c) {
                d1[c] = out[c] - loss.targets[r * out.size() + c];
                d2[c] = 1.0;
            }
            return;
        case Kind::linear:
            std::fill(d1.begin(), d1.end(), 1.0);
            std::fill(d2.begin(), d2.end(), 0.0);
            return;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Engine

namespace {

struct LayerRef {
    std::size_t in = 0;
    std::size_t out = 0;
    ActivationSpec act;
    const double* weights = nullptr;
    const double* bias = nullptr;
    bool trainable = false;
    std::size_t grad_offset = 0;  // weights; bias follows
};

}  // namespace

/// Forward/backward state of the stack at one parameter point. Holds
/// everything the R-operator pass needs so each Hessian-vector product only
/// runs the two linearized passes.
struct Linearization {
    std::vector<LayerRef> layers;
    ParamVector point;           // owns the trainable parameters `layers` point into
    std::vector<Matrix> act;     // act[0] = input, act[l+1] = output of layer l
    std::vector<Matrix> d1;      // σ'(z) per layer
    std::vector<Matrix> d2;      // σ''(z) per layer
    std::vector<Matrix> grad_act;  // dL/da per layer output
    std::vector<Matrix> delta;     // dL/dz per layer
    Matrix loss_d2;              // diagonal output Hessian of the weighted loss
    std::size_t first_trainable = 0;
    std::size_t dim = 0;
    double value = 0.0;
};

namespace {

void forward_layer(const LayerRef& layer, const Matrix& input, Matrix& z_out) {
    const std::size_t rows = input.rows();
    z_out = Matrix(rows, layer.out);
    for (std::size_t r = 0; r < rows; ++r) {
        auto x = input.row(r);
        auto z = z_out.row(r);
        for (std::size_t o = 0; o < layer.out; ++o) {
            z[o] = layer.bias[o] +
                   kernels::active().dot(layer.weights + o * layer.in, x.data(), layer.in);
        }
    }
}

// out(r) += Σ_o coeff(r,o) * W_o   (row-vector times weight matrix)
void accumulate_transpose(const double* weights, std::size_t in, const Matrix& coeff, Matrix& out) {
    const auto& k = kernels::active();
    for (std::size_t r = 0; r < coeff.rows(); ++r) {
        auto c = coeff.row(r);
        double* dst = out.row(r).data();
        for (std::size_t o = 0; o < coeff.cols(); ++o) {
            if (c[o] != 0.0) k.axpy(c[o], weights + o * in, dst, in);
        }
    }
}

// grad_W(o) += Σ_r coeff(r,o) * x(r);  grad_b(o) += Σ_r coeff(r,o) (when with_bias)
void accumulate_outer(const Matrix& coeff, const Matrix& x, double* grad_w, double* grad_b,
                      bool with_bias) {
    const auto& k = kernels::active();
    const std::size_t in = x.cols();
    for (std::size_t r = 0; r < coeff.rows(); ++r) {
        auto c = coeff.row(r);
        const double* xr = x.row(r).data();
        for (std::size_t o = 0; o < coeff.cols(); ++o) {
            if (c[o] == 0.0) continue;
            k.axpy(c[o], xr, grad_w + o * in, in);
            if (with_bias) grad_b[o] += c[o];
        }
    }
}

}  // namespace

StackObjective::StackObjective(std::vector<StackSegment> segments, ScalarLossSpec loss, Batch batch)
    : segments_(std::move(segments)), loss_(std::move(loss)), batch_(std::move(batch)) {
    if (segments_.empty()) throw ConfigError("empty network stack");
    if (batch_.rows() == 0) throw ConfigError("empty batch");
    std::size_t layer_index = 0;
    for (std::size_t s = 0; s < segments_.size(); ++s) {
        const auto& seg = segments_[s];
        const std::size_t expected_in = s == 0 ? batch_.cols() : segments_[s - 1].net.output_dim();
        if (seg.net.input_dim() != expected_in) {
            throw ConfigError("layer " + std::to_string(layer_index) + " expects input dim " +
                              std::to_string(seg.net.input_dim()) + ", got " +
                              std::to_string(expected_in));
        }
        if (seg.trainable) {
            dim_ += seg.net.param_count();
        } else if (seg.frozen_params.size() != seg.net.param_count()) {
            throw ConfigError("frozen segment " + std::to_string(s) + " has " +
                              std::to_string(seg.frozen_params.size()) + " params, network needs " +
                              std::to_string(seg.net.param_count()));
        }
        layer_index += seg.net.num_layers();
    }
    validate_loss(loss_, batch_.rows(), segments_.back().net.output_dim());
}

std::shared_ptr<Linearization> StackObjective::linearize(std::span<const double> w,
                                                         bool with_grad) const {
    if (w.size() != dim_) {
        throw ConfigError("parameter vector has length " + std::to_string(w.size()) +
                          ", network stack needs " + std::to_string(dim_));
    }
    auto lin = std::make_shared<Linearization>();
    lin->point.assign(w.begin(), w.end());
    lin->dim = dim_;

    std::size_t trainable_off = 0;
    bool seen_trainable = false;
    for (const auto& seg : segments_) {
        const double* base = seg.trainable ? lin->point.data() + trainable_off : seg.frozen_params.data();
        for (std::size_t l = 0; l < seg.net.num_layers(); ++l) {
            LayerRef ref;
            ref.in = seg.net.layer_in(l);
            ref.out = seg.net.layer_out(l);
            ref.act = seg.net.activation(l);
            ref.weights = base + seg.net.weight_offset(l);
            ref.bias = base + seg.net.bias_offset(l);
            ref.trainable = seg.trainable;
            ref.grad_offset = trainable_off + seg.net.weight_offset(l);
            if (seg.trainable && !seen_trainable) {
                lin->first_trainable = lin->layers.size();
                seen_trainable = true;
            }
            lin->layers.push_back(ref);
        }
        if (seg.trainable) trainable_off += seg.net.param_count();
    }
    if (!seen_trainable) lin->first_trainable = lin->layers.size();

    const std::size_t n_layers = lin->layers.size();
    const std::size_t rows = batch_.rows();
    lin->act.resize(n_layers + 1);
    lin->d1.resize(n_layers);
    lin->d2.resize(n_layers);
    lin->act[0] = batch_;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& layer = lin->layers[l];
        Matrix z;
        forward_layer(layer, lin->act[l], z);
        Matrix a(rows, layer.out);
        lin->d1[l] = Matrix(rows, layer.out);
        lin->d2[l] = Matrix(rows, layer.out);
        for (std::size_t i = 0; i < z.data().size(); ++i) {
            const double zi = z.data()[i];
            const double ai = activate(layer.act, zi);
            a.data()[i] = ai;
            lin->d1[l].data()[i] = activation_d1(layer.act, zi, ai);
            lin->d2[l].data()[i] = activation_d2(layer.act, ai);
        }
        lin->act[l + 1] = std::move(a);
    }

    const Matrix& out = lin->act.back();
    double value = 0.0;
    for (std::size_t r = 0; r < rows; ++r) value += row_weight(loss_, r, rows) * row_loss(loss_, out.row(r), r);
    if (!std::isfinite(value)) throw NumericalError("non-finite loss value in forward pass");
    lin->value = value;
    if (!with_grad) return lin;

    // Backward pass; keeps dL/dz of every layer for the R-operator.
    Matrix grad_out(rows, out.cols());
    lin->loss_d2 = Matrix(rows, out.cols());
    for (std::size_t r = 0; r < rows; ++r) {
        row_loss_derivs(loss_, out.row(r), r, grad_out.row(r), lin->loss_d2.row(r));
        const double wr = row_weight(loss_, r, rows);
        for (auto& g : grad_out.row(r)) g *= wr;
        for (auto& h : lin->loss_d2.row(r)) h *= wr;
    }
    lin->delta.resize(n_layers);
    lin->grad_act.resize(n_layers);
    Matrix grad_act = std::move(grad_out);
    for (std::size_t l = n_layers; l-- > lin->first_trainable;) {
        Matrix delta = grad_act;
        lin->grad_act[l] = std::move(grad_act);
        for (std::size_t i = 0; i < delta.data().size(); ++i) delta.data()[i] *= lin->d1[l].data()[i];
        if (l > lin->first_trainable) {
            grad_act = Matrix(rows, lin->layers[l].in);
            accumulate_transpose(lin->layers[l].weights, lin->layers[l].in, delta, grad_act);
        }
        lin->delta[l] = std::move(delta);
    }
    return lin;
}

namespace {

void gradient_from(const Linearization& lin, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t l = lin.first_trainable; l < lin.layers.size(); ++l) {
        const auto& layer = lin.layers[l];
        if (!layer.trainable) continue;
        double* gw = grad.data() + layer.grad_offset;
        accumulate_outer(lin.delta[l], lin.act[l], gw, gw + layer.in * layer.out, true);
    }
    if (!all_finite(grad)) throw NumericalError("non-finite gradient");
}

// Pearlmutter R-operator: directional derivative of the backward pass along v.
void r_operator(const Linearization& lin, std::span<const double> v, std::span<double> out) {
    if (v.size() != lin.dim || out.size() != lin.dim) {
        throw ArgumentError("hvp: direction has length " + std::to_string(v.size()) + ", expected " +
                            std::to_string(lin.dim));
    }
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t n_layers = lin.layers.size();
    if (lin.first_trainable >= n_layers) return;
    const std::size_t rows = lin.act[0].rows();
    const auto& k = kernels::active();

    // Forward: R{z_l}, R{a_l}. Activations before the first trainable layer do not depend on v.
    std::vector<Matrix> rz(n_layers);
    std::vector<Matrix> ra(n_layers + 1);
    for (std::size_t l = lin.first_trainable; l < n_layers; ++l) {
        const auto& layer = lin.layers[l];
        Matrix z(rows, layer.out);
        const bool has_ra = l > lin.first_trainable;
        for (std::size_t r = 0; r < rows; ++r) {
            auto zr = z.row(r);
            for (std::size_t o = 0; o < layer.out; ++o) {
                double s = 0.0;
                if (has_ra) s += k.dot(layer.weights + o * layer.in, ra[l].row(r).data(), layer.in);
                if (layer.trainable) {
                    const double* vw = v.data() + layer.grad_offset;
                    s += k.dot(vw + o * layer.in, lin.act[l].row(r).data(), layer.in);
                    s += vw[layer.in * layer.out + o];
                }
                zr[o] = s;
            }
        }
        Matrix a(rows, layer.out);
        for (std::size_t i = 0; i < a.data().size(); ++i) a.data()[i] = lin.d1[l].data()[i] * z.data()[i];
        rz[l] = std::move(z);
        ra[l + 1] = std::move(a);
    }

    // Output: R{dL/da_L} = H_loss R{a_L}
    Matrix r_grad_act(rows, lin.layers.back().out);
    for (std::size_t i = 0; i < r_grad_act.data().size(); ++i) {
        r_grad_act.data()[i] = lin.loss_d2.data()[i] * ra[n_layers].data()[i];
    }

    // Backward.
    for (std::size_t l = n_layers; l-- > lin.first_trainable;) {
        const auto& layer = lin.layers[l];
        // R{δ} = R{g_a} ⊙ σ'(z) + g_a ⊙ σ''(z) ⊙ R{z}
        Matrix r_delta(rows, layer.out);
        for (std::size_t i = 0; i < r_delta.data().size(); ++i) {
            r_delta.data()[i] = r_grad_act.data()[i] * lin.d1[l].data()[i] +
                                lin.grad_act[l].data()[i] * lin.d2[l].data()[i] * rz[l].data()[i];
        }
        const bool has_ra = l > lin.first_trainable;
        if (layer.trainable) {
            double* gw = out.data() + layer.grad_offset;
            accumulate_outer(r_delta, lin.act[l], gw, gw + layer.in * layer.out, true);
            if (has_ra) accumulate_outer(lin.delta[l], ra[l], gw, nullptr, false);
        }
        if (has_ra) {
            Matrix prev(rows, layer.in);
            accumulate_transpose(layer.weights, layer.in, r_delta, prev);
            if (layer.trainable) {
                accumulate_transpose(v.data() + layer.grad_offset, layer.in, lin.delta[l], prev);
            }
            r_grad_act = std::move(prev);
        }
    }
    if (!all_finite(out)) throw NumericalError("non-finite Hessian-vector product");
}

}  // namespace

double StackObjective::value(std::span<const double> w) const { return linearize(w, false)->value; }

double StackObjective::value_and_grad(std::span<const double> w, std::span<double> grad) const {
    if (grad.size() != dim_) throw ArgumentError("gradient buffer has the wrong length");
    auto lin = linearize(w, true);
    gradient_from(*lin, grad);
    return lin->value;
}

void StackObjective::hvp(std::span<const double> w, std::span<const double> v,
                         std::span<double> out) const {
    auto lin = linearize(w, true);
    r_operator(*lin, v, out);
}

HvpOracle StackObjective::hessian_at(std::span<const double> w) const {
    std::shared_ptr<const Linearization> lin = linearize(w, true);
    return [lin](std::span<const double> v, std::span<double> out) { r_operator(*lin, v, out); };
}

Matrix StackObjective::output(std::span<const double> w) const { return linearize(w, false)->act.back(); }

// ---------------------------------------------------------------------------
// Single-network entry points

namespace {

StackObjective single(const MlpNetwork& net, const ScalarLossSpec& loss, const Batch& batch) {
    return StackObjective({StackSegment{net, {}, true}}, loss, batch);
}

}  // namespace

Matrix forward(const MlpNetwork& net, std::span<const double> params, const Batch& batch) {
    if (params.size() != net.param_count()) {
        throw ConfigError("parameter vector has length " + std::to_string(params.size()) +
                          ", network needs " + std::to_string(net.param_count()));
    }
    if (batch.cols() != net.input_dim()) {
        throw ConfigError("layer 0 expects input dim " + std::to_string(net.input_dim()) +
                          ", batch has " + std::to_string(batch.cols()) + " columns");
    }
    Matrix a = batch;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        LayerRef ref;
        ref.in = net.layer_in(l);
        ref.out = net.layer_out(l);
        ref.act = net.activation(l);
        ref.weights = params.data() + net.weight_offset(l);
        ref.bias = params.data() + net.bias_offset(l);
        Matrix z;
        forward_layer(ref, a, z);
        for (auto& x : z.data()) x = activate(ref.act, x);
        a = std::move(z);
    }
    return a;
}

ValueAndGrad value_and_grad(const MlpNetwork& net, std::span<const double> params,
                            const ScalarLossSpec& loss, const Batch& batch) {
    ValueAndGrad out;
    out.grad.assign(net.param_count(), 0.0);
    out.value = single(net, loss, batch).value_and_grad(params, out.grad);
    return out;
}

ParamVector hvp(const MlpNetwork& net, std::span<const double> params, const ScalarLossSpec& loss,
                const Batch& batch, std::span<const double> v) {
    ParamVector out(net.param_count(), 0.0);
    single(net, loss, batch).hvp(params, v, out);
    return out;
}

}  // namespace hessgan
