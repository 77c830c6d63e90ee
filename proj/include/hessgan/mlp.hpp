#pragma once

// Feed-forward MLPs with exact reverse-mode gradients and exact
// Hessian-vector products (forward-over-reverse, i.e. the R-operator applied
// to backpropagation).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hessgan/objective.hpp"
#include "hessgan/tensor.hpp"

namespace hessgan {

enum class Activation { tanh, relu, leaky_relu, sigmoid, identity };

struct ActivationSpec {
    Activation kind = Activation::tanh;
    double slope = 0.01;  // leaky_relu only

    /// Accepts "tanh", "relu", "sigmoid", "identity", "leaky-relu" or
    /// "leaky-relu(0.2)".
    static ActivationSpec parse(std::string_view text);
    std::string name() const;

    friend bool operator==(const ActivationSpec&, const ActivationSpec&) = default;
};

class MlpNetwork {
public:
    /// Empty placeholder; assign a real network before use.
    MlpNetwork() = default;
    /// `layer_dims` = [d_0, ..., d_L], one activation per layer (L entries).
    MlpNetwork(std::vector<std::size_t> layer_dims, std::vector<ActivationSpec> activations);

    std::size_t num_layers() const noexcept { return activations_.size(); }
    std::size_t input_dim() const noexcept { return dims_.front(); }
    std::size_t output_dim() const noexcept { return dims_.back(); }
    std::size_t param_count() const noexcept { return offsets_.back(); }

    std::size_t layer_in(std::size_t l) const { return dims_[l]; }
    std::size_t layer_out(std::size_t l) const { return dims_[l + 1]; }
    const ActivationSpec& activation(std::size_t l) const { return activations_[l]; }
    const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }

    /// Offset of layer l's weight block (d_out x d_in, row-major); the bias
    /// vector follows immediately.
    std::size_t weight_offset(std::size_t l) const { return offsets_[l]; }
    std::size_t bias_offset(std::size_t l) const { return offsets_[l] + dims_[l] * dims_[l + 1]; }

    /// Glorot-uniform weights, zero biases.
    ParamVector init_params(std::uint64_t seed) const;

    friend bool operator==(const MlpNetwork&, const MlpNetwork&) = default;

private:
    std::vector<std::size_t> dims_;
    std::vector<ActivationSpec> activations_;
    std::vector<std::size_t> offsets_{0};
};

/// Probabilities fed to a logarithm are clamped to [kProbClamp, 1 - kProbClamp].
inline constexpr double kProbClamp = 1e-7;

/// Per-row loss applied to the network output, then combined with row weights
/// (default: 1/batch_size, i.e. the batch mean).
struct ScalarLossSpec {
    enum class Kind {
        binary_cross_entropy,  // -(y log p + (1-y) log(1-p)), one output column
        neg_log,               // -log p
        log_one_minus,         // log(1 - p)
        squared_error,         // ½‖out - target‖²
        linear,                // sum of output columns
    };

    Kind kind = Kind::squared_error;
    std::vector<double> targets;      // bce: one per row; squared_error: rows x cols
    std::vector<double> row_weights;  // empty -> uniform 1/rows

    static ScalarLossSpec bce(std::vector<double> labels);
    static ScalarLossSpec of(Kind kind);
    static ScalarLossSpec squared(std::vector<double> targets);
};

/// One network in a composed stack. Frozen segments keep their own copy of
/// the parameters; trainable segments read theirs from the argument vector.
struct StackSegment {
    MlpNetwork net;
    ParamVector frozen_params;
    bool trainable = false;
};

struct Linearization;

/// Mean loss of a composition of networks (e.g. D∘G) as a function of the
/// concatenated parameters of its trainable segments, on a fixed batch.
class StackObjective final : public Objective {
public:
    StackObjective(std::vector<StackSegment> segments, ScalarLossSpec loss, Batch batch);

    std::size_t dim() const override { return dim_; }
    double value(std::span<const double> w) const override;
    double value_and_grad(std::span<const double> w, std::span<double> grad) const override;
    void hvp(std::span<const double> w, std::span<const double> v,
             std::span<double> out) const override;
    HvpOracle hessian_at(std::span<const double> w) const override;

    /// Output of the full stack on the batch.
    Matrix output(std::span<const double> w) const;

    const Batch& batch() const noexcept { return batch_; }

private:
    std::shared_ptr<Linearization> linearize(std::span<const double> w, bool with_grad) const;

    std::vector<StackSegment> segments_;
    ScalarLossSpec loss_;
    Batch batch_;
    std::size_t dim_ = 0;
};

/// Output matrix (batch_size x d_L).
Matrix forward(const MlpNetwork& net, std::span<const double> params, const Batch& batch);

struct ValueAndGrad {
    double value = 0.0;
    ParamVector grad;
};

ValueAndGrad value_and_grad(const MlpNetwork& net, std::span<const double> params,
                            const ScalarLossSpec& loss, const Batch& batch);

ParamVector hvp(const MlpNetwork& net, std::span<const double> params, const ScalarLossSpec& loss,
                const Batch& batch, std::span<const double> v);

}  // namespace hessgan
