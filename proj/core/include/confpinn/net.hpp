#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

/// \file net.hpp
///
/// Small fully connected tanh networks with hand-written derivative sweeps.
///
/// The only networks this library needs are a few dozen units wide, so the
/// sweeps are written directly against the layer structure instead of going
/// through a general-purpose tape:
///
///   - a forward sweep that carries, next to every activation, its tangent
///     along each input coordinate (exact forward mode, one direction per
///     input dimension), giving the network output and du/dx_k;
///   - a reverse sweep through that augmented forward pass, giving the
///     gradient of any scalar loss built from outputs *and* input
///     derivatives with respect to every weight, bias and the optional
///     physics parameter.

namespace confpinn::net {

/// Row-major batch of input points, all of the same dimension.
class Batch {
  public:
    Batch() = default;
    explicit Batch(std::size_t dim);
    Batch(std::size_t dim, std::vector<double> coords);

    /// One-dimensional batch from a list of scalars.
    static Batch from_scalars(std::span<const double> values);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
    bool empty() const noexcept { return coords_.empty(); }

    std::span<const double> point(std::size_t i) const
    {
        return {coords_.data() + i * dim_, dim_};
    }
    double operator()(std::size_t i, std::size_t k) const { return coords_[i * dim_ + k]; }

    void push_back(std::span<const double> p);
    void append(const Batch& other);
    std::span<const double> coords() const noexcept { return coords_; }

  private:
    std::size_t dim_ = 1;
    std::vector<double> coords_;
};

/// Parameters of a feed-forward network with tanh hidden layers and an
/// identity output layer, plus an optional trainable physics parameter.
///
/// Flat parameter layout (also the file layout):
///   weights of layer 0 (row-major, out x in), weights of layer 1, ...,
///   biases of layer 0, biases of layer 1, ..., then beta in inverse mode.
class MlpModel {
  public:
    MlpModel() = default;
    /// All parameters zero; beta zero in inverse mode.
    MlpModel(std::vector<std::size_t> layer_sizes, bool inverse_mode);

    std::span<const std::size_t> layer_sizes() const noexcept { return layer_sizes_; }
    std::size_t input_dim() const noexcept { return layer_sizes_.front(); }
    std::size_t layer_count() const noexcept { return layer_sizes_.size() - 1; }

    /// Weights and biases, excluding beta.
    std::size_t network_parameter_count() const noexcept { return network_params_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    /// Offsets into parameters() of layer `l`'s weight block and bias block.
    std::size_t weight_offset(std::size_t l) const { return weight_offsets_[l]; }
    std::size_t bias_offset(std::size_t l) const { return bias_offsets_[l]; }

    std::span<double> weights(std::size_t l);
    std::span<const double> weights(std::size_t l) const;
    std::span<double> biases(std::size_t l);
    std::span<const double> biases(std::size_t l) const;

    bool inverse_mode() const noexcept { return inverse_mode_; }
    std::optional<double> beta() const;
    /// Throws ConfigError when the model is not in inverse mode.
    void set_beta(double value);
    std::size_t beta_index() const noexcept { return network_params_; }

    friend bool operator==(const MlpModel&, const MlpModel&) = default;

  private:
    std::vector<std::size_t> layer_sizes_;
    std::vector<std::size_t> weight_offsets_;
    std::vector<std::size_t> bias_offsets_;
    std::size_t network_params_ = 0;
    bool inverse_mode_ = false;
    std::vector<double> params_;
};

/// Initial value of beta for inverse-mode models.
inline constexpr double default_initial_beta = 0.1;

/// Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out))), zero biases,
/// beta = default_initial_beta in inverse mode. Deterministic in `seed`.
///
/// layer_sizes needs at least an input and an output entry, every entry
/// positive, and a single output unit; anything else is a ConfigError.
MlpModel init_model(std::vector<std::size_t> layer_sizes, std::uint64_t seed,
                    bool inverse_mode);

/// Network output at each point of `inputs`.
std::vector<double> forward(const MlpModel& model, const Batch& inputs);

/// Output values and first derivatives with respect to the inputs.
struct NetworkOutputs {
    std::size_t input_dim = 0;
    std::vector<double> values;
    /// Row-major, size() x input_dim. Empty when derivatives were not requested.
    std::vector<double> input_derivatives;

    std::size_t size() const noexcept { return values.size(); }
    double derivative(std::size_t i, std::size_t k) const
    {
        return input_derivatives[i * input_dim + k];
    }
};

/// Exact du/dx_k at every point. Only order 1 is supported.
NetworkOutputs input_derivatives(const MlpModel& model, const Batch& inputs, int order = 1);

/// What a loss closure reports back: the loss and its partial derivatives
/// with respect to each quantity the network produced.
struct OutputSensitivity {
    double loss = 0.0;
    std::vector<double> d_values;            ///< dL/du_i
    std::vector<double> d_input_derivatives; ///< dL/d(du_i/dx_k), row-major; may be empty
    double d_beta = 0.0;                     ///< explicit dL/dbeta (inverse mode)
};

using LossClosure = std::function<OutputSensitivity(const NetworkOutputs&, const MlpModel&)>;

struct Gradients {
    double loss = 0.0;
    /// Same layout as MlpModel::parameters().
    std::vector<double> parameters;
    NetworkOutputs outputs;
};

/// Reverse-mode gradient of the closure's loss with respect to every
/// parameter. With `with_input_derivatives` the closure also sees du/dx and
/// may depend on it. Throws NumericError when the loss is not finite.
Gradients grad_params(const MlpModel& model, const Batch& inputs, const LossClosure& loss,
                      bool with_input_derivatives = true);

/// Plain-text parameter file, versioned on its first line:
///
///   confpinn-mlp 1
///   layers <n> <size_0> ... <size_n-1>
///   inverse <0|1>
///   weights <count>
///   <one value per line, row-major per layer>
///   biases <count>
///   <one value per line>
///   beta <value>            (inverse mode only)
///
/// Values are written in shortest round-trip form, so a save/load cycle is
/// bit-exact.
void save_model(const MlpModel& model, std::ostream& out);
MlpModel load_model(std::istream& in);
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

} // namespace confpinn::net
