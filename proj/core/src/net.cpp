#include "confpinn/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "confpinn/error.hpp"
#include "confpinn/format.hpp"
#include "confpinn/random.hpp"

namespace confpinn::net {

// ---------------------------------------------------------------- Batch ---

Batch::Batch(std::size_t dim) : dim_{dim}
{
    if (dim == 0) {
        throw ConfigError("batch dimension must be positive");
    }
}

Batch::Batch(std::size_t dim, std::vector<double> coords) : dim_{dim}, coords_{std::move(coords)}
{
    if (dim == 0) {
        throw ConfigError("batch dimension must be positive");
    }
    if (coords_.size() % dim != 0) {
        throw ShapeError("batch coordinate count " + std::to_string(coords_.size()) +
                         " is not a multiple of dimension " + std::to_string(dim));
    }
}

Batch Batch::from_scalars(std::span<const double> values)
{
    return Batch(1, std::vector<double>(values.begin(), values.end()));
}

void Batch::push_back(std::span<const double> p)
{
    if (p.size() != dim_) {
        throw ShapeError("point of dimension " + std::to_string(p.size()) +
                         " pushed into batch of dimension " + std::to_string(dim_));
    }
    coords_.insert(coords_.end(), p.begin(), p.end());
}

void Batch::append(const Batch& other)
{
    if (other.empty()) {
        return;
    }
    if (other.dim_ != dim_) {
        throw ShapeError("cannot append batches of different dimension");
    }
    coords_.insert(coords_.end(), other.coords_.begin(), other.coords_.end());
}

// ------------------------------------------------------------- MlpModel ---

MlpModel::MlpModel(std::vector<std::size_t> layer_sizes, bool inverse_mode)
    : layer_sizes_{std::move(layer_sizes)}, inverse_mode_{inverse_mode}
{
    if (layer_sizes_.size() < 2) {
        throw ConfigError("layer_sizes needs at least an input and an output entry");
    }
    for (auto n : layer_sizes_) {
        if (n == 0) {
            throw ConfigError("layer sizes must be positive");
        }
    }
    if (layer_sizes_.back() != 1) {
        throw ConfigError("the network must have a single output unit");
    }
    const auto layers = layer_sizes_.size() - 1;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        weight_offsets_.push_back(offset);
        offset += layer_sizes_[l] * layer_sizes_[l + 1];
    }
    for (std::size_t l = 0; l < layers; ++l) {
        bias_offsets_.push_back(offset);
        offset += layer_sizes_[l + 1];
    }
    network_params_ = offset;
    params_.assign(network_params_ + (inverse_mode_ ? 1 : 0), 0.0);
}

std::span<double> MlpModel::weights(std::size_t l)
{
    return {params_.data() + weight_offsets_[l], layer_sizes_[l] * layer_sizes_[l + 1]};
}

std::span<const double> MlpModel::weights(std::size_t l) const
{
    return {params_.data() + weight_offsets_[l], layer_sizes_[l] * layer_sizes_[l + 1]};
}

std::span<double> MlpModel::biases(std::size_t l)
{
    return {params_.data() + bias_offsets_[l], layer_sizes_[l + 1]};
}

std::span<const double> MlpModel::biases(std::size_t l) const
{
    return {params_.data() + bias_offsets_[l], layer_sizes_[l + 1]};
}

std::optional<double> MlpModel::beta() const
{
    if (!inverse_mode_) {
        return std::nullopt;
    }
    return params_[network_params_];
}

void MlpModel::set_beta(double value)
{
    if (!inverse_mode_) {
        throw ConfigError("beta is only trainable in inverse mode");
    }
    params_[network_params_] = value;
}

MlpModel init_model(std::vector<std::size_t> layer_sizes, std::uint64_t seed, bool inverse_mode)
{
    MlpModel model(std::move(layer_sizes), inverse_mode);
    Rng rng(seed);
    const auto sizes = model.layer_sizes();
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(sizes[l] + sizes[l + 1]));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& w : model.weights(l)) {
            w = dist(rng);
        }
    }
    if (inverse_mode) {
        model.set_beta(default_initial_beta);
    }
    return model;
}

// --------------------------------------------------------------- sweeps ---

namespace {

void check_input(const MlpModel& model, const Batch& inputs)
{
    if (model.layer_sizes().empty()) {
        throw ConfigError("model has no layers");
    }
    if (!inputs.empty() && inputs.dim() != model.input_dim()) {
        throw ShapeError("input dimension " + std::to_string(inputs.dim()) +
                         " does not match network input size " +
                         std::to_string(model.input_dim()));
    }
}

/// Activations and tangents of one forward sweep over a batch, kept for the
/// reverse sweep. Per point the layout is [layer 0 | layer 1 | ... | layer L]
/// for activations, and the same per tangent direction.
class Sweep {
  public:
    Sweep(const MlpModel& model, const Batch& inputs, bool with_tangents)
        : model_{model}, inputs_{inputs}, dirs_{with_tangents ? model.input_dim() : 0}
    {
        const auto sizes = model.layer_sizes();
        layer_offsets_.resize(sizes.size());
        std::size_t off = 0;
        for (std::size_t l = 0; l < sizes.size(); ++l) {
            layer_offsets_[l] = off;
            off += sizes[l];
        }
        stride_ = off;
        const auto n = inputs.size();
        act_.assign(n * stride_, 0.0);
        adot_.assign(n * dirs_ * stride_, 0.0);
        zdot_.assign(n * dirs_ * stride_, 0.0);
        for (std::size_t p = 0; p < n; ++p) {
            run_point(p);
        }
    }

    NetworkOutputs outputs() const
    {
        NetworkOutputs out;
        out.input_dim = model_.input_dim();
        const auto n = inputs_.size();
        const auto last = layer_offsets_.back();
        out.values.resize(n);
        for (std::size_t p = 0; p < n; ++p) {
            out.values[p] = act_[p * stride_ + last];
        }
        if (dirs_ > 0) {
            out.input_derivatives.resize(n * dirs_);
            for (std::size_t p = 0; p < n; ++p) {
                for (std::size_t k = 0; k < dirs_; ++k) {
                    out.input_derivatives[p * dirs_ + k] = adot(p, k)[last];
                }
            }
        }
        return out;
    }

    /// Accumulates parameter gradients for the seeds of every point.
    void backward(const OutputSensitivity& seeds, std::span<double> grad) const
    {
        const auto sizes = model_.layer_sizes();
        const auto widest = *std::max_element(sizes.begin(), sizes.end());
        std::vector<double> adj_a(widest), next_adj_a(widest), zbar(widest), sbar(widest);
        std::vector<double> adj_t(dirs_ * widest), next_adj_t(dirs_ * widest), zdbar(dirs_ * widest);

        const bool seeded_tangents = dirs_ > 0 && !seeds.d_input_derivatives.empty();
        const auto L = model_.layer_count();

        for (std::size_t p = 0; p < inputs_.size(); ++p) {
            adj_a[0] = seeds.d_values[p];
            for (std::size_t k = 0; k < dirs_; ++k) {
                adj_t[k * widest] = seeded_tangents ? seeds.d_input_derivatives[p * dirs_ + k] : 0.0;
            }

            for (std::size_t l = L; l >= 1; --l) {
                const auto n_out = sizes[l];
                const auto n_in = sizes[l - 1];
                const auto* a = act(p) + layer_offsets_[l];
                const auto* a_in = act(p) + layer_offsets_[l - 1];

                if (l == L) {
                    for (std::size_t i = 0; i < n_out; ++i) {
                        zbar[i] = adj_a[i];
                    }
                    for (std::size_t k = 0; k < dirs_; ++k) {
                        for (std::size_t i = 0; i < n_out; ++i) {
                            zdbar[k * widest + i] = adj_t[k * widest + i];
                        }
                    }
                }
                else {
                    // a = tanh(z), s = 1 - a^2, adot = s * zdot
                    for (std::size_t i = 0; i < n_out; ++i) {
                        sbar[i] = 0.0;
                    }
                    for (std::size_t k = 0; k < dirs_; ++k) {
                        const auto* zd = zdot(p, k) + layer_offsets_[l];
                        for (std::size_t i = 0; i < n_out; ++i) {
                            const double s = 1.0 - a[i] * a[i];
                            zdbar[k * widest + i] = s * adj_t[k * widest + i];
                            sbar[i] += zd[i] * adj_t[k * widest + i];
                        }
                    }
                    for (std::size_t i = 0; i < n_out; ++i) {
                        const double s = 1.0 - a[i] * a[i];
                        zbar[i] = s * (adj_a[i] - 2.0 * a[i] * sbar[i]);
                    }
                }

                // z = W a_in + b, zdot = W adot_in
                const auto W = model_.weights(l - 1);
                auto* gW = grad.data() + model_.weight_offset(l - 1);
                auto* gb = grad.data() + model_.bias_offset(l - 1);
                for (std::size_t i = 0; i < n_out; ++i) {
                    gb[i] += zbar[i];
                    for (std::size_t j = 0; j < n_in; ++j) {
                        gW[i * n_in + j] += zbar[i] * a_in[j];
                    }
                }
                for (std::size_t k = 0; k < dirs_; ++k) {
                    const auto* ad_in = adot(p, k) + layer_offsets_[l - 1];
                    for (std::size_t i = 0; i < n_out; ++i) {
                        const double zb = zdbar[k * widest + i];
                        if (zb == 0.0) {
                            continue;
                        }
                        for (std::size_t j = 0; j < n_in; ++j) {
                            gW[i * n_in + j] += zb * ad_in[j];
                        }
                    }
                }

                if (l == 1) {
                    break;
                }
                for (std::size_t j = 0; j < n_in; ++j) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < n_out; ++i) {
                        acc += W[i * n_in + j] * zbar[i];
                    }
                    next_adj_a[j] = acc;
                }
                for (std::size_t k = 0; k < dirs_; ++k) {
                    for (std::size_t j = 0; j < n_in; ++j) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < n_out; ++i) {
                            acc += W[i * n_in + j] * zdbar[k * widest + i];
                        }
                        next_adj_t[k * widest + j] = acc;
                    }
                }
                std::swap(adj_a, next_adj_a);
                std::swap(adj_t, next_adj_t);
            }
        }
    }

  private:
    const double* act(std::size_t p) const { return act_.data() + p * stride_; }
    double* act(std::size_t p) { return act_.data() + p * stride_; }
    const double* adot(std::size_t p, std::size_t k) const
    {
        return adot_.data() + (p * dirs_ + k) * stride_;
    }
    double* adot(std::size_t p, std::size_t k) { return adot_.data() + (p * dirs_ + k) * stride_; }
    const double* zdot(std::size_t p, std::size_t k) const
    {
        return zdot_.data() + (p * dirs_ + k) * stride_;
    }
    double* zdot(std::size_t p, std::size_t k) { return zdot_.data() + (p * dirs_ + k) * stride_; }

    void run_point(std::size_t p)
    {
        const auto sizes = model_.layer_sizes();
        const auto L = model_.layer_count();
        const auto x = inputs_.point(p);
        std::copy(x.begin(), x.end(), act(p));
        for (std::size_t k = 0; k < dirs_; ++k) {
            adot(p, k)[k] = 1.0;
        }
        for (std::size_t l = 1; l <= L; ++l) {
            const auto n_out = sizes[l];
            const auto n_in = sizes[l - 1];
            const auto W = model_.weights(l - 1);
            const auto b = model_.biases(l - 1);
            const auto* a_in = act(p) + layer_offsets_[l - 1];
            auto* a = act(p) + layer_offsets_[l];
            const bool hidden = l < L;
            for (std::size_t i = 0; i < n_out; ++i) {
                double z = b[i];
                for (std::size_t j = 0; j < n_in; ++j) {
                    z += W[i * n_in + j] * a_in[j];
                }
                a[i] = hidden ? std::tanh(z) : z;
            }
            for (std::size_t k = 0; k < dirs_; ++k) {
                const auto* ad_in = adot(p, k) + layer_offsets_[l - 1];
                auto* zd = zdot(p, k) + layer_offsets_[l];
                auto* ad = adot(p, k) + layer_offsets_[l];
                for (std::size_t i = 0; i < n_out; ++i) {
                    double t = 0.0;
                    for (std::size_t j = 0; j < n_in; ++j) {
                        t += W[i * n_in + j] * ad_in[j];
                    }
                    zd[i] = t;
                    ad[i] = hidden ? (1.0 - a[i] * a[i]) * t : t;
                }
            }
        }
    }

    const MlpModel& model_;
    const Batch& inputs_;
    std::size_t dirs_;
    std::vector<std::size_t> layer_offsets_;
    std::size_t stride_ = 0;
    std::vector<double> act_;
    std::vector<double> adot_;
    std::vector<double> zdot_;
};

} // namespace

std::vector<double> forward(const MlpModel& model, const Batch& inputs)
{
    check_input(model, inputs);
    return Sweep(model, inputs, false).outputs().values;
}

NetworkOutputs input_derivatives(const MlpModel& model, const Batch& inputs, int order)
{
    if (order != 1) {
        throw ConfigError("input derivatives of order " + std::to_string(order) +
                          " are not supported (only order 1)");
    }
    check_input(model, inputs);
    return Sweep(model, inputs, true).outputs();
}

Gradients grad_params(const MlpModel& model, const Batch& inputs, const LossClosure& loss,
                      bool with_input_derivatives)
{
    check_input(model, inputs);
    const Sweep sweep(model, inputs, with_input_derivatives);
    Gradients result;
    result.outputs = sweep.outputs();
    const auto seeds = loss(result.outputs, model);
    if (!std::isfinite(seeds.loss)) {
        throw NumericError("loss is not finite: " + std::to_string(seeds.loss));
    }
    if (seeds.d_values.size() != inputs.size()) {
        throw ShapeError("loss closure returned " + std::to_string(seeds.d_values.size()) +
                         " output sensitivities for " + std::to_string(inputs.size()) +
                         " points");
    }
    if (!seeds.d_input_derivatives.empty() &&
        seeds.d_input_derivatives.size() != result.outputs.input_derivatives.size()) {
        throw ShapeError("loss closure returned input-derivative sensitivities of the wrong size");
    }
    result.loss = seeds.loss;
    result.parameters.assign(model.parameter_count(), 0.0);
    sweep.backward(seeds, result.parameters);
    if (model.inverse_mode()) {
        result.parameters[model.beta_index()] = seeds.d_beta;
    }
    return result;
}

// -------------------------------------------------------- serialization ---

namespace {
constexpr const char* model_magic = "confpinn-mlp";
constexpr int model_version = 1;

std::string expect_keyword(std::istream& in, const char* keyword)
{
    std::string word;
    if (!(in >> word) || word != keyword) {
        throw ParseError(std::string("model file: expected '") + keyword + "', found '" + word + "'");
    }
    return word;
}

std::size_t read_count(std::istream& in, const char* what)
{
    long long n = -1;
    if (!(in >> n) || n < 0) {
        throw ParseError(std::string("model file: bad ") + what);
    }
    return static_cast<std::size_t>(n);
}

double read_value(std::istream& in)
{
    std::string token;
    if (!(in >> token)) {
        throw ParseError("model file: truncated parameter list");
    }
    return parse_double(token);
}
} // namespace

void save_model(const MlpModel& model, std::ostream& out)
{
    out << model_magic << ' ' << model_version << '\n';
    out << "layers " << model.layer_sizes().size();
    for (auto n : model.layer_sizes()) {
        out << ' ' << n;
    }
    out << "\ninverse " << (model.inverse_mode() ? 1 : 0) << '\n';
    const auto params = model.parameters();
    const auto first_bias = model.bias_offset(0);
    out << "weights " << first_bias << '\n';
    for (std::size_t i = 0; i < first_bias; ++i) {
        out << format_double(params[i]) << '\n';
    }
    out << "biases " << model.network_parameter_count() - first_bias << '\n';
    for (std::size_t i = first_bias; i < model.network_parameter_count(); ++i) {
        out << format_double(params[i]) << '\n';
    }
    if (model.inverse_mode()) {
        out << "beta " << format_double(*model.beta()) << '\n';
    }
}

MlpModel load_model(std::istream& in)
{
    expect_keyword(in, model_magic);
    int version = 0;
    if (!(in >> version) || version != model_version) {
        throw ParseError("model file: unsupported version");
    }
    expect_keyword(in, "layers");
    const auto n_layers = read_count(in, "layer count");
    std::vector<std::size_t> sizes(n_layers);
    for (auto& s : sizes) {
        s = read_count(in, "layer size");
    }
    expect_keyword(in, "inverse");
    const auto inverse = read_count(in, "inverse flag");
    MlpModel model(std::move(sizes), inverse != 0);
    auto params = model.parameters();

    expect_keyword(in, "weights");
    const auto n_weights = read_count(in, "weight count");
    if (n_weights != model.bias_offset(0)) {
        throw ParseError("model file: weight count does not match layer sizes");
    }
    for (std::size_t i = 0; i < n_weights; ++i) {
        params[i] = read_value(in);
    }
    expect_keyword(in, "biases");
    const auto n_biases = read_count(in, "bias count");
    if (n_biases != model.network_parameter_count() - n_weights) {
        throw ParseError("model file: bias count does not match layer sizes");
    }
    for (std::size_t i = 0; i < n_biases; ++i) {
        params[n_weights + i] = read_value(in);
    }
    if (model.inverse_mode()) {
        expect_keyword(in, "beta");
        model.set_beta(read_value(in));
    }
    return model;
}

void save_model(const MlpModel& model, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    save_model(model, out);
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

MlpModel load_model(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return load_model(in);
}

} // namespace confpinn::net
