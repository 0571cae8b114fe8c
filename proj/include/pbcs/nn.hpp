#pragma once

// Small fully-connected networks with hand-written reverse mode, Adam and
// Polyak averaging. Enough for DDPG/TD3 on two-dimensional problems.
//
// Parameter layout: a single flat vector. For each layer l in order, the
// weight matrix W_l (out x in, row-major) followed by the bias b_l (out).
// Hidden layers use tanh; the output layer is either the identity or
// `scale * tanh`.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbcs/textio.hpp"

namespace pbcs::nn {

enum class OutputActivation { Identity, ScaledTanh };

template <class Scalar>
class Mlp {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using WeightMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using ConstWeightMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using BiasMap = Eigen::Map<Vector>;
    using ConstBiasMap = Eigen::Map<const Vector>;

    /// Saved activations from a batched forward pass; column j is sample j.
    struct Tape {
        std::vector<Matrix> activations;  // [0] = input, then each hidden layer's tanh output
        Matrix output_tanh;               // tanh(z) of the output layer when ScaledTanh
    };

    Mlp() = default;

    Mlp(std::vector<int> layer_sizes, OutputActivation output, Scalar output_scale = Scalar(1))
        : sizes_(std::move(layer_sizes)), output_(output), output_scale_(output_scale) {
        if (sizes_.size() < 2) throw std::invalid_argument("an Mlp needs at least input and output sizes");
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw std::invalid_argument("layer sizes must be positive");
            offsets_.push_back(n);
            n += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
        }
        params_ = Vector::Zero(static_cast<Eigen::Index>(n));
    }

    /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
    template <class Rng>
    void init_uniform(Rng& rng) {
        for (std::size_t l = 0; l < layer_count(); ++l) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
            std::uniform_real_distribution<double> u(-bound, bound);
            auto w = weight(l);
            for (Eigen::Index i = 0; i < w.rows(); ++i)
                for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = static_cast<Scalar>(u(rng));
            auto b = bias(l);
            for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = static_cast<Scalar>(u(rng));
        }
    }

    const std::vector<int>& layer_sizes() const { return sizes_; }
    std::size_t layer_count() const { return sizes_.empty() ? 0 : sizes_.size() - 1; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    OutputActivation output_activation() const { return output_; }
    Scalar output_scale() const { return output_scale_; }

    Vector& params() { return params_; }
    const Vector& params() const { return params_; }
    std::size_t param_count() const { return static_cast<std::size_t>(params_.size()); }

    WeightMap weight(std::size_t l) { return WeightMap(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]); }
    ConstWeightMap weight(std::size_t l) const {
        return ConstWeightMap(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
    }
    BiasMap bias(std::size_t l) {
        return BiasMap(params_.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l], sizes_[l + 1]);
    }
    ConstBiasMap bias(std::size_t l) const {
        return ConstBiasMap(params_.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l],
                            sizes_[l + 1]);
    }

    bool same_shape(const Mlp& other) const {
        return sizes_ == other.sizes_ && output_ == other.output_ && output_scale_ == other.output_scale_;
    }

    Matrix forward(const Matrix& input, Tape* tape = nullptr) const {
        if (input.rows() != input_size()) {
            throw std::invalid_argument("Mlp input has " + std::to_string(input.rows()) + " rows, expected " +
                                        std::to_string(input_size()));
        }
        if (tape) {
            tape->activations.resize(layer_count());
            tape->activations[0] = input;
        }
        Matrix h = input;
        for (std::size_t l = 0; l < layer_count(); ++l) {
            Matrix z = weight(l) * h;
            z.colwise() += bias(l);
            if (l + 1 < layer_count()) {
                h = z.array().tanh();
                if (tape) tape->activations[l + 1] = h;
            } else if (output_ == OutputActivation::ScaledTanh) {
                Matrix t = z.array().tanh();
                h = output_scale_ * t;
                if (tape) tape->output_tanh = std::move(t);
            } else {
                h = std::move(z);
            }
        }
        return h;
    }

    Vector forward(const Vector& input) const {
        Matrix in = input;
        return forward(in);
    }

    /// Reverse pass of sum_j <upstream_j, f(x_j)> over the taped batch.
    /// Parameter gradients are summed over the batch and written to
    /// `param_grad` when it is non-null. Returns d/d(input).
    Matrix backward(const Tape& tape, const Matrix& upstream, Vector* param_grad) const {
        if (upstream.rows() != output_size() || tape.activations.size() != layer_count() ||
            upstream.cols() != tape.activations[0].cols()) {
            throw std::invalid_argument("Mlp backward: upstream shape does not match the taped forward pass");
        }
        if (param_grad) param_grad->setZero(params_.size());

        Matrix g = upstream;
        if (output_ == OutputActivation::ScaledTanh) {
            g = (g.array() * (output_scale_ * (Scalar(1) - tape.output_tanh.array().square()))).matrix();
        }
        for (std::size_t l = layer_count(); l-- > 0;) {
            const Matrix& a = tape.activations[l];
            if (param_grad) {
                WeightMap(param_grad->data() + offsets_[l], sizes_[l + 1], sizes_[l]).noalias() = g * a.transpose();
                BiasMap(param_grad->data() + offsets_[l] + static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l],
                        sizes_[l + 1]) = g.rowwise().sum();
            }
            Matrix back = weight(l).transpose() * g;
            if (l > 0) {
                g = (back.array() * (Scalar(1) - a.array().square())).matrix();
            } else {
                return back;
            }
        }
        return g;
    }

private:
    std::vector<int> sizes_;
    std::vector<std::size_t> offsets_;
    OutputActivation output_ = OutputActivation::Identity;
    Scalar output_scale_ = Scalar(1);
    Vector params_;
};

template <class Scalar>
struct Gradients {
    typename Mlp<Scalar>::Vector params;
    typename Mlp<Scalar>::Vector input;
};

/// Exact gradients of <upstream, forward(input)> for one sample.
template <class Scalar>
Gradients<Scalar> gradients(const Mlp<Scalar>& net, const typename Mlp<Scalar>::Vector& input,
                            const typename Mlp<Scalar>::Vector& upstream) {
    if (upstream.size() != net.output_size()) throw std::invalid_argument("upstream length mismatch");
    typename Mlp<Scalar>::Tape tape;
    typename Mlp<Scalar>::Matrix in = input;
    net.forward(in, &tape);
    Gradients<Scalar> g;
    typename Mlp<Scalar>::Matrix up = upstream;
    g.input = net.backward(tape, up, &g.params);
    return g;
}

template <class Scalar>
struct AdamState {
    typename Mlp<Scalar>::Vector m;
    typename Mlp<Scalar>::Vector v;
    std::uint64_t t = 0;
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    AdamState() = default;
    AdamState(const Mlp<Scalar>& net, double lr) : step_size(lr) {
        m = Mlp<Scalar>::Vector::Zero(static_cast<Eigen::Index>(net.param_count()));
        v = m;
    }
};

template <class Scalar>
void adam_step(Mlp<Scalar>& net, const typename Mlp<Scalar>::Vector& grad, AdamState<Scalar>& state) {
    auto& p = net.params();
    if (grad.size() != p.size() || state.m.size() != p.size() || state.v.size() != p.size()) {
        throw std::invalid_argument("adam_step: gradient, moments and parameters differ in size");
    }
    ++state.t;
    const auto b1 = static_cast<Scalar>(state.beta1), b2 = static_cast<Scalar>(state.beta2);
    state.m = b1 * state.m + (Scalar(1) - b1) * grad;
    state.v = b2 * state.v + (Scalar(1) - b2) * grad.cwiseAbs2();
    const double td = static_cast<double>(state.t);
    const auto c1 = static_cast<Scalar>(1.0 - std::pow(state.beta1, td));
    const auto c2 = static_cast<Scalar>(1.0 - std::pow(state.beta2, td));
    const auto lr = static_cast<Scalar>(state.step_size);
    const auto eps = static_cast<Scalar>(state.epsilon);
    p.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + eps);
}

/// target <- (1 - polyak) * target + polyak * source
template <class Scalar>
void soft_update(Mlp<Scalar>& target, const Mlp<Scalar>& source, double polyak) {
    if (!target.same_shape(source)) throw std::invalid_argument("soft_update: networks differ in shape");
    if (!(polyak >= 0.0 && polyak <= 1.0)) throw std::invalid_argument("soft_update: polyak must lie in [0, 1]");
    const auto p = static_cast<Scalar>(polyak);
    target.params() = (Scalar(1) - p) * target.params() + p * source.params();
}

inline std::string activation_tag(OutputActivation act, double scale) {
    if (act == OutputActivation::Identity) return "identity";
    return "scaled_tanh:" + format_real(scale);
}

template <class Scalar>
void write_mlp(std::ostream& out, const Mlp<Scalar>& net) {
    out << "mlp v1 layers=";
    for (std::size_t i = 0; i < net.layer_sizes().size(); ++i) out << (i ? "," : "") << net.layer_sizes()[i];
    out << " act=" << activation_tag(net.output_activation(), static_cast<double>(net.output_scale())) << "\n";
    for (Eigen::Index i = 0; i < net.params().size(); ++i) out << format_real(static_cast<double>(net.params()[i])) << "\n";
}

template <class Scalar>
Mlp<Scalar> read_mlp(LineReader& reader) {
    auto header = reader.expect_tokens("mlp header");
    if (header.size() < 2 || header[0] != "mlp" || header[1] != "v1") reader.fail("expected 'mlp v1' header");
    auto fields = header_fields(header);
    std::vector<int> sizes;
    OutputActivation act = OutputActivation::Identity;
    double scale = 1.0;
    try {
        std::string layers = require_field(fields, "layers", reader);
        std::replace(layers.begin(), layers.end(), ',', ' ');
        for (const auto& tok : split_ws(layers)) sizes.push_back(static_cast<int>(parse_int(tok)));
        const std::string& tag = require_field(fields, "act", reader);
        if (tag == "identity") {
            act = OutputActivation::Identity;
        } else if (tag.rfind("scaled_tanh:", 0) == 0) {
            act = OutputActivation::ScaledTanh;
            scale = parse_real(std::string_view(tag).substr(12));
        } else {
            reader.fail("unknown activation tag '" + tag + "'");
        }
    } catch (const std::invalid_argument& e) {
        reader.fail(e.what());
    }
    Mlp<Scalar> net;
    try {
        net = Mlp<Scalar>(sizes, act, static_cast<Scalar>(scale));
    } catch (const std::invalid_argument& e) {
        reader.fail(e.what());
    }
    for (Eigen::Index i = 0; i < net.params().size(); ++i) {
        auto toks = reader.expect_tokens("mlp parameter " + std::to_string(i));
        if (toks.size() != 1) reader.fail("expected one parameter per line");
        try {
            net.params()[i] = static_cast<Scalar>(parse_real(toks[0]));
        } catch (const std::invalid_argument& e) {
            reader.fail(e.what());
        }
    }
    return net;
}

}  // namespace pbcs::nn
