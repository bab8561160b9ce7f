#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "riftlab/tensor.hpp"

namespace riftlab {

enum class LayerKind { linear, conv2d, relu, flatten };

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::linear: return "linear";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::relu: return "relu";
        case LayerKind::flatten: return "flatten";
    }
    return "?";
}

struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::relu;
    std::size_t in_features = 0, out_features = 0;   // linear
    std::size_t in_channels = 0, out_channels = 0;   // conv2d
    std::size_t kernel = 0, stride = 1, pad = 0;     // conv2d
    bool has_bias = true;

    bool parameterized() const {
        return kind == LayerKind::linear || kind == LayerKind::conv2d;
    }

    static LayerSpec linear(std::string name, std::size_t in, std::size_t out, bool bias = true) {
        LayerSpec l;
        l.name = std::move(name);
        l.kind = LayerKind::linear;
        l.in_features = in;
        l.out_features = out;
        l.has_bias = bias;
        return l;
    }

    static LayerSpec conv2d(std::string name, std::size_t in_ch, std::size_t out_ch,
                            std::size_t kernel, std::size_t stride = 1, std::size_t pad = 0,
                            bool bias = true) {
        LayerSpec l;
        l.name = std::move(name);
        l.kind = LayerKind::conv2d;
        l.in_channels = in_ch;
        l.out_channels = out_ch;
        l.kernel = kernel;
        l.stride = stride;
        l.pad = pad;
        l.has_bias = bias;
        return l;
    }

    static LayerSpec relu(std::string name) {
        LayerSpec l;
        l.name = std::move(name);
        l.kind = LayerKind::relu;
        return l;
    }

    static LayerSpec flatten(std::string name) {
        LayerSpec l;
        l.name = std::move(name);
        l.kind = LayerKind::flatten;
        return l;
    }
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    std::vector<std::size_t> input_shape;  // per-sample shape, no batch dimension
    std::size_t num_classes = 0;

    // Per-sample shape entering each layer; back() is the output shape.
    std::vector<std::vector<std::size_t>> activation_shapes() const {
        std::vector<std::vector<std::size_t>> shapes;
        shapes.push_back(input_shape);
        for (const LayerSpec& l : layers) {
            const std::vector<std::size_t>& cur = shapes.back();
            switch (l.kind) {
                case LayerKind::linear: {
                    if (cur.size() != 1 || cur[0] != l.in_features)
                        throw std::invalid_argument("NetworkSpec: layer '" + l.name +
                                                    "' expects " + std::to_string(l.in_features) +
                                                    " input features");
                    shapes.push_back({l.out_features});
                    break;
                }
                case LayerKind::conv2d: {
                    if (cur.size() != 3 || cur[0] != l.in_channels)
                        throw std::invalid_argument("NetworkSpec: layer '" + l.name +
                                                    "' expects a (C,H,W) input with C=" +
                                                    std::to_string(l.in_channels));
                    std::size_t h = cur[1], w = cur[2];
                    if (h + 2 * l.pad < l.kernel || w + 2 * l.pad < l.kernel)
                        throw std::invalid_argument("NetworkSpec: kernel larger than padded input in '" +
                                                    l.name + "'");
                    std::size_t ho = (h + 2 * l.pad - l.kernel) / l.stride + 1;
                    std::size_t wo = (w + 2 * l.pad - l.kernel) / l.stride + 1;
                    shapes.push_back({l.out_channels, ho, wo});
                    break;
                }
                case LayerKind::relu:
                    shapes.push_back(cur);
                    break;
                case LayerKind::flatten:
                    shapes.push_back({shape_numel(cur)});
                    break;
            }
        }
        return shapes;
    }

    void validate() const {
        if (layers.empty()) throw std::invalid_argument("NetworkSpec: no layers");
        if (input_shape.empty() || shape_numel(input_shape) == 0)
            throw std::invalid_argument("NetworkSpec: empty input shape");
        if (num_classes == 0) throw std::invalid_argument("NetworkSpec: num_classes must be positive");
        std::set<std::string> names;
        std::size_t n_param = 0;
        for (const LayerSpec& l : layers) {
            if (l.name.empty()) throw std::invalid_argument("NetworkSpec: unnamed layer");
            if (!names.insert(l.name).second)
                throw std::invalid_argument("NetworkSpec: duplicate layer name '" + l.name + "'");
            if (l.parameterized()) ++n_param;
            if (l.kind == LayerKind::linear && (l.in_features == 0 || l.out_features == 0))
                throw std::invalid_argument("NetworkSpec: zero-sized linear layer '" + l.name + "'");
            if (l.kind == LayerKind::conv2d &&
                (l.in_channels == 0 || l.out_channels == 0 || l.kernel == 0 || l.stride == 0))
                throw std::invalid_argument("NetworkSpec: malformed conv layer '" + l.name + "'");
        }
        if (n_param == 0) throw std::invalid_argument("NetworkSpec: no parameterized layer");
        std::vector<std::size_t> out = activation_shapes().back();
        if (out.size() != 1 || out[0] != num_classes)
            throw std::invalid_argument("NetworkSpec: output dimension does not equal num_classes");
    }

    std::vector<std::string> parameterized_layers() const {
        std::vector<std::string> out;
        for (const LayerSpec& l : layers)
            if (l.parameterized()) out.push_back(l.name);
        return out;
    }

    const LayerSpec& layer(const std::string& name) const {
        for (const LayerSpec& l : layers)
            if (l.name == name) return l;
        throw std::invalid_argument("NetworkSpec: unknown layer '" + name + "'");
    }

    std::ptrdiff_t layer_index(const std::string& name) const {
        for (std::size_t i = 0; i < layers.size(); ++i)
            if (layers[i].name == name) return static_cast<std::ptrdiff_t>(i);
        return -1;
    }

    // Canonical one-line description; checkpoints store a hash of it.
    std::string digest_string() const {
        std::ostringstream os;
        os << "in:";
        for (std::size_t d : input_shape) os << d << ",";
        os << "classes:" << num_classes << ";";
        for (const LayerSpec& l : layers) {
            os << l.name << "=" << layer_kind_name(l.kind);
            if (l.kind == LayerKind::linear)
                os << "(" << l.in_features << "," << l.out_features << ",b" << l.has_bias << ")";
            if (l.kind == LayerKind::conv2d)
                os << "(" << l.in_channels << "," << l.out_channels << ",k" << l.kernel << ",s"
                   << l.stride << ",p" << l.pad << ",b" << l.has_bias << ")";
            os << ";";
        }
        return os.str();
    }
};

struct LayerParams {
    Tensor weight;
    std::optional<Tensor> bias;
};

inline bool bitwise_equal(const LayerParams& a, const LayerParams& b) {
    if (a.bias.has_value() != b.bias.has_value()) return false;
    if (!bitwise_equal(a.weight, b.weight)) return false;
    if (a.bias && !bitwise_equal(*a.bias, *b.bias)) return false;
    return true;
}

// Named map layer -> parameters. Also reused for gradients (GradSet), which
// are shape-congruent by construction.
struct ParamSet {
    std::map<std::string, LayerParams> entries;

    LayerParams& at(const std::string& name) {
        auto it = entries.find(name);
        if (it == entries.end()) throw std::invalid_argument("ParamSet: unknown module '" + name + "'");
        return it->second;
    }
    const LayerParams& at(const std::string& name) const {
        auto it = entries.find(name);
        if (it == entries.end()) throw std::invalid_argument("ParamSet: unknown module '" + name + "'");
        return it->second;
    }
    bool has(const std::string& name) const { return entries.count(name) != 0; }
};

using GradSet = ParamSet;

inline bool bitwise_equal(const ParamSet& a, const ParamSet& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (const auto& [name, p] : a.entries) {
        auto it = b.entries.find(name);
        if (it == b.entries.end() || !bitwise_equal(p, it->second)) return false;
    }
    return true;
}

struct FreezeMask {
    std::set<std::string> frozen;
    bool is_frozen(const std::string& name) const { return frozen.count(name) != 0; }

    static FreezeMask none() { return {}; }

    // Freeze every parameterized layer except the given ones.
    static FreezeMask all_except(const NetworkSpec& spec, const std::vector<std::string>& keep) {
        FreezeMask m;
        for (const std::string& name : spec.parameterized_layers()) m.frozen.insert(name);
        for (const std::string& name : keep) {
            if (!m.frozen.count(name))
                throw std::invalid_argument("FreezeMask: '" + name + "' is not a parameterized layer");
            m.frozen.erase(name);
        }
        return m;
    }
};

namespace detail {

inline std::vector<std::size_t> weight_shape(const LayerSpec& l) {
    if (l.kind == LayerKind::linear) return {l.out_features, l.in_features};
    return {l.out_channels, l.in_channels, l.kernel, l.kernel};
}

inline std::vector<std::size_t> bias_shape(const LayerSpec& l) {
    if (l.kind == LayerKind::linear) return {l.out_features};
    return {l.out_channels};
}

inline std::size_t fan_in(const LayerSpec& l) {
    if (l.kind == LayerKind::linear) return l.in_features;
    return l.in_channels * l.kernel * l.kernel;
}

}  // namespace detail

// Fan-in-scaled uniform weights, zero biases. Draw order follows network
// order, so a given (spec, seed) pair always yields the same parameters.
inline ParamSet init_params(const NetworkSpec& spec, Rng& rng) {
    spec.validate();
    ParamSet out;
    for (const LayerSpec& l : spec.layers) {
        if (!l.parameterized()) continue;
        double bound = std::sqrt(1.0 / static_cast<double>(detail::fan_in(l)));
        Tensor w(detail::weight_shape(l));
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
        LayerParams p;
        p.weight = std::move(w);
        if (l.has_bias) p.bias = Tensor(detail::bias_shape(l));
        out.entries.emplace(l.name, std::move(p));
    }
    return out;
}

namespace detail {

inline void check_params_match(const NetworkSpec& spec, const ParamSet& params) {
    for (const LayerSpec& l : spec.layers) {
        if (!l.parameterized()) continue;
        const LayerParams& p = params.at(l.name);
        if (p.weight.shape() != weight_shape(l))
            throw std::invalid_argument("params: weight shape mismatch for '" + l.name + "'");
        if (l.has_bias != p.bias.has_value())
            throw std::invalid_argument("params: bias presence mismatch for '" + l.name + "'");
        if (p.bias && p.bias->shape() != bias_shape(l))
            throw std::invalid_argument("params: bias shape mismatch for '" + l.name + "'");
    }
}

inline Tensor linear_forward(const LayerSpec& l, const LayerParams& p, const Tensor& x) {
    std::size_t batch = x.shape()[0];
    std::size_t in = l.in_features, out = l.out_features;
    Tensor y({batch, out});
    const double* w = p.weight.data();
    const double* xv = x.data();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < out; ++o) {
            double s = p.bias ? (*p.bias)[o] : 0.0;
            const double* row = w + o * in;
            const double* xb = xv + b * in;
            for (std::size_t i = 0; i < in; ++i) s += row[i] * xb[i];
            y[b * out + o] = s;
        }
    }
    return y;
}

inline void linear_backward(const LayerSpec& l, const LayerParams& p, const Tensor& x,
                            const Tensor& dy, LayerParams* pgrad, Tensor* dx) {
    std::size_t batch = x.shape()[0];
    std::size_t in = l.in_features, out = l.out_features;
    const double* w = p.weight.data();
    if (pgrad) {
        double* gw = pgrad->weight.data();
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t o = 0; o < out; ++o) {
                double g = dy[b * out + o];
                for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += g * x[b * in + i];
            }
        if (pgrad->bias) {
            Tensor& gb = *pgrad->bias;
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < out; ++o) gb[o] += dy[b * out + o];
        }
    }
    if (dx) {
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t o = 0; o < out; ++o) {
                double g = dy[b * out + o];
                for (std::size_t i = 0; i < in; ++i) (*dx)[b * in + i] += g * w[o * in + i];
            }
    }
}

inline Tensor conv2d_forward(const LayerSpec& l, const LayerParams& p, const Tensor& x) {
    std::size_t batch = x.shape()[0];
    std::size_t cin = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
    std::size_t k = l.kernel, s = l.stride, pad = l.pad, cout = l.out_channels;
    std::size_t ho = (h + 2 * pad - k) / s + 1;
    std::size_t wo = (w + 2 * pad - k) / s + 1;
    Tensor y({batch, cout, ho, wo});
    const double* wgt = p.weight.data();
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t co = 0; co < cout; ++co)
            for (std::size_t oh = 0; oh < ho; ++oh)
                for (std::size_t ow = 0; ow < wo; ++ow) {
                    double acc = p.bias ? (*p.bias)[co] : 0.0;
                    for (std::size_t ci = 0; ci < cin; ++ci)
                        for (std::size_t kh = 0; kh < k; ++kh)
                            for (std::size_t kw = 0; kw < k; ++kw) {
                                std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * s + kh) -
                                                    static_cast<std::ptrdiff_t>(pad);
                                std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * s + kw) -
                                                    static_cast<std::ptrdiff_t>(pad);
                                if (ih < 0 || iw < 0 || ih >= static_cast<std::ptrdiff_t>(h) ||
                                    iw >= static_cast<std::ptrdiff_t>(w))
                                    continue;
                                acc += x[((b * cin + ci) * h + ih) * w + iw] *
                                       wgt[((co * cin + ci) * k + kh) * k + kw];
                            }
                    y[((b * cout + co) * ho + oh) * wo + ow] = acc;
                }
    return y;
}

inline void conv2d_backward(const LayerSpec& l, const LayerParams& p, const Tensor& x,
                            const Tensor& dy, LayerParams* pgrad, Tensor* dx) {
    std::size_t batch = x.shape()[0];
    std::size_t cin = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
    std::size_t k = l.kernel, s = l.stride, pad = l.pad, cout = l.out_channels;
    std::size_t ho = dy.shape()[2], wo = dy.shape()[3];
    const double* wgt = p.weight.data();
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t co = 0; co < cout; ++co)
            for (std::size_t oh = 0; oh < ho; ++oh)
                for (std::size_t ow = 0; ow < wo; ++ow) {
                    double g = dy[((b * cout + co) * ho + oh) * wo + ow];
                    if (pgrad && pgrad->bias) (*pgrad->bias)[co] += g;
                    for (std::size_t ci = 0; ci < cin; ++ci)
                        for (std::size_t kh = 0; kh < k; ++kh)
                            for (std::size_t kw = 0; kw < k; ++kw) {
                                std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * s + kh) -
                                                    static_cast<std::ptrdiff_t>(pad);
                                std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * s + kw) -
                                                    static_cast<std::ptrdiff_t>(pad);
                                if (ih < 0 || iw < 0 || ih >= static_cast<std::ptrdiff_t>(h) ||
                                    iw >= static_cast<std::ptrdiff_t>(w))
                                    continue;
                                std::size_t xi = ((b * cin + ci) * h + ih) * w + iw;
                                std::size_t wi = ((co * cin + ci) * k + kh) * k + kw;
                                if (pgrad) pgrad->weight[wi] += g * x[xi];
                                if (dx) (*dx)[xi] += g * wgt[wi];
                            }
                }
}

struct ForwardTrace {
    std::vector<Tensor> acts;  // acts[i] feeds layers[i]; back() is the logits
};

inline Tensor run_forward(const NetworkSpec& spec, const ParamSet& params, const Tensor& batch,
                          ForwardTrace* trace) {
    if (batch.shape().empty() || batch.shape()[0] == 0)
        throw std::invalid_argument("forward: empty batch");
    std::vector<std::size_t> sample_shape(batch.shape().begin() + 1, batch.shape().end());
    if (sample_shape != spec.input_shape)
        throw std::invalid_argument("forward: batch shape does not match network input shape");
    check_params_match(spec, params);

    std::size_t b = batch.shape()[0];
    Tensor cur = batch;
    if (trace) trace->acts.push_back(cur);
    for (const LayerSpec& l : spec.layers) {
        Tensor next;
        switch (l.kind) {
            case LayerKind::linear:
                next = linear_forward(l, params.at(l.name), cur);
                break;
            case LayerKind::conv2d:
                next = conv2d_forward(l, params.at(l.name), cur);
                break;
            case LayerKind::relu: {
                next = cur;
                for (double& v : next.values()) v = v > 0.0 ? v : 0.0;
                break;
            }
            case LayerKind::flatten:
                next = cur.reshaped({b, cur.size() / b});
                break;
        }
        cur = std::move(next);
        if (trace) trace->acts.push_back(cur);
    }
    return cur;
}

}  // namespace detail

inline Tensor forward(const NetworkSpec& spec, const ParamSet& params, const Tensor& batch) {
    return detail::run_forward(spec, params, batch, nullptr);
}

// Mean cross-entropy over the batch and its gradient with respect to logits.
// Stabilized by per-row max subtraction.
inline std::pair<double, Tensor> loss_ce(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.shape().size() != 2) throw std::invalid_argument("loss_ce: logits must be (batch, classes)");
    std::size_t batch = logits.shape()[0], classes = logits.shape()[1];
    if (labels.size() != batch) throw std::invalid_argument("loss_ce: label count mismatch");
    Tensor dlogits(logits.shape());
    double total = 0.0;
    double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw std::out_of_range("loss_ce: label out of range");
        const double* row = logits.data() + b * classes;
        double m = row[0];
        for (std::size_t k = 1; k < classes; ++k) m = std::max(m, row[k]);
        double sum = 0.0;
        for (std::size_t k = 0; k < classes; ++k) sum += std::exp(row[k] - m);
        total += m + std::log(sum) - row[y];
        for (std::size_t k = 0; k < classes; ++k)
            dlogits[b * classes + k] = std::exp(row[k] - m) / sum * inv_b;
        dlogits[b * classes + y] -= inv_b;
    }
    return {total * inv_b, std::move(dlogits)};
}

// Cross-entropy of each sample individually (no gradient).
inline std::vector<double> per_sample_ce(const Tensor& logits, const std::vector<int>& labels) {
    std::size_t batch = logits.shape()[0], classes = logits.shape()[1];
    if (labels.size() != batch) throw std::invalid_argument("per_sample_ce: label count mismatch");
    std::vector<double> out(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw std::out_of_range("per_sample_ce: label out of range");
        const double* row = logits.data() + b * classes;
        double m = row[0];
        for (std::size_t k = 1; k < classes; ++k) m = std::max(m, row[k]);
        double sum = 0.0;
        for (std::size_t k = 0; k < classes; ++k) sum += std::exp(row[k] - m);
        out[b] = m + std::log(sum) - row[y];
    }
    return out;
}

struct BackwardResult {
    double loss = 0.0;
    GradSet grads;
    Tensor input_grad;
};

namespace detail {

struct BackpropRequest {
    bool param_grads = true;
    bool input_grad = true;
    const std::string* only_module = nullptr;  // restrict param grads to one module
};

inline BackwardResult backprop(const NetworkSpec& spec, const ParamSet& params, const Tensor& batch,
                               const std::vector<int>& labels, const BackpropRequest& req) {
    ForwardTrace trace;
    Tensor logits = run_forward(spec, params, batch, &trace);
    auto [loss, dlogits] = loss_ce(logits, labels);

    BackwardResult res;
    res.loss = loss;
    if (req.param_grads) {
        for (const LayerSpec& l : spec.layers) {
            if (!l.parameterized()) continue;
            if (req.only_module && l.name != *req.only_module) continue;
            LayerParams g;
            g.weight = Tensor(weight_shape(l));
            if (l.has_bias) g.bias = Tensor(bias_shape(l));
            res.grads.entries.emplace(l.name, std::move(g));
        }
    }

    Tensor upstream = std::move(dlogits);
    for (std::size_t li = spec.layers.size(); li-- > 0;) {
        const LayerSpec& l = spec.layers[li];
        const Tensor& x = trace.acts[li];
        bool want_grads = req.param_grads && l.parameterized() &&
                          (!req.only_module || l.name == *req.only_module);
        // Once the requested module is handled, nothing below it is needed
        // unless the caller also wants the input gradient.
        bool need_dx = req.input_grad || li > 0;
        if (!req.input_grad && req.only_module) {
            std::ptrdiff_t target = spec.layer_index(*req.only_module);
            if (static_cast<std::ptrdiff_t>(li) <= target) need_dx = false;
        }

        Tensor dx;
        switch (l.kind) {
            case LayerKind::linear: {
                if (need_dx) dx = Tensor(x.shape());
                linear_backward(l, params.at(l.name), x, upstream,
                                want_grads ? &res.grads.at(l.name) : nullptr,
                                need_dx ? &dx : nullptr);
                break;
            }
            case LayerKind::conv2d: {
                if (need_dx) dx = Tensor(x.shape());
                conv2d_backward(l, params.at(l.name), x, upstream,
                                want_grads ? &res.grads.at(l.name) : nullptr,
                                need_dx ? &dx : nullptr);
                break;
            }
            case LayerKind::relu: {
                if (need_dx) {
                    dx = upstream;
                    for (std::size_t i = 0; i < dx.size(); ++i)
                        if (!(x[i] > 0.0)) dx[i] = 0.0;
                }
                break;
            }
            case LayerKind::flatten: {
                if (need_dx) dx = upstream.reshaped(x.shape());
                break;
            }
        }
        if (!need_dx) break;
        upstream = std::move(dx);
    }
    if (req.input_grad) res.input_grad = std::move(upstream);
    return res;
}

}  // namespace detail

// Mean cross-entropy plus exact gradients for every parameter and the input.
inline BackwardResult backward(const NetworkSpec& spec, const ParamSet& params, const Tensor& batch,
                               const std::vector<int>& labels) {
    detail::BackpropRequest req;
    return detail::backprop(spec, params, batch, labels, req);
}

// Gradient of the mean loss with respect to the input batch only.
inline std::pair<double, Tensor> input_gradient(const NetworkSpec& spec, const ParamSet& params,
                                                const Tensor& batch, const std::vector<int>& labels) {
    detail::BackpropRequest req;
    req.param_grads = false;
    BackwardResult r = detail::backprop(spec, params, batch, labels, req);
    return {r.loss, std::move(r.input_grad)};
}

struct SgdState {
    std::map<std::string, LayerParams> velocity;
};

// One SGD-with-momentum step with decoupled weight decay:
//   v <- momentum*v + (grad + weight_decay*w);  w <- w - lr*v
// Frozen layers are skipped entirely and stay bit-identical.
inline ParamSet sgd_step(const ParamSet& params, const GradSet& grads, double lr, double momentum,
                         double weight_decay, const FreezeMask& mask, SgdState& state) {
    ParamSet out = params;
    for (auto& [name, p] : out.entries) {
        if (mask.is_frozen(name)) continue;
        const LayerParams& g = grads.at(name);
        if (!g.weight.same_shape(p.weight) || g.bias.has_value() != p.bias.has_value())
            throw std::invalid_argument("sgd_step: gradient shape mismatch for '" + name + "'");
        LayerParams& v = state.velocity[name];
        if (v.weight.size() == 0) {
            v.weight = Tensor(p.weight.shape());
            if (p.bias) v.bias = Tensor(p.bias->shape());
        }
        auto update = [&](Tensor& w, const Tensor& gr, Tensor& vel) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                vel[i] = momentum * vel[i] + (gr[i] + weight_decay * w[i]);
                if (lr != 0.0) w[i] -= lr * vel[i];
            }
        };
        update(p.weight, g.weight, v.weight);
        if (p.bias) update(*p.bias, *g.bias, *v.bias);
    }
    return out;
}

// Percent of samples whose argmax prediction matches the label.
// Argmax ties resolve to the lower class index.
inline double accuracy_percent(const Tensor& logits, const std::vector<int>& labels) {
    std::size_t batch = logits.shape()[0], classes = logits.shape()[1];
    if (labels.size() != batch) throw std::invalid_argument("accuracy_percent: label count mismatch");
    std::size_t correct = 0;
    for (std::size_t b = 0; b < batch; ++b) {
        const double* row = logits.data() + b * classes;
        std::size_t best = 0;
        for (std::size_t k = 1; k < classes; ++k)
            if (row[k] > row[best]) best = k;
        if (static_cast<int>(best) == labels[b]) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(batch);
}

}  // namespace riftlab
