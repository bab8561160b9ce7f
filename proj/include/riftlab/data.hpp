#pragma once

#include <string>
#include <vector>

#include "riftlab/tensor.hpp"

namespace riftlab {

// Labeled inputs in [0,1] with a leading sample dimension.
struct Dataset {
    Tensor inputs;
    std::vector<int> labels;
    std::string split = "train";

    std::size_t size() const { return labels.size(); }

    std::vector<std::size_t> sample_shape() const {
        if (inputs.shape().empty()) return {};
        return {inputs.shape().begin() + 1, inputs.shape().end()};
    }

    void validate(std::size_t num_classes) const {
        if (inputs.shape().empty() || inputs.shape()[0] != labels.size())
            throw std::invalid_argument("Dataset: input/label count mismatch");
        for (int y : labels)
            if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
                throw std::invalid_argument("Dataset: label out of range");
    }
};

// Copy of the rows at the given indices, in the given order.
inline Dataset gather(const Dataset& ds, const std::vector<std::size_t>& indices) {
    std::size_t stride = shape_numel(ds.sample_shape());
    std::vector<std::size_t> shape = ds.inputs.shape();
    shape[0] = indices.size();
    Tensor inputs(shape);
    std::vector<int> labels(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        std::size_t src = indices[i];
        for (std::size_t j = 0; j < stride; ++j) inputs[i * stride + j] = ds.inputs[src * stride + j];
        labels[i] = ds.labels[src];
    }
    return Dataset{std::move(inputs), std::move(labels), ds.split};
}

enum class SyntheticKind { blobs2d, rings2d, shapes8x8 };

inline SyntheticKind synthetic_kind_from_string(const std::string& s) {
    if (s == "blobs2d") return SyntheticKind::blobs2d;
    if (s == "rings2d") return SyntheticKind::rings2d;
    if (s == "shapes8x8") return SyntheticKind::shapes8x8;
    throw std::invalid_argument("unknown dataset kind '" + s + "'");
}

inline std::size_t synthetic_num_classes(SyntheticKind kind) {
    return kind == SyntheticKind::shapes8x8 ? 4 : 2;
}

inline std::vector<std::size_t> synthetic_input_shape(SyntheticKind kind) {
    if (kind == SyntheticKind::shapes8x8) return {1, 8, 8};
    return {2};
}

namespace detail {

// Foreground test for the 8x8 shape templates, with an integer shift applied.
inline bool shape_foreground(int cls, int r, int c, int dr, int dc) {
    int rr = r - dr, cc = c - dc;
    switch (cls) {
        case 0:  // filled square
            return rr >= 2 && rr <= 5 && cc >= 2 && cc <= 5;
        case 1: {  // hollow square
            bool in_box = rr >= 1 && rr <= 6 && cc >= 1 && cc <= 6;
            bool border = rr == 1 || rr == 6 || cc == 1 || cc == 6;
            return in_box && border;
        }
        case 2:  // cross
            return (rr >= 3 && rr <= 4) || (cc >= 3 && cc <= 4);
        default: {  // diagonal stripes
            int m = (rr + cc) % 3;
            if (m < 0) m += 3;
            return m == 0;
        }
    }
}

}  // namespace detail

// Deterministic toy datasets. Labels are assigned round-robin, which keeps
// class counts within one of n/k.
inline Dataset gen_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed,
                             std::string split = "train") {
    if (n == 0) throw std::invalid_argument("gen_synthetic: n must be positive");
    Rng rng(seed);
    Dataset ds;
    ds.split = std::move(split);
    switch (kind) {
        case SyntheticKind::blobs2d: {
            // Anisotropic pair: coordinate 0 separates cleanly but with a
            // margin small enough to flip under modest input noise, while
            // coordinate 1 is noisy yet carries a wide margin.
            Tensor x({n, 2});
            ds.labels.resize(n);
            const double centers[2][2] = {{0.48, 0.30}, {0.52, 0.70}};
            const double sigma[2] = {0.01, 0.10};
            for (std::size_t i = 0; i < n; ++i) {
                int cls = static_cast<int>(i % 2);
                ds.labels[i] = cls;
                for (std::size_t d = 0; d < 2; ++d) {
                    double v = centers[cls][d] + sigma[d] * rng.normal();
                    x[i * 2 + d] = std::min(std::max(v, 0.0), 1.0);
                }
            }
            ds.inputs = std::move(x);
            break;
        }
        case SyntheticKind::rings2d: {
            Tensor x({n, 2});
            ds.labels.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                int cls = static_cast<int>(i % 2);
                ds.labels[i] = cls;
                double r = cls == 0 ? rng.uniform(0.05, 0.16) : rng.uniform(0.26, 0.38);
                double a = rng.uniform(0.0, 6.283185307179586);
                x[i * 2 + 0] = std::min(std::max(0.5 + r * std::cos(a), 0.0), 1.0);
                x[i * 2 + 1] = std::min(std::max(0.5 + r * std::sin(a), 0.0), 1.0);
            }
            ds.inputs = std::move(x);
            break;
        }
        case SyntheticKind::shapes8x8: {
            Tensor x({n, 1, 8, 8});
            ds.labels.resize(n);
            const double fg = 0.85, bg = 0.15, jitter = 0.1;
            for (std::size_t i = 0; i < n; ++i) {
                int cls = static_cast<int>(i % 4);
                ds.labels[i] = cls;
                int dr = static_cast<int>(rng.next_index(3)) - 1;
                int dc = static_cast<int>(rng.next_index(3)) - 1;
                for (int r = 0; r < 8; ++r)
                    for (int c = 0; c < 8; ++c) {
                        double base = detail::shape_foreground(cls, r, c, dr, dc) ? fg : bg;
                        double v = base + rng.uniform(-jitter, jitter);
                        x[(i * 8 + r) * 8 + c] = std::min(std::max(v, 0.0), 1.0);
                    }
            }
            ds.inputs = std::move(x);
            break;
        }
    }
    return ds;
}

inline Dataset gen_synthetic(const std::string& kind, std::size_t n, std::uint64_t seed,
                             std::string split = "train") {
    return gen_synthetic(synthetic_kind_from_string(kind), n, seed, std::move(split));
}

enum class CorruptionKind { gaussian_noise, box_blur, contrast, brightness };

inline const char* corruption_kind_name(CorruptionKind k) {
    switch (k) {
        case CorruptionKind::gaussian_noise: return "gaussian_noise";
        case CorruptionKind::box_blur: return "box_blur";
        case CorruptionKind::contrast: return "contrast";
        case CorruptionKind::brightness: return "brightness";
    }
    return "?";
}

// One representative corruption per group.
inline const char* corruption_group(CorruptionKind k) {
    switch (k) {
        case CorruptionKind::gaussian_noise: return "Noise";
        case CorruptionKind::box_blur: return "Blur";
        case CorruptionKind::brightness: return "Weather";
        case CorruptionKind::contrast: return "Digital";
    }
    return "?";
}

struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::gaussian_noise;
    int severity = 1;  // 1..5

    void validate() const {
        if (severity < 1 || severity > 5)
            throw std::invalid_argument("CorruptionSpec: severity must be in 1..5");
    }
};

inline std::vector<CorruptionSpec> all_corruptions() {
    std::vector<CorruptionSpec> out;
    for (CorruptionKind k : {CorruptionKind::gaussian_noise, CorruptionKind::box_blur,
                             CorruptionKind::contrast, CorruptionKind::brightness})
        for (int s = 1; s <= 5; ++s) out.push_back({k, s});
    return out;
}

namespace detail {

// Box filter with the window renormalized at image borders. Width 1 is the
// identity and is handled by the caller.
inline void box_blur_2d(const double* src, double* dst, std::size_t h, std::size_t w, int radius) {
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            double sum = 0.0;
            int count = 0;
            for (int dr = -radius; dr <= radius; ++dr)
                for (int dc = -radius; dc <= radius; ++dc) {
                    std::ptrdiff_t rr = static_cast<std::ptrdiff_t>(r) + dr;
                    std::ptrdiff_t cc = static_cast<std::ptrdiff_t>(c) + dc;
                    if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(h) ||
                        cc >= static_cast<std::ptrdiff_t>(w))
                        continue;
                    sum += src[rr * static_cast<std::ptrdiff_t>(w) + cc];
                    ++count;
                }
            dst[r * w + c] = sum / count;
        }
}

inline void box_blur_1d(const double* src, double* dst, std::size_t n, int radius) {
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        int count = 0;
        for (int d = -radius; d <= radius; ++d) {
            std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + d;
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(n)) continue;
            sum += src[j];
            ++count;
        }
        dst[i] = sum / count;
    }
}

}  // namespace detail

// Apply one corruption at the given severity. Labels are never touched and
// outputs stay in [0,1].
inline Dataset corrupt(const Dataset& ds, const CorruptionSpec& spec, std::uint64_t seed) {
    spec.validate();
    Dataset out = ds;
    Rng rng(seed);
    switch (spec.kind) {
        case CorruptionKind::gaussian_noise: {
            double sigma = 0.04 * spec.severity;
            for (double& v : out.inputs.values())
                v = std::min(std::max(v + sigma * rng.normal(), 0.0), 1.0);
            break;
        }
        case CorruptionKind::box_blur: {
            int width = 2 * spec.severity - 1;
            if (width == 1) break;
            int radius = (width - 1) / 2;
            const std::vector<std::size_t>& shape = ds.inputs.shape();
            if (shape.size() >= 3) {
                std::size_t h = shape[shape.size() - 2], w = shape[shape.size() - 1];
                std::size_t planes = ds.inputs.size() / (h * w);
                for (std::size_t p = 0; p < planes; ++p)
                    detail::box_blur_2d(ds.inputs.data() + p * h * w, out.inputs.data() + p * h * w,
                                        h, w, radius);
            } else {
                std::size_t n = shape.back();
                std::size_t rows = ds.inputs.size() / n;
                for (std::size_t p = 0; p < rows; ++p)
                    detail::box_blur_1d(ds.inputs.data() + p * n, out.inputs.data() + p * n, n, radius);
            }
            for (double& v : out.inputs.values()) v = std::min(std::max(v, 0.0), 1.0);
            break;
        }
        case CorruptionKind::contrast: {
            double factor = 1.0 - 0.15 * spec.severity;
            for (double& v : out.inputs.values())
                v = std::min(std::max(0.5 + (v - 0.5) * factor, 0.0), 1.0);
            break;
        }
        case CorruptionKind::brightness: {
            double shift = 0.1 * spec.severity;
            for (double& v : out.inputs.values())
                v = std::min(std::max(v + shift, 0.0), 1.0);
            break;
        }
    }
    return out;
}

}  // namespace riftlab
