#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "riftlab/network.hpp"

namespace riftlab {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

constexpr char kCheckpointMagic[4] = {'R', 'L', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline std::uint64_t fnv1a64(const unsigned char* data, std::size_t n,
                             std::uint64_t h = 14695981039346656037ULL) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t spec_digest(const NetworkSpec& spec) {
    std::string s = spec.digest_string();
    return fnv1a64(reinterpret_cast<const unsigned char*>(s.data()), s.size());
}

// Explicit little-endian packing keeps files byte-identical across hosts.
inline void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_f64(std::vector<unsigned char>& buf, double v) {
    put_u64(buf, std::bit_cast<std::uint64_t>(v));
}

struct Reader {
    const unsigned char* data;
    std::size_t size;
    std::size_t at = 0;

    void need(std::size_t n) const {
        if (at + n > size) throw CheckpointError("truncated checkpoint file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[at + i]) << (8 * i);
        at += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data[at + i]) << (8 * i);
        at += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data + at), n);
        at += n;
        return s;
    }
    std::uint8_t u8() {
        need(1);
        return data[at++];
    }
};

inline void put_tensor(std::vector<unsigned char>& buf, const Tensor& t) {
    buf.push_back(static_cast<unsigned char>(t.shape().size()));
    for (std::size_t d : t.shape()) put_u64(buf, d);
    for (double v : t.values()) put_f64(buf, v);
}

inline Tensor read_tensor(Reader& r) {
    std::size_t ndim = r.u8();
    std::vector<std::size_t> shape(ndim);
    for (std::size_t i = 0; i < ndim; ++i) shape[i] = static_cast<std::size_t>(r.u64());
    std::size_t n = shape_numel(shape);
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = r.f64();
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace detail

// Layout (little-endian): magic, version, spec digest, entry count, then per
// parameterized layer a name-length-prefixed record with weight and optional
// bias payloads, and a trailing checksum over everything before it.
inline std::vector<unsigned char> serialize_checkpoint(const ParamSet& params,
                                                       const NetworkSpec& spec) {
    detail::check_params_match(spec, params);
    std::vector<unsigned char> buf;
    buf.insert(buf.end(), detail::kCheckpointMagic, detail::kCheckpointMagic + 4);
    detail::put_u32(buf, detail::kCheckpointVersion);
    detail::put_u64(buf, detail::spec_digest(spec));
    std::vector<std::string> names = spec.parameterized_layers();
    detail::put_u32(buf, static_cast<std::uint32_t>(names.size()));
    for (const std::string& name : names) {
        const LayerParams& p = params.at(name);
        detail::put_u32(buf, static_cast<std::uint32_t>(name.size()));
        buf.insert(buf.end(), name.begin(), name.end());
        buf.push_back(p.bias ? 1 : 0);
        detail::put_tensor(buf, p.weight);
        if (p.bias) detail::put_tensor(buf, *p.bias);
    }
    detail::put_u64(buf, detail::fnv1a64(buf.data(), buf.size()));
    return buf;
}

inline ParamSet deserialize_checkpoint(const std::vector<unsigned char>& buf,
                                       const NetworkSpec& spec) {
    if (buf.size() < 4 + 4 + 8 + 4 + 8) throw CheckpointError("truncated checkpoint file");
    if (std::memcmp(buf.data(), detail::kCheckpointMagic, 4) != 0)
        throw CheckpointError("bad checkpoint magic");

    std::uint64_t stored_sum = 0;
    for (int i = 0; i < 8; ++i)
        stored_sum |= static_cast<std::uint64_t>(buf[buf.size() - 8 + i]) << (8 * i);
    if (detail::fnv1a64(buf.data(), buf.size() - 8) != stored_sum)
        throw CheckpointError("checkpoint checksum mismatch");

    detail::Reader r{buf.data(), buf.size() - 8, 4};
    std::uint32_t version = r.u32();
    if (version != detail::kCheckpointVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    std::uint64_t digest = r.u64();
    if (digest != detail::spec_digest(spec))
        throw CheckpointError("checkpoint spec digest mismatch");

    std::uint32_t count = r.u32();
    ParamSet params;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = r.u32();
        std::string name = r.str(name_len);
        bool has_bias = r.u8() != 0;
        LayerParams p;
        p.weight = detail::read_tensor(r);
        if (has_bias) p.bias = detail::read_tensor(r);
        params.entries.emplace(std::move(name), std::move(p));
    }
    if (r.at != r.size) throw CheckpointError("trailing bytes in checkpoint");
    detail::check_params_match(spec, params);
    return params;
}

// Write-then-rename, so an interrupted save never leaves a partial file at
// the destination.
inline void save_checkpoint(const ParamSet& params, const NetworkSpec& spec,
                            const std::string& path) {
    std::vector<unsigned char> buf = serialize_checkpoint(params, spec);
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError("cannot open '" + tmp + "' for writing");
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size()));
        if (!out) throw CheckpointError("short write to '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline ParamSet load_checkpoint(const std::string& path, const NetworkSpec& spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    return deserialize_checkpoint(buf, spec);
}

}  // namespace riftlab
