#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "pcflab/common.hpp"
#include "pcflab/flow.hpp"
#include "pcflab/grid.hpp"
#include "pcflab/metric.hpp"
#include "pcflab/tensor.hpp"

namespace pcflab {

// ---------------------------------------------------------------------------
// Content hashing (FNV-1a 64) for the output manifest
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const unsigned char* b = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= b[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file: " + path);
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    char out[19];
    std::snprintf(out, sizeof(out), "0x%016llx",
                  static_cast<unsigned long long>(fnv1a64(buf.data(), buf.size())));
    return out;
}

// ---------------------------------------------------------------------------
// Snapshot format
// ---------------------------------------------------------------------------
//
// Binary layout (little-endian):
//   bytes 0-7   magic "PCFSNAP\0"
//   u32         version (1)
//   u32         n, u32 N
//   f64         time t
//   u32         field count
//   per field:  u16 name length, name bytes,
//               u8 rank, rank x (u8 variance: 0 co / 1 contra, u8 barred),
//               n^rank * N^(2n) complex128 values, component-major,
//               grid row-major with x^1 slowest.

namespace detail {

inline void require_little_endian() {
    const std::uint32_t probe = 1;
    unsigned char b;
    std::memcpy(&b, &probe, 1);
    if (b != 1) throw IoError("snapshot i/o requires a little-endian host");
}

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("snapshot truncated");
    return v;
}

inline void put_field_block(std::ofstream& out, const std::string& name, const Signature& sig,
                            const std::vector<const Field*>& comps) {
    put<std::uint16_t>(out, std::uint16_t(name.size()));
    out.write(name.data(), std::streamsize(name.size()));
    put<std::uint8_t>(out, std::uint8_t(sig.size()));
    for (const Slot& s : sig) {
        put<std::uint8_t>(out, s.var == Variance::Contra ? 1 : 0);
        put<std::uint8_t>(out, s.barred ? 1 : 0);
    }
    for (const Field* f : comps)
        out.write(reinterpret_cast<const char*>(f->data()),
                  std::streamsize(f->size() * sizeof(cplx)));
}

} // namespace detail

struct Snapshot {
    int n = 0;
    int N = 0;
    double t = 0.0;
    std::map<std::string, TensorField> fields;
};

inline void write_snapshot(const std::string& path, const FlowState& state) {
    detail::require_little_endian();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open snapshot for writing: " + path);
    const GridSpec& grid = state.g.grid();
    out.write("PCFSNAP\0", 8);
    detail::put<std::uint32_t>(out, 1);
    detail::put<std::uint32_t>(out, std::uint32_t(grid.n));
    detail::put<std::uint32_t>(out, std::uint32_t(grid.N));
    detail::put<double>(out, state.t);
    detail::put<std::uint32_t>(out, 4);

    auto metric_comps = [&](const MetricField& m) {
        std::vector<const Field*> c;
        for (int i = 0; i < grid.n; ++i)
            for (int j = 0; j < grid.n; ++j) c.push_back(&m.comp(i, j));
        return c;
    };
    auto tensor_comps = [&](const TensorField& tf) {
        std::vector<const Field*> c;
        for (std::size_t k = 0; k < tf.comp_count(); ++k) c.push_back(&tf.comp(k));
        return c;
    };
    detail::put_field_block(out, "g", one_one_sig(), metric_comps(state.g));
    detail::put_field_block(out, "alpha", state.alpha.sig(), tensor_comps(state.alpha));
    detail::put_field_block(out, "eta", state.eta.sig(), tensor_comps(state.eta));
    detail::put_field_block(out, "omega0", one_one_sig(), metric_comps(state.omega0));
    if (!out) throw IoError("snapshot write failed: " + path);
}

inline Snapshot read_snapshot(const std::string& path) {
    detail::require_little_endian();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open snapshot: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "PCFSNAP\0", 8) != 0)
        throw IoError("bad snapshot magic: " + path);
    if (detail::get<std::uint32_t>(in) != 1) throw IoError("unsupported snapshot version");
    Snapshot snap;
    snap.n = int(detail::get<std::uint32_t>(in));
    snap.N = int(detail::get<std::uint32_t>(in));
    snap.t = detail::get<double>(in);
    GridSpec grid(snap.n, snap.N);
    std::uint32_t nfields = detail::get<std::uint32_t>(in);
    for (std::uint32_t f = 0; f < nfields; ++f) {
        std::uint16_t nl = detail::get<std::uint16_t>(in);
        std::string name(nl, '\0');
        in.read(name.data(), nl);
        std::uint8_t rank = detail::get<std::uint8_t>(in);
        Signature sig;
        for (int s = 0; s < int(rank); ++s) {
            std::uint8_t var = detail::get<std::uint8_t>(in);
            std::uint8_t barred = detail::get<std::uint8_t>(in);
            sig.push_back({var ? Variance::Contra : Variance::Co, barred != 0});
        }
        TensorField tf(grid, sig);
        for (std::size_t c = 0; c < tf.comp_count(); ++c) {
            in.read(reinterpret_cast<char*>(tf.comp(c).data()),
                    std::streamsize(tf.comp(c).size() * sizeof(cplx)));
            if (!in) throw IoError("snapshot truncated in field " + name);
        }
        snap.fields.emplace(name, std::move(tf));
    }
    return snap;
}

inline MetricField metric_from_tensor(const TensorField& tf) {
    MetricField m(tf.grid());
    const int n = tf.grid().n;
    if (tf.rank() != 2) throw IoError("snapshot field is not a (1,1) block");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m.comp(i, j) = tf.at({i, j});
    return m;
}

/// Rebuild a FlowState from a snapshot (for restarts).
inline FlowState state_from_snapshot(const Snapshot& snap) {
    FlowState s;
    auto need = [&](const std::string& k) -> const TensorField& {
        auto it = snap.fields.find(k);
        if (it == snap.fields.end()) throw IoError("snapshot missing field: " + k);
        return it->second;
    };
    s.t = snap.t;
    s.g = metric_from_tensor(need("g"));
    s.alpha = need("alpha");
    s.eta = need("eta");
    s.omega0 = metric_from_tensor(need("omega0"));
    return s;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns)
        : out_(path) {
        if (!out_) throw IoError("cannot open csv for writing: " + path);
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out_ << ',';
            out_ << columns[i];
        }
        out_ << '\n';
    }

    void row(const std::vector<double>& values) {
        char buf[32];
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
            out_ << buf;
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

} // namespace pcflab
