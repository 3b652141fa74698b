#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "pcflab/common.hpp"
#include "pcflab/grid.hpp"

namespace pcflab {

enum class Variance : std::uint8_t { Co, Contra };

/// One tensor slot: covariant/contravariant, barred/unbarred.
struct Slot {
    Variance var = Variance::Co;
    bool barred = false;
    bool operator==(const Slot& o) const { return var == o.var && barred == o.barred; }
};

using Signature = std::vector<Slot>;

inline Slot co_slot() { return {Variance::Co, false}; }
inline Slot co_bar_slot() { return {Variance::Co, true}; }
inline Slot contra_slot() { return {Variance::Contra, false}; }
inline Slot contra_bar_slot() { return {Variance::Contra, true}; }

/// Signature of a pure covariant p-tensor in (T*_{1,0})^{(x) p}.
inline Signature covariant_sig(int p) { return Signature(std::size_t(p), co_slot()); }
/// Signature of a pure contravariant p-tensor in (T_{1,0})^{(x) p}.
inline Signature contravariant_sig(int p) { return Signature(std::size_t(p), contra_slot()); }
/// Signature of a (1,1) tensor h_{i jbar}.
inline Signature one_one_sig() { return {co_slot(), co_bar_slot()}; }

/// Grid-indexed complex tensor field of a fixed pure signature.
///
/// Component storage is component-major: comp(c) is a full grid Field, with the
/// flat component index c running row-major over the slot indices (slot 0 slowest,
/// every extent equal to the complex dimension n).
class TensorField {
public:
    TensorField() = default;
    TensorField(const GridSpec& grid, Signature sig)
        : grid_(grid), sig_(std::move(sig)) {
        std::size_t nc = 1;
        for (std::size_t s = 0; s < sig_.size(); ++s) nc *= std::size_t(grid_.n);
        comps_.resize(nc);
        for (auto& c : comps_) c = grid_.make_field();
    }

    const GridSpec& grid() const { return grid_; }
    const Signature& sig() const { return sig_; }
    int rank() const { return int(sig_.size()); }
    std::size_t comp_count() const { return comps_.size(); }

    Field& comp(std::size_t c) { return comps_[c]; }
    const Field& comp(std::size_t c) const { return comps_[c]; }

    /// Flat component index from per-slot indices.
    std::size_t comp_index(const int* idx) const {
        std::size_t c = 0;
        for (int s = 0; s < rank(); ++s) c = c * std::size_t(grid_.n) + std::size_t(idx[s]);
        return c;
    }

    Field& at(std::initializer_list<int> idx) {
        return comps_[comp_index(idx.begin())];
    }
    const Field& at(std::initializer_list<int> idx) const {
        return comps_[comp_index(idx.begin())];
    }

    /// Conjugate field: bars flip on every slot, values conjugate pointwise.
    TensorField conjugated() const {
        Signature s = sig_;
        for (auto& sl : s) sl.barred = !sl.barred;
        TensorField out(grid_, s);
        for (std::size_t c = 0; c < comps_.size(); ++c)
            for (std::size_t p = 0; p < comps_[c].size(); ++p)
                out.comps_[c][p] = std::conj(comps_[c][p]);
        return out;
    }

    void scale(cplx a) {
        for (auto& c : comps_)
            for (auto& v : c) v *= a;
    }

    /// this += a * other (same signature required).
    void axpy(cplx a, const TensorField& other) {
        if (sig_ != other.sig_ || grid_ != other.grid_)
            throw SignatureError("TensorField::axpy: signature/grid mismatch");
        for (std::size_t c = 0; c < comps_.size(); ++c)
            for (std::size_t p = 0; p < comps_[c].size(); ++p)
                comps_[c][p] += a * other.comps_[c][p];
    }

    double sup_abs() const {
        double m = 0.0;
        for (const auto& c : comps_) m = std::max(m, pcflab::sup_abs(c));
        return m;
    }

    bool finite() const {
        for (const auto& c : comps_)
            for (const auto& v : c)
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }

private:
    GridSpec grid_;
    Signature sig_;
    std::vector<Field> comps_;
};

/// Iterate all per-slot index tuples of a rank-r tensor with extent n.
/// Calls fn(idx pointer, flat component index).
template <typename Fn>
void for_each_component(int rank, int n, Fn&& fn) {
    std::vector<int> idx(std::size_t(std::max(rank, 1)), 0);
    if (rank == 0) { fn(idx.data(), std::size_t(0)); return; }
    std::size_t total = 1;
    for (int s = 0; s < rank; ++s) total *= std::size_t(n);
    for (std::size_t c = 0; c < total; ++c) {
        std::size_t rem = c;
        for (int s = rank - 1; s >= 0; --s) {
            idx[s] = int(rem % n);
            rem /= n;
        }
        fn(idx.data(), c);
    }
}

} // namespace pcflab
