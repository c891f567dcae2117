#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pxlm/common.hpp"

namespace pxlm {

// Deterministic RNG. The engine is std::mt19937_64 (its output sequence is
// pinned by the standard), but every distribution on top of it is hand-rolled
// here because std::uniform_int_distribution et al. are implementation-defined
// and would break cross-toolchain reproducibility of datasets and runs.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // uniform in [0,1) with 53 random mantissa bits
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // unbiased integer in [0, n) by rejection sampling
    uint64_t below(uint64_t n) {
        if (n == 0) throw NumericError("Rng::below(0)");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    // standard normal via Box-Muller; both uniforms are always drawn and one
    // variate discarded so the engine state never depends on a cached spare
    double normal() {
        double u1 = uniform01(), u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

    // k distinct indices from [0, n), order random (partial Fisher-Yates)
    std::vector<size_t> sample_indices(size_t n, size_t k) {
        if (k > n) throw NumericError("sample_indices: k > n");
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        for (size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + below(n - i)]);
        idx.resize(k);
        return idx;
    }

    // engine state round-trips through the standard stream representation
    std::string state() const {
        std::ostringstream ss;
        ss << eng_;
        return ss.str();
    }
    void set_state(const std::string& s) {
        std::istringstream ss(s);
        ss >> eng_;
        if (ss.fail()) throw DataError("invalid RNG state string");
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace pxlm
