#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvulog/cube.hpp"

namespace tvulog {

namespace detail {

template <class T>
void write_le(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    os.write(b.data(), sizeof(T));
}

template <class T>
T read_le(std::istream& is, const char* what) {
    std::array<char, sizeof(T)> b;
    is.read(b.data(), sizeof(T));
    if (!is) throw std::runtime_error(std::string(what) + ": truncated payload");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    T v;
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
}

inline void write_magic(std::ostream& os, const char m[4]) { os.write(m, 4); }

inline void expect_magic(std::istream& is, const char m[4], const char* what) {
    char got[4];
    is.read(got, 4);
    if (!is || std::memcmp(got, m, 4) != 0)
        throw std::runtime_error(std::string(what) + ": magic mismatch");
}

// Shortest round-trip decimal form; used by every text artifact so reruns
// with the same seed are byte-identical.
inline std::string format_double(double v) {
    std::array<char, 32> buf;
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

}  // namespace detail

// Cube container: magic TVUC, version, dims, steps, scale ladder, then the
// row-major (i slowest, k fastest) little-endian f64 payload.
inline void write_cube(const std::string& path, const ScaleSpaceCube& u) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("tvuc: cannot open " + path + " for writing");
    detail::write_magic(os, "TVUC");
    detail::write_le<std::uint32_t>(os, 1);
    detail::write_le<std::uint32_t>(os, std::uint32_t(u.grid.dim));
    detail::write_le<std::uint32_t>(os, std::uint32_t(u.grid.n1));
    detail::write_le<std::uint32_t>(os, std::uint32_t(u.grid.n2));
    detail::write_le<std::uint32_t>(os, std::uint32_t(u.scales.count()));
    detail::write_le<double>(os, u.grid.h1);
    detail::write_le<double>(os, u.grid.h2);
    for (double t : u.scales.t) detail::write_le<double>(os, t);
    for (double v : u.v) detail::write_le<double>(os, v);
    if (!os) throw std::runtime_error("tvuc: write failed for " + path);
}

inline ScaleSpaceCube read_cube(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("tvuc: cannot open " + path);
    detail::expect_magic(is, "TVUC", "tvuc");
    const auto version = detail::read_le<std::uint32_t>(is, "tvuc");
    if (version != 1) throw std::runtime_error("tvuc: unsupported version");
    const auto d = detail::read_le<std::uint32_t>(is, "tvuc");
    const auto n1 = detail::read_le<std::uint32_t>(is, "tvuc");
    const auto n2 = detail::read_le<std::uint32_t>(is, "tvuc");
    const auto K = detail::read_le<std::uint32_t>(is, "tvuc");
    const double h1 = detail::read_le<double>(is, "tvuc");
    const double h2 = detail::read_le<double>(is, "tvuc");
    if (d != 1 && d != 2) throw std::runtime_error("tvuc: dimension must be 1 or 2");
    if (n1 < 3 || (d == 2 && n2 < 3) || (d == 1 && n2 != 1))
        throw std::runtime_error("tvuc: bad spatial extent");
    if (K < 2) throw std::runtime_error("tvuc: need at least two scales");
    if (!(h1 > 0.0) || !(h2 > 0.0)) throw std::runtime_error("tvuc: bad grid step");
    const std::uint64_t total = std::uint64_t(n1) * n2 * K;
    if (total > (std::uint64_t(1) << 32)) throw std::runtime_error("tvuc: dimension overflow");
    ScaleSpaceCube u;
    u.grid = SpatialGrid{int(d), n1, n2, h1, h2};
    u.scales.t.resize(K);
    for (auto& t : u.scales.t) t = detail::read_le<double>(is, "tvuc");
    for (std::size_t k = 0; k < K; ++k)
        if (!(u.scales.t[k] > 0.0) || (k > 0 && !(u.scales.t[k] > u.scales.t[k - 1])))
            throw std::runtime_error("tvuc: scales must be positive and ascending");
    u.scales.ratio = u.scales.t[1] / u.scales.t[0];
    u.v.resize(std::size_t(total));
    for (auto& v : u.v) v = detail::read_le<double>(is, "tvuc");
    return u;
}

// Posterior sample archive: magic TVSS, grid header, generator seed, one log
// density and one row-major f64 signal per sample.
struct SampleSet {
    SpatialGrid grid;
    std::vector<std::vector<double>> samples;
    std::vector<double> log_density;
    std::uint64_t seed = 0;

    std::size_t count() const { return samples.size(); }
};

inline void write_sample_set(const std::string& path, const SampleSet& set) {
    if (set.samples.size() != set.log_density.size())
        throw std::invalid_argument("tvss: sample/log-density count mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("tvss: cannot open " + path + " for writing");
    detail::write_magic(os, "TVSS");
    detail::write_le<std::uint32_t>(os, 1);
    detail::write_le<std::uint32_t>(os, std::uint32_t(set.grid.dim));
    detail::write_le<std::uint32_t>(os, std::uint32_t(set.grid.n1));
    detail::write_le<std::uint32_t>(os, std::uint32_t(set.grid.n2));
    detail::write_le<double>(os, set.grid.h1);
    detail::write_le<double>(os, set.grid.h2);
    detail::write_le<std::uint32_t>(os, std::uint32_t(set.samples.size()));
    detail::write_le<std::uint64_t>(os, set.seed);
    for (double ld : set.log_density) detail::write_le<double>(os, ld);
    for (const auto& f : set.samples) {
        if (f.size() != set.grid.size()) throw std::invalid_argument("tvss: sample size mismatch");
        for (double v : f) detail::write_le<double>(os, v);
    }
    if (!os) throw std::runtime_error("tvss: write failed for " + path);
}

inline SampleSet read_sample_set(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("tvss: cannot open " + path);
    detail::expect_magic(is, "TVSS", "tvss");
    const auto version = detail::read_le<std::uint32_t>(is, "tvss");
    if (version != 1) throw std::runtime_error("tvss: unsupported version");
    const auto d = detail::read_le<std::uint32_t>(is, "tvss");
    const auto n1 = detail::read_le<std::uint32_t>(is, "tvss");
    const auto n2 = detail::read_le<std::uint32_t>(is, "tvss");
    const double h1 = detail::read_le<double>(is, "tvss");
    const double h2 = detail::read_le<double>(is, "tvss");
    const auto S = detail::read_le<std::uint32_t>(is, "tvss");
    const auto seed = detail::read_le<std::uint64_t>(is, "tvss");
    if (d != 1 && d != 2) throw std::runtime_error("tvss: dimension must be 1 or 2");
    const std::uint64_t total = std::uint64_t(n1) * n2 * S;
    if (total > (std::uint64_t(1) << 33)) throw std::runtime_error("tvss: dimension overflow");
    SampleSet set;
    set.grid = SpatialGrid{int(d), n1, n2, h1, h2};
    set.seed = seed;
    set.log_density.resize(S);
    for (auto& ld : set.log_density) ld = detail::read_le<double>(is, "tvss");
    set.samples.assign(S, std::vector<double>(std::size_t(n1) * n2));
    for (auto& f : set.samples)
        for (auto& v : f) v = detail::read_le<double>(is, "tvss");
    return set;
}

// Plain-text PBM (P1), 1 = set pixel; width = n2 columns, height = n1 rows.
inline void write_pbm(const std::string& path, std::size_t n1, std::size_t n2,
                      const std::vector<std::uint8_t>& mask) {
    if (mask.size() != n1 * n2) throw std::invalid_argument("pbm: size mismatch");
    std::ofstream os(path);
    if (!os) throw std::runtime_error("pbm: cannot open " + path + " for writing");
    os << "P1\n" << n2 << " " << n1 << "\n";
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            os << (mask[i * n2 + j] ? '1' : '0');
            os << (j + 1 == n2 ? '\n' : ' ');
        }
    }
    if (!os) throw std::runtime_error("pbm: write failed for " + path);
}

}  // namespace tvulog
