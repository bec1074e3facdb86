#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qmhd/field.hpp"

namespace qmhd {

// Snapshot layout, all integers little-endian:
//   0  char[4] "QMHD"       4  u32 version (1)     8  u32 dim
//   12 u32 n0  16 u32 n1  20 u32 n2 (1 on unused axes)
//   24 u32 kind (0 scalar, 1 vector)   28 u32 component count
//   32 f64 time               40..63 zero
// followed by f64 samples, component-major, row-major within a component.
inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 64;

struct Snapshot {
    TorusGrid grid;
    double time = 0.0;
    bool is_vector = false;
    std::vector<ScalarField> components;

    ScalarField scalar() const {
        if (is_vector) throw IoError("snapshot holds a vector field");
        return components.at(0);
    }
    VectorField vector() const {
        if (!is_vector) throw IoError("snapshot holds a scalar field");
        return VectorField(components.at(0), components.at(1), components.at(2));
    }
};

// Writes through a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace detail {

template <class T>
void put_le(std::string& buf, std::size_t offset, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(buf.data() + offset, bytes, sizeof(T));
}

template <class T>
T get_le(const std::string& buf, std::size_t offset) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, buf.data() + offset, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

inline std::string encode_snapshot(const TorusGrid& g, double time, bool is_vector,
                                   const std::vector<const ScalarField*>& comps) {
    std::string buf(kSnapshotHeaderBytes + comps.size() * g.size() * sizeof(double), '\0');
    std::memcpy(buf.data(), "QMHD", 4);
    put_le<std::uint32_t>(buf, 4, kSnapshotVersion);
    put_le<std::uint32_t>(buf, 8, static_cast<std::uint32_t>(g.dim()));
    for (int a = 0; a < 3; ++a)
        put_le<std::uint32_t>(buf, 12 + 4 * a, static_cast<std::uint32_t>(g.points(a)));
    put_le<std::uint32_t>(buf, 24, is_vector ? 1u : 0u);
    put_le<std::uint32_t>(buf, 28, static_cast<std::uint32_t>(comps.size()));
    put_le<double>(buf, 32, time);
    std::size_t off = kSnapshotHeaderBytes;
    for (const ScalarField* c : comps)
        for (std::size_t i = 0; i < g.size(); ++i, off += sizeof(double)) put_le<double>(buf, off, (*c)[i]);
    return buf;
}

}  // namespace detail

inline std::string encode_snapshot(const ScalarField& f, double time) {
    return detail::encode_snapshot(f.grid(), time, false, {&f});
}

inline std::string encode_snapshot(const VectorField& v, double time) {
    return detail::encode_snapshot(v.grid(), time, true, {&v[0], &v[1], &v[2]});
}

inline Snapshot decode_snapshot(const std::string& buf) {
    using detail::get_le;
    if (buf.size() < kSnapshotHeaderBytes || std::memcmp(buf.data(), "QMHD", 4) != 0)
        throw IoError("not a QMHD snapshot");
    if (get_le<std::uint32_t>(buf, 4) != kSnapshotVersion) throw IoError("unsupported snapshot version");
    const int dim = static_cast<int>(get_le<std::uint32_t>(buf, 8));
    if (dim < 1 || dim > 3) throw IoError("snapshot: bad dimension");
    std::array<int, 3> n{};
    for (int a = 0; a < 3; ++a) n[a] = static_cast<int>(get_le<std::uint32_t>(buf, 12 + 4 * a));
    const std::uint32_t kind = get_le<std::uint32_t>(buf, 24);
    const std::uint32_t ncomp = get_le<std::uint32_t>(buf, 28);
    if (kind > 1 || ncomp != (kind == 1 ? 3u : 1u)) throw IoError("snapshot: bad field kind");
    Snapshot snap;
    try {
        snap.grid = TorusGrid(dim, n);
    } catch (const ValidationError& e) {
        throw IoError(std::string("snapshot: bad grid: ") + e.what());
    }
    snap.time = get_le<double>(buf, 32);
    snap.is_vector = kind == 1;
    const std::size_t npts = snap.grid.size();
    if (buf.size() != kSnapshotHeaderBytes + ncomp * npts * sizeof(double))
        throw IoError("snapshot: payload size does not match header");
    std::size_t off = kSnapshotHeaderBytes;
    for (std::uint32_t c = 0; c < ncomp; ++c) {
        ScalarField f(snap.grid);
        for (std::size_t i = 0; i < npts; ++i, off += sizeof(double)) f[i] = get_le<double>(buf, off);
        snap.components.push_back(std::move(f));
    }
    return snap;
}

inline void write_snapshot(const std::filesystem::path& path, const ScalarField& f, double time) {
    write_file_atomic(path, encode_snapshot(f, time));
}

inline void write_snapshot(const std::filesystem::path& path, const VectorField& v, double time) {
    write_file_atomic(path, encode_snapshot(v, time));
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
    return decode_snapshot(read_file(path));
}

}  // namespace qmhd
