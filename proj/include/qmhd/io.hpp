#pragma once

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "qmhd/config.hpp"

namespace qmhd {

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("sha256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

// Time series with a schema comment line, a header row starting with `time`, and one row per sample.
// Numbers use the shortest round-trip representation.
class CsvTable {
public:
    CsvTable(std::string schema, std::vector<std::string> columns)
        : schema_(std::move(schema)), columns_(std::move(columns)) {}

    void add_row(const std::vector<double>& values) {
        if (values.size() != columns_.size()) throw IoError("csv row width differs from header");
        rows_.push_back(values);
    }
    std::size_t rows() const { return rows_.size(); }
    const std::vector<std::string>& columns() const { return columns_; }

    std::string str() const {
        std::string out = "# schema=" + schema_ + "\n";
        for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
        out += "\n";
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + detail::format_double(r[i]);
            out += "\n";
        }
        return out;
    }

private:
    std::string schema_;
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

inline const std::vector<std::string>& diagnostics_columns() {
    static const std::vector<std::string> c{
        "time",          "kinetic",        "internal",      "cold",           "quantum",
        "magnetic",      "capillary",      "energy",        "viscous",        "pressure_diss",
        "magnetic_diss", "hyper",          "capillary_diss", "quantum_diss",  "mass",
        "min_rho",       "max_rho",        "max_div_b",     "max_div_u",      "picard_iterations",
        "picard_max_ratio"};
    return c;
}

inline std::vector<double> diagnostics_row(const State& s, const PhysParams& phys, const RegParams& reg,
                                           const StepStats* st) {
    const EnergyReport e = compute_energy(s, phys, reg);
    const DissipationReport d = compute_dissipation(s, phys, reg);
    return {s.time,
            e.kinetic,
            e.internal,
            e.cold,
            e.quantum,
            e.magnetic,
            e.capillary,
            e.total(),
            d.viscous,
            d.pressure_diss,
            d.magnetic_diss,
            d.hyper,
            d.capillary_diss,
            d.quantum_diss,
            integrate(s.rho),
            s.rho.min(),
            s.rho.max(),
            divergence(s.B).max_abs(),
            divergence(s.u).max_abs(),
            st ? double(st->iterations) : 0.0,
            st ? st->max_ratio : 0.0};
}

// One line per field: name, min, max, mean, L2 norm. Used by the run log and by `inspect`.
inline std::string field_summary(const std::string& name, const ScalarField& f) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-6s min %.17g max %.17g mean %.17g l2 %.17g\n", name.c_str(), f.min(), f.max(),
                  f.mean(), norm_l2(f));
    return buf;
}

inline std::string snapshot_summary(const Snapshot& s) {
    std::string out;
    if (!s.is_vector) return field_summary("scalar", s.components[0]);
    const char* names[3] = {"x", "y", "z"};
    for (int c = 0; c < 3; ++c) out += field_summary(names[c], s.components[c]);
    return out;
}

// Records files written under a root directory with their SHA-256.
class Manifest {
public:
    explicit Manifest(std::filesystem::path root) : root_(std::move(root)) {}

    void write(const std::string& rel, const std::string& bytes) {
        write_file_atomic(root_ / rel, bytes);
        entries_.push_back({rel, sha256_hex(bytes)});
    }
    void note(const std::string& line) { notes_.push_back(line); }

    std::string str() const {
        std::string out = "# qmhd manifest v1\n";
        for (const auto& n : notes_) out += n + "\n";
        for (const auto& e : entries_) out += "file " + e.first + " sha256 " + e.second + "\n";
        return out;
    }
    void finish(const std::string& name = "manifest.txt") const { write_file_atomic(root_ / name, str()); }

private:
    std::filesystem::path root_;
    std::vector<std::pair<std::string, std::string>> entries_;
    std::vector<std::string> notes_;
};

}  // namespace qmhd
