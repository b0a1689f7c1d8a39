#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "detdiff/fractal.hpp"
#include "detdiff/version.hpp"

namespace detdiff {

// FNV-1a, used to stamp outputs with a hash of the effective configuration.
inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string config_hash_hex(const std::string& canonical) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical)));
    return buf;
}

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// CSV with '#'-prefixed metadata header lines.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    }

    void meta(const std::string& key, const std::string& value) {
        out_ << "# " << key << ": " << value << "\n";
    }
    void stamp(const std::string& config_canonical) {
        meta("tool", std::string("detdiff ") + kVersion);
        meta("config", config_hash_hex(config_canonical));
    }
    void header(const std::vector<std::string>& cols) {
        for (size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
        out_ << "\n";
    }
    void row(const std::vector<double>& vals) {
        for (size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << fmt_double(vals[i]);
        out_ << "\n";
    }
    void raw_row(const std::vector<std::string>& vals) {
        for (size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << vals[i];
        out_ << "\n";
    }
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

// Reads a (param,value) CSV, skipping '#' comments and the header row.
// Rows with non-finite values (backend refusals) are dropped.
inline GraphSample read_graph_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    GraphSample g;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) continue;
        char* end = nullptr;
        double x = std::strtod(a.c_str(), &end);
        if (end == a.c_str()) continue; // header row
        double y = std::strtod(b.c_str(), nullptr);
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        g.param.push_back(x);
        g.value.push_back(y);
    }
    if (g.param.size() < 2) throw std::runtime_error("graph CSV has fewer than 2 usable rows: " + path);
    return g;
}

} // namespace detdiff
