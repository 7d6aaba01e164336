#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ripplekit/analysis.hpp"

namespace ripplekit {

/// Shortest decimal representation that round-trips the double exactly.
[[nodiscard]] inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_trace_csv(const Trace& trace, std::ostream& os) {
    for (std::size_t i = 0; i < trace.names.size(); ++i) {
        os << (i ? "," : "") << trace.names[i];
    }
    os << '\n';
    for (std::size_t row = 0; row < trace.size(); ++row) {
        for (std::size_t c = 0; c < trace.columns.size(); ++c) {
            os << (c ? "," : "") << format_double(trace.columns[c][row]);
        }
        os << '\n';
    }
}

inline void write_trace_csv(const Trace& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("cannot open trace file for writing: " + path);
    }
    write_trace_csv(trace, f);
}

[[nodiscard]] inline Trace read_trace_csv(std::istream& is) {
    Trace trace;
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error("empty trace file");
    }
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
        trace.names.push_back(cell);
    }
    if (trace.names.empty() || trace.names[0] != "t") {
        throw std::runtime_error("trace file must start with a 't' column");
    }
    trace.columns.resize(trace.names.size());
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::size_t col = 0;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p <= end && col < trace.columns.size()) {
            double v = 0.0;
            const auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc()) {
                throw std::runtime_error("malformed number in trace file");
            }
            trace.columns[col++].push_back(v);
            p = res.ptr;
            if (p < end && *p == ',') {
                ++p;
            }
        }
        if (col != trace.columns.size()) {
            throw std::runtime_error("ragged row in trace file");
        }
    }
    const auto& t = trace.column("t");
    if (t.size() >= 2) {
        trace.sample_period = t[1] - t[0];
        trace.validate_uniform();
    }
    return trace;
}

[[nodiscard]] inline Trace read_trace_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw std::runtime_error("cannot open trace file: " + path);
    }
    return read_trace_csv(f);
}

}  // namespace ripplekit
