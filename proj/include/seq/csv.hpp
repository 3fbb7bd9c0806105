#pragma once
#include <cstdio>
#include <string>
#include <vector>

#include "seq/codebook.hpp"
#include "seq/errors.hpp"

namespace seq {

// Fixed-notation float with enough digits to reproduce the value exactly
// when re-read (%.17g round-trips IEEE doubles).
inline std::string csv_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Sweep CSV, one row per evaluated K. Column order is an external contract.
inline std::string sweep_csv(const std::vector<KSweepRecord>& records,
                             const std::vector<double>& acc_test) {
    if (acc_test.size() != records.size())
        throw PreconditionError("sweep_csv: acc_test and record counts differ");
    std::string out = "K,P_Q_train,acc_test,inertia,seed\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        out += std::to_string(r.k) + "," + csv_num(r.quantizer_accuracy) + "," +
               csv_num(acc_test[i]) + "," + csv_num(r.inertia) + "," + std::to_string(r.seed) + "\n";
    }
    return out;
}

// Generic metric sink: name,value rows in emission order.
struct MetricsCsv {
    std::vector<std::pair<std::string, double>> rows;

    void add(const std::string& name, double value) { rows.emplace_back(name, value); }
    std::string str() const {
        std::string out = "metric,value\n";
        for (const auto& [name, value] : rows) out += name + "," + csv_num(value) + "\n";
        return out;
    }
};

inline void write_text(const std::string& path, const std::string& text) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DataError("cannot open for writing: " + path);
    const std::size_t n = std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
    if (n != text.size()) throw DataError("write failed: " + path);
}

} // namespace seq
