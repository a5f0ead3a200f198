#ifndef MVB_REPORT_HPP
#define MVB_REPORT_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace mvb {

inline constexpr const char* kVersion = "0.1.0";

/// How a row decides pass/fail.
enum class RowKind {
    Statistical, // |z| <= threshold
    Residual,    // estimate <= threshold
    BoundLower,  // estimate >= threshold
};

struct CheckRow {
    std::string label;
    RowKind kind = RowKind::Statistical;
    double analytic = 0.0;
    double estimate = 0.0;
    double se = 0.0;
    double z = 0.0;
    double threshold = 3.0;
    bool pass = false;
};

struct CheckResult {
    std::string name;
    std::string status; // "pass" | "fail" | "error"
    std::vector<CheckRow> rows;
    std::string error;
    double wall_ms = 0.0;

    bool passed() const { return status == "pass"; }
};

struct Report {
    std::string config_path;
    uint64_t seed = 0;
    bool parallel = false;
    std::string version = kVersion;
    double wall_ms = 0.0;
    std::vector<CheckResult> checks;

    bool all_pass() const;
    bool any_error() const;

    /// JSON text; timing metadata included only when requested, so that
    /// reports from identical runs compare bit-identically.
    std::string to_json(bool include_timing = true) const;
    std::string to_csv() const;
};

} // namespace mvb

#endif
