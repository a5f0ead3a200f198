#include "mvb/report.hpp"

#include <json.hpp>
#include <sstream>

namespace mvb {

using nlohmann::json;

namespace {
const char* kind_name(RowKind k) {
    switch (k) {
        case RowKind::Statistical: return "statistical";
        case RowKind::Residual: return "residual";
        case RowKind::BoundLower: return "bound_lower";
    }
    return "?";
}
} // namespace

bool Report::all_pass() const {
    for (const auto& c : checks)
        if (c.status != "pass") return false;
    return true;
}

bool Report::any_error() const {
    for (const auto& c : checks)
        if (c.status == "error") return true;
    return false;
}

std::string Report::to_json(bool include_timing) const {
    json meta{{"config", config_path},
              {"seed", seed},
              {"parallel", parallel},
              {"version", version}};
    if (include_timing) meta["wall_ms"] = wall_ms;

    json rows_out = json::array();
    for (const auto& c : checks) {
        json rows = json::array();
        for (const auto& r : c.rows) {
            rows.push_back({{"label", r.label},
                            {"kind", kind_name(r.kind)},
                            {"analytic", r.analytic},
                            {"estimate", r.estimate},
                            {"se", r.se},
                            {"z", r.z},
                            {"threshold", r.threshold},
                            {"pass", r.pass}});
        }
        json entry{{"name", c.name}, {"status", c.status}, {"rows", rows}};
        if (!c.error.empty()) entry["error"] = c.error;
        if (include_timing) entry["wall_ms"] = c.wall_ms;
        rows_out.push_back(entry);
    }
    json root{{"meta", meta}, {"checks", rows_out}};
    return root.dump(2);
}

std::string Report::to_csv() const {
    std::ostringstream os;
    os << "check,label,kind,analytic,estimate,se,z,threshold,pass\n";
    os.precision(17);
    for (const auto& c : checks) {
        if (c.status == "error") {
            os << c.name << ",error,,,,,,,\n";
            continue;
        }
        for (const auto& r : c.rows) {
            os << c.name << ',' << r.label << ',' << kind_name(r.kind) << ',' << r.analytic << ','
               << r.estimate << ',' << r.se << ',' << r.z << ',' << r.threshold << ','
               << (r.pass ? "true" : "false") << '\n';
        }
    }
    return os.str();
}

} // namespace mvb
