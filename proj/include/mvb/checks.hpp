#ifndef MVB_CHECKS_HPP
#define MVB_CHECKS_HPP

#include "mvb/config.hpp"
#include "mvb/report.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mvb {

/// Catalog entry: check name plus the one-line identity it verifies.
struct CheckInfo {
    std::string name;
    std::string anchor;
};

/// The fixed catalog of verifiable identities.
const std::vector<CheckInfo>& check_catalog();

struct RunOptions {
    bool parallel = false;
    std::optional<uint64_t> seed;       // overrides the config seed
    std::optional<std::string> out_dir; // write report.json/report.csv + replicate CSVs
    std::string config_path;            // metadata only
};

/// Run every configured check; solver divergence marks the check errored and
/// the run continues. Report order follows the config regardless of the
/// parallel flag.
Report run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

} // namespace mvb

#endif
