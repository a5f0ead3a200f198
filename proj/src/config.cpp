#include "mvb/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace mvb {

using nlohmann::json;

namespace {

class Violations {
public:
    void add(const std::string& msg) { list_.push_back(msg); }
    bool empty() const { return list_.empty(); }
    std::vector<std::string> take() { return std::move(list_); }

private:
    std::vector<std::string> list_;
};

bool numeric_array(const json& j) {
    if (!j.is_array()) return false;
    for (const auto& v : j)
        if (!v.is_number()) return false;
    return true;
}

Eigen::VectorXd to_vector(const json& j) {
    Eigen::VectorXd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = j[i].get<double>();
    return v;
}

// accepts a flat row-major array of d*d numbers or d nested rows
std::optional<Eigen::MatrixXd> to_matrix(const json& j, int d, Violations& bad) {
    Eigen::MatrixXd m(d, d);
    if (numeric_array(j)) {
        if (static_cast<int>(j.size()) != d * d) {
            bad.add("model.rate_matrix: expected " + std::to_string(d * d) +
                    " entries (row-major), got " + std::to_string(j.size()));
            return std::nullopt;
        }
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) m(i, k) = j[i * d + k].get<double>();
        return m;
    }
    if (j.is_array() && static_cast<int>(j.size()) == d) {
        for (int i = 0; i < d; ++i) {
            if (!numeric_array(j[i]) || static_cast<int>(j[i].size()) != d) {
                bad.add("model.rate_matrix: row " + std::to_string(i) + " must hold " +
                        std::to_string(d) + " numbers");
                return std::nullopt;
            }
            for (int k = 0; k < d; ++k) m(i, k) = j[i][k].get<double>();
        }
        return m;
    }
    bad.add("model.rate_matrix: expected a numeric array");
    return std::nullopt;
}

std::optional<Eigen::VectorXd> site_vector(const json& parent, const std::string& key, int d,
                                           Violations& bad, const std::string& where) {
    if (!parent.contains(key)) {
        bad.add(where + "." + key + ": missing");
        return std::nullopt;
    }
    const json& j = parent[key];
    if (!numeric_array(j) || static_cast<int>(j.size()) != d) {
        bad.add(where + "." + key + ": expected " + std::to_string(d) + " numbers");
        return std::nullopt;
    }
    return to_vector(j);
}

std::optional<FiniteMeasure> parse_measure(const json& parent, const std::string& key,
                                           const SiteSetPtr& sites, Violations& bad,
                                           const std::string& where) {
    auto v = site_vector(parent, key, sites->size(), bad, where);
    if (!v) return std::nullopt;
    try {
        return FiniteMeasure(sites, *v);
    } catch (const std::exception& e) {
        bad.add(where + "." + key + ": " + e.what());
        return std::nullopt;
    }
}

std::optional<EntranceLawSpec> parse_entrance(const json& j, const SiteSetPtr& sites,
                                              Violations& bad, const std::string& where) {
    auto kappa = parse_measure(j, "kappa", sites, bad, where);
    std::vector<EntranceAtom> atoms;
    bool ok = kappa.has_value();
    if (j.contains("atoms")) {
        if (!j["atoms"].is_array()) {
            bad.add(where + ".atoms: expected an array");
            ok = false;
        } else {
            int idx = 0;
            for (const auto& a : j["atoms"]) {
                std::string aw = where + ".atoms[" + std::to_string(idx++) + "]";
                if (!a.is_object() || !a.contains("weight") || !a["weight"].is_number()) {
                    bad.add(aw + ": expected {weight, mu0}");
                    ok = false;
                    continue;
                }
                auto mu0 = parse_measure(a, "mu0", sites, bad, aw);
                if (!mu0) {
                    ok = false;
                    continue;
                }
                double w = a["weight"].get<double>();
                if (!(w > 0.0)) {
                    bad.add(aw + ".weight: must be > 0");
                    ok = false;
                    continue;
                }
                atoms.push_back({w, PEntranceLaw::closed(*mu0)});
            }
        }
    }
    if (!ok) return std::nullopt;
    return EntranceLawSpec{PEntranceLaw::closed(*kappa), std::move(atoms)};
}

const std::vector<std::string>& known_checks() {
    static const std::vector<std::string> names = {
        "laplace_superprocess", "laplace_immigration", "skew_identity", "sc_axiom",
        "occupation",           "stationary",          "near_birth",    "moment_flow"};
    return names;
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> v)
    : std::runtime_error([&v] {
          std::ostringstream os;
          os << "invalid experiment config (" << v.size() << " violation"
             << (v.size() == 1 ? "" : "s") << "):";
          for (const auto& s : v) os << "\n  - " << s;
          return os.str();
      }()),
      violations(std::move(v)) {}

EntranceLawSpec ExperimentConfig::entrance_spec() const {
    EntranceLawSpec spec{PEntranceLaw::closed(immigration.kappa_rate), {}};
    for (const auto& atom : immigration.cluster_atoms) {
        if (atom.rate > 0.0) spec.atoms.push_back({atom.rate, PEntranceLaw::closed(atom.seed)});
    }
    return spec;
}

SCSemigroupSpec ExperimentConfig::sc_spec() const { return {entrance_spec(), mech, motion}; }

ExperimentConfig parse_config(const std::string& text) {
    Violations bad;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        bad.add(std::string("JSON parse error: ") + e.what());
        throw ConfigError(bad.take());
    }

    // --- model ---
    SiteSetPtr sites;
    if (!root.contains("model") || !root["model"].is_object()) {
        bad.add("model: missing object");
        throw ConfigError(bad.take());
    }
    const json& model = root["model"];
    if (model.contains("sites") && model["sites"].is_array() && !model["sites"].empty()) {
        std::vector<std::string> labels;
        bool ok = true;
        for (const auto& s : model["sites"]) {
            if (!s.is_string()) {
                bad.add("model.sites: labels must be strings");
                ok = false;
                break;
            }
            labels.push_back(s.get<std::string>());
        }
        if (ok) {
            try {
                sites = std::make_shared<const SiteSet>(std::move(labels));
            } catch (const std::exception& e) {
                bad.add(std::string("model.sites: ") + e.what());
            }
        }
    } else {
        bad.add("model.sites: expected a non-empty array of labels");
    }
    if (!sites) throw ConfigError(bad.take());
    int d = sites->size();

    std::optional<MotionModel> motion;
    if (model.contains("rate_matrix")) {
        auto q = to_matrix(model["rate_matrix"], d, bad);
        if (q) {
            try {
                motion.emplace(sites, *q);
            } catch (const std::exception& e) {
                bad.add(std::string("model.rate_matrix: ") + e.what());
            }
        }
    } else {
        bad.add("model.rate_matrix: missing");
    }

    std::optional<BranchingMechanism> mech;
    if (model.contains("mechanism") && model["mechanism"].is_object()) {
        const json& mj = model["mechanism"];
        auto b = site_vector(mj, "b", d, bad, "model.mechanism");
        auto c = site_vector(mj, "c", d, bad, "model.mechanism");
        std::vector<std::vector<JumpAtom>> atoms(d);
        bool atoms_ok = true;
        if (mj.contains("m")) {
            const json& m = mj["m"];
            if (!m.is_array() || static_cast<int>(m.size()) != d) {
                bad.add("model.mechanism.m: expected one atom list per site");
                atoms_ok = false;
            } else {
                for (int i = 0; i < d && atoms_ok; ++i) {
                    for (const auto& pair : m[i]) {
                        if (!numeric_array(pair) || pair.size() != 2) {
                            bad.add("model.mechanism.m: atoms are [size, weight] pairs");
                            atoms_ok = false;
                            break;
                        }
                        atoms[i].push_back({pair[0].get<double>(), pair[1].get<double>()});
                    }
                }
            }
        }
        if (b && c && atoms_ok) {
            try {
                mech.emplace(sites, *b, *c, std::move(atoms));
            } catch (const std::exception& e) {
                bad.add(std::string("model.mechanism: ") + e.what());
            }
        }
    } else {
        bad.add("model.mechanism: missing object");
    }

    auto initial = parse_measure(model, "initial", sites, bad, "model");

    // --- solver / simulation ---
    SolverSettings solver;
    if (root.contains("solver")) {
        const json& s = root["solver"];
        if (s.contains("step")) solver.step = s["step"].get<double>();
        if (s.contains("horizon")) solver.horizon = s["horizon"].get<double>();
    }
    if (!(solver.step > 0.0)) bad.add("solver.step: must be > 0");

    SimulationSettings sim;
    if (root.contains("simulation")) {
        const json& s = root["simulation"];
        if (s.contains("n")) sim.n = s["n"].get<int64_t>();
        if (s.contains("replicates")) sim.replicates = s["replicates"].get<int>();
        if (s.contains("seed")) sim.seed = s["seed"].get<uint64_t>();
        if (s.contains("window")) sim.window = s["window"].get<double>();
    }
    if (sim.n < 1) bad.add("simulation.n: must be >= 1");
    if (sim.replicates < 1) bad.add("simulation.replicates: must be >= 1");

    // --- targets ---
    std::vector<Target> targets;
    if (root.contains("targets") && root["targets"].is_array()) {
        int idx = 0;
        for (const auto& tj : root["targets"]) {
            std::string where = "targets[" + std::to_string(idx++) + "]";
            auto f = site_vector(tj, "f", d, bad, where);
            Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
            if (tj.contains("g")) {
                auto gv = site_vector(tj, "g", d, bad, where);
                if (gv) g = *gv;
            }
            double t = tj.contains("t") ? tj["t"].get<double>() : 1.0;
            double r = tj.contains("r") ? tj["r"].get<double>() : 0.0;
            if (t < 0.0) bad.add(where + ".t: must be >= 0");
            if (r < 0.0) bad.add(where + ".r: must be >= 0");
            if (f) {
                try {
                    targets.push_back(
                        Target{TestFunction(sites, *f), TestFunction(sites, g), t, r});
                } catch (const std::exception& e) {
                    bad.add(where + ": " + e.what());
                }
            }
        }
    }

    // --- immigration ---
    ImmigrationSpec immigration = ImmigrationSpec::none(sites);
    if (root.contains("immigration")) {
        const json& ij = root["immigration"];
        auto kappa = parse_measure(ij, "kappa_rate", sites, bad, "immigration");
        if (kappa) immigration.kappa_rate = *kappa;
        if (ij.contains("clusters")) {
            int idx = 0;
            for (const auto& cj : ij["clusters"]) {
                std::string where = "immigration.clusters[" + std::to_string(idx++) + "]";
                if (!cj.contains("rate") || !cj["rate"].is_number()) {
                    bad.add(where + ".rate: missing number");
                    continue;
                }
                double rate = cj["rate"].get<double>();
                if (rate < 0.0) {
                    bad.add(where + ".rate: must be >= 0");
                    continue;
                }
                auto seed = parse_measure(cj, "seed", sites, bad, where);
                if (seed) immigration.cluster_atoms.push_back({rate, *seed});
            }
        }
    }

    // --- inhomogeneous ingredients ---
    std::optional<InhomogeneousSCSpec> inhomogeneous;
    if (root.contains("inhomogeneous")) {
        const json& hj = root["inhomogeneous"];
        InhomogeneousSCSpec spec;
        if (hj.contains("step_open")) {
            int idx = 0;
            for (const auto& aj : hj["step_open"]) {
                std::string where = "inhomogeneous.step_open[" + std::to_string(idx++) + "]";
                if (!aj.contains("time") || !aj["time"].is_number()) {
                    bad.add(where + ".time: missing number");
                    continue;
                }
                auto law = parse_entrance(aj, sites, bad, where);
                if (law) spec.step_open.push_back({aj["time"].get<double>(), *law});
            }
        }
        if (hj.contains("step_closed")) {
            int idx = 0;
            for (const auto& aj : hj["step_closed"]) {
                std::string where = "inhomogeneous.step_closed[" + std::to_string(idx++) + "]";
                if (!aj.contains("time") || !aj["time"].is_number()) {
                    bad.add(where + ".time: missing number");
                    continue;
                }
                auto eta = parse_measure(aj, "eta", sites, bad, where);
                if (!eta) continue;
                ClosedInitialLaw law{*eta, {}};
                if (aj.contains("atoms")) {
                    for (const auto& pj : aj["atoms"]) {
                        if (!pj.contains("weight") || !pj["weight"].is_number()) {
                            bad.add(where + ".atoms: expected {weight, nu}");
                            continue;
                        }
                        auto nu = parse_measure(pj, "nu", sites, bad, where);
                        if (nu) law.atoms.emplace_back(pj["weight"].get<double>(), *nu);
                    }
                }
                spec.step_closed.push_back({aj["time"].get<double>(), law});
            }
        }
        if (hj.contains("continuous")) {
            const json& cj = hj["continuous"];
            ContinuousPart part{{}, EntranceLawSpec{PEntranceLaw::closed(FiniteMeasure::zero(sites)), {}}};
            auto law = parse_entrance(cj, sites, bad, "inhomogeneous.continuous");
            bool ok = law.has_value();
            if (law) part.law = *law;
            if (cj.contains("intervals")) {
                for (const auto& ivj : cj["intervals"]) {
                    if (!ivj.contains("lo") || !ivj.contains("hi") || !ivj.contains("rate")) {
                        bad.add("inhomogeneous.continuous.intervals: expected {lo, hi, rate}");
                        ok = false;
                        continue;
                    }
                    part.intervals.push_back({ivj["lo"].get<double>(), ivj["hi"].get<double>(),
                                              ivj["rate"].get<double>()});
                }
            }
            if (ok) spec.continuous = std::move(part);
        }
        try {
            spec.validate();
            inhomogeneous = std::move(spec);
        } catch (const std::exception& e) {
            bad.add(std::string("inhomogeneous: ") + e.what());
        }
    }

    // --- triples ---
    std::vector<std::array<double, 3>> triples;
    if (root.contains("triples")) {
        int idx = 0;
        for (const auto& tj : root["triples"]) {
            std::string where = "triples[" + std::to_string(idx++) + "]";
            if (!numeric_array(tj) || tj.size() != 3) {
                bad.add(where + ": expected [r, s, t]");
                continue;
            }
            std::array<double, 3> rst = {tj[0].get<double>(), tj[1].get<double>(),
                                         tj[2].get<double>()};
            if (!(rst[0] <= rst[1] && rst[1] <= rst[2]))
                bad.add(where + ": need r <= s <= t");
            else
                triples.push_back(rst);
        }
    }

    // --- near-birth settings ---
    NearBirthSettings nb;
    if (root.contains("near_birth")) {
        const json& nj = root["near_birth"];
        if (nj.contains("clusters")) nb.clusters = nj["clusters"].get<int>();
        if (nj.contains("probe")) nb.probe = nj["probe"].get<double>();
        if (nj.contains("n")) nb.n = nj["n"].get<int64_t>();
        if (nj.contains("site")) nb.site = nj["site"].get<int>();
        if (nb.site < 0 || nb.site >= d) bad.add("near_birth.site: out of range");
        if (nj.contains("concentration_min"))
            nb.concentration_min = nj["concentration_min"].get<double>();
        if (nj.contains("mass_factor")) nb.mass_factor = nj["mass_factor"].get<double>();
        if (nj.contains("quantile")) nb.quantile = nj["quantile"].get<double>();
        if (nb.clusters < 1) bad.add("near_birth.clusters: must be >= 1");
        if (!(nb.probe > 0.0)) bad.add("near_birth.probe: must be > 0");
    }

    // --- checks ---
    std::vector<std::string> checks;
    if (root.contains("checks")) {
        if (!root["checks"].is_array()) {
            bad.add("checks: expected an array of check names");
        } else {
            for (const auto& cj : root["checks"]) {
                if (!cj.is_string()) {
                    bad.add("checks: names must be strings");
                    continue;
                }
                std::string name = cj.get<std::string>();
                const auto& known = known_checks();
                if (std::find(known.begin(), known.end(), name) == known.end())
                    bad.add("checks: unknown check '" + name + "'");
                else
                    checks.push_back(name);
            }
        }
    }

    // cross-requirements
    auto needs_target = [&](const std::string& name) {
        return name != "sc_axiom" && name != "near_birth";
    };
    for (const auto& name : checks) {
        if (needs_target(name) && targets.empty())
            bad.add("checks: '" + name + "' requires at least one target");
        if (name == "sc_axiom" && (!inhomogeneous || triples.empty()))
            bad.add("checks: 'sc_axiom' requires an inhomogeneous spec and triples");
        if (name == "stationary" && !(sim.window > 0.0))
            bad.add("checks: 'stationary' requires simulation.window > 0");
    }

    if (!bad.empty() || !motion || !mech || !initial) {
        if (bad.empty()) bad.add("config: incomplete model");
        throw ConfigError(bad.take());
    }

    return ExperimentConfig{sites,
                            std::move(*motion),
                            std::move(*mech),
                            std::move(*initial),
                            solver,
                            sim,
                            std::move(targets),
                            std::move(immigration),
                            std::move(inhomogeneous),
                            std::move(triples),
                            nb,
                            std::move(checks)};
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file: " + path});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

} // namespace mvb
