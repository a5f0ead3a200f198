#include "mvb/measure.hpp"

#include <set>
#include <stdexcept>

namespace mvb {

SiteSet::SiteSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty())
        throw std::invalid_argument("SiteSet: need at least one site");
    std::set<std::string> seen(labels_.begin(), labels_.end());
    if (seen.size() != labels_.size())
        throw std::invalid_argument("SiteSet: labels must be distinct");
}

std::shared_ptr<const SiteSet> SiteSet::indexed(int d) {
    std::vector<std::string> labels;
    labels.reserve(d);
    for (int i = 0; i < d; ++i) labels.push_back("s" + std::to_string(i));
    return std::make_shared<const SiteSet>(std::move(labels));
}

bool same_sites(const SiteSetPtr& a, const SiteSetPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    return a->labels() == b->labels();
}

namespace {
void check_dim(const SiteSetPtr& sites, const Eigen::VectorXd& v, const char* what) {
    if (!sites) throw std::invalid_argument(std::string(what) + ": null site set");
    if (v.size() != sites->size())
        throw std::invalid_argument(std::string(what) + ": vector length " +
                                    std::to_string(v.size()) + " does not match site count " +
                                    std::to_string(sites->size()));
}
} // namespace

FiniteMeasure::FiniteMeasure(SiteSetPtr sites, Eigen::VectorXd masses)
    : sites_(std::move(sites)), masses_(std::move(masses)) {
    check_dim(sites_, masses_, "FiniteMeasure");
    for (int i = 0; i < masses_.size(); ++i) {
        if (!(masses_(i) >= 0.0))
            throw std::invalid_argument("FiniteMeasure: component " + std::to_string(i) +
                                        " is negative or NaN");
    }
}

FiniteMeasure FiniteMeasure::zero(SiteSetPtr sites) {
    int d = sites->size();
    return FiniteMeasure(std::move(sites), Eigen::VectorXd::Zero(d));
}

TestFunction::TestFunction(SiteSetPtr sites, Eigen::VectorXd values)
    : sites_(std::move(sites)), values_(std::move(values)) {
    check_dim(sites_, values_, "TestFunction");
    for (int i = 0; i < values_.size(); ++i) {
        if (!(values_(i) >= 0.0))
            throw std::invalid_argument("TestFunction: component " + std::to_string(i) +
                                        " is negative or NaN");
    }
}

TestFunction TestFunction::zero(SiteSetPtr sites) {
    int d = sites->size();
    return TestFunction(std::move(sites), Eigen::VectorXd::Zero(d));
}

TestFunction TestFunction::constant(SiteSetPtr sites, double value) {
    int d = sites->size();
    return TestFunction(std::move(sites), Eigen::VectorXd::Constant(d, value));
}

double integrate(const FiniteMeasure& mu, const TestFunction& f) {
    if (!same_sites(mu.sites(), f.sites()) || mu.dim() != f.dim())
        throw std::invalid_argument("integrate: measure and test function live on different site sets");
    return mu.masses().dot(f.values());
}

Normalized normalize(const FiniteMeasure& mu) {
    double total = mu.total();
    if (total <= 0.0) return {total, std::nullopt};
    return {total, mu.masses() / total};
}

} // namespace mvb
