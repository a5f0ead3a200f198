#ifndef MVB_MEASURE_HPP
#define MVB_MEASURE_HPP

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mvb {

/// Ordered finite site space. Every measure, test function and rate matrix
/// in the library lives over one of these.
class SiteSet {
public:
    explicit SiteSet(std::vector<std::string> labels);

    int size() const { return static_cast<int>(labels_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(int i) const { return labels_.at(i); }

    /// Convenience: d sites labelled "s0".."s{d-1}".
    static std::shared_ptr<const SiteSet> indexed(int d);

private:
    std::vector<std::string> labels_;
};

using SiteSetPtr = std::shared_ptr<const SiteSet>;

bool same_sites(const SiteSetPtr& a, const SiteSetPtr& b);

/// Nonnegative mass vector over a site set.
class FiniteMeasure {
public:
    FiniteMeasure(SiteSetPtr sites, Eigen::VectorXd masses);

    const SiteSetPtr& sites() const { return sites_; }
    const Eigen::VectorXd& masses() const { return masses_; }
    int dim() const { return static_cast<int>(masses_.size()); }
    double total() const { return masses_.sum(); }
    double operator[](int i) const { return masses_(i); }

    static FiniteMeasure zero(SiteSetPtr sites);

private:
    SiteSetPtr sites_;
    Eigen::VectorXd masses_;
};

/// Nonnegative bounded function on the sites (the class B(E)^+).
class TestFunction {
public:
    TestFunction(SiteSetPtr sites, Eigen::VectorXd values);

    const SiteSetPtr& sites() const { return sites_; }
    const Eigen::VectorXd& values() const { return values_; }
    int dim() const { return static_cast<int>(values_.size()); }
    double operator[](int i) const { return values_(i); }

    static TestFunction zero(SiteSetPtr sites);
    static TestFunction constant(SiteSetPtr sites, double value);

private:
    SiteSetPtr sites_;
    Eigen::VectorXd values_;
};

/// mu(f) = sum_i mu_i f_i. Throws on dimension mismatch.
double integrate(const FiniteMeasure& mu, const TestFunction& f);

struct Normalized {
    double total;
    /// Absent when the measure is null.
    std::optional<Eigen::VectorXd> probabilities;
};

/// Total mass and the normalized probability vector (absent for the null measure).
Normalized normalize(const FiniteMeasure& mu);

} // namespace mvb

#endif
