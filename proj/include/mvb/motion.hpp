#ifndef MVB_MOTION_HPP
#define MVB_MOTION_HPP

#include "mvb/measure.hpp"

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <shared_mutex>

namespace mvb {

/// Per-site killing (or creation, when negative) rates.
class KillingRate {
public:
    KillingRate(SiteSetPtr sites, Eigen::VectorXd rates);

    const Eigen::VectorXd& rates() const { return rates_; }
    const SiteSetPtr& sites() const { return sites_; }
    double sup_norm() const { return rates_.cwiseAbs().maxCoeff(); }

    static KillingRate zero(SiteSetPtr sites);

private:
    SiteSetPtr sites_;
    Eigen::VectorXd rates_;
};

/// Conservative continuous-time Markov chain on a finite site set, given by
/// its rate matrix Q (off-diagonal >= 0, rows summing to zero). Supplies the
/// transition semigroup e^{tQ}, its killed version e^{t(Q - diag(b))} and the
/// h-transform diag(h)^{-1} e^{t(Q - diag(b))} diag(h).
class MotionModel {
public:
    MotionModel(SiteSetPtr sites, Eigen::MatrixXd generator);

    const SiteSetPtr& sites() const { return sites_; }
    const Eigen::MatrixXd& generator() const { return generator_; }
    int dim() const { return static_cast<int>(generator_.rows()); }

    /// e^{tQ}; entries clamped to [0,1]. Throws for t < 0.
    Eigen::MatrixXd transition(double t) const;

    /// e^{t(Q - diag(b))}; negative roundoff clamped to 0. Throws for t < 0.
    Eigen::MatrixXd killed_transition(const KillingRate& b, double t) const;

    /// T_t f = h^{-1} P^b_t (h f). Requires h strictly positive.
    Eigen::MatrixXd h_transform(const KillingRate& b, const TestFunction& h, double t) const;

private:
    SiteSetPtr sites_;
    Eigen::MatrixXd generator_;

    // memo of t -> e^{tQ}; concurrent reads, exclusive insertion. Shared
    // across copies of the model (the generator is immutable).
    struct Cache {
        std::shared_mutex mutex;
        std::map<double, Eigen::MatrixXd> entries;
    };
    std::shared_ptr<Cache> cache_;
};

/// The weight h(x) = int_0^1 P_s 1(x) ds by composite Simpson on 65 nodes.
/// Identically 1 on a conservative chain; nontrivial once killing is folded in.
TestFunction integrated_unit_weight(const MotionModel& model, const KillingRate& b);

} // namespace mvb

#endif
