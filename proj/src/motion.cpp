#include "mvb/motion.hpp"

#include <mutex>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

namespace mvb {

namespace {
constexpr double kRowSumTol = 1e-12;
}

KillingRate::KillingRate(SiteSetPtr sites, Eigen::VectorXd rates)
    : sites_(std::move(sites)), rates_(std::move(rates)) {
    if (!sites_ || rates_.size() != sites_->size())
        throw std::invalid_argument("KillingRate: dimension mismatch");
    if (!rates_.allFinite())
        throw std::invalid_argument("KillingRate: rates must be finite");
}

KillingRate KillingRate::zero(SiteSetPtr sites) {
    int d = sites->size();
    return KillingRate(std::move(sites), Eigen::VectorXd::Zero(d));
}

MotionModel::MotionModel(SiteSetPtr sites, Eigen::MatrixXd generator)
    : sites_(std::move(sites)), generator_(std::move(generator)), cache_(std::make_shared<Cache>()) {
    if (!sites_) throw std::invalid_argument("MotionModel: null site set");
    int d = sites_->size();
    if (generator_.rows() != d || generator_.cols() != d)
        throw std::invalid_argument("MotionModel: generator must be " + std::to_string(d) + "x" +
                                    std::to_string(d));
    if (!generator_.allFinite())
        throw std::invalid_argument("MotionModel: generator has non-finite entries");
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (i != j && generator_(i, j) < 0.0)
                throw std::invalid_argument("MotionModel: negative off-diagonal rate at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
        }
        double row = generator_.row(i).sum();
        if (std::abs(row) > kRowSumTol)
            throw std::invalid_argument("MotionModel: row " + std::to_string(i) +
                                        " sums to " + std::to_string(row) + ", expected 0");
    }
}

Eigen::MatrixXd MotionModel::transition(double t) const {
    if (t < 0.0) throw std::invalid_argument("transition: t must be >= 0");
    {
        std::shared_lock lock(cache_->mutex);
        auto it = cache_->entries.find(t);
        if (it != cache_->entries.end()) return it->second;
    }
    Eigen::MatrixXd p = (t * generator_).exp();
    p = p.cwiseMax(0.0).cwiseMin(1.0);
    {
        std::unique_lock lock(cache_->mutex);
        cache_->entries.emplace(t, p);
    }
    return p;
}

Eigen::MatrixXd MotionModel::killed_transition(const KillingRate& b, double t) const {
    if (t < 0.0) throw std::invalid_argument("killed_transition: t must be >= 0");
    if (b.rates().size() != dim())
        throw std::invalid_argument("killed_transition: killing rate dimension mismatch");
    if (b.rates().isZero(0.0)) return transition(t);
    Eigen::MatrixXd gen = generator_;
    gen.diagonal() -= b.rates();
    Eigen::MatrixXd p = (t * gen).exp();
    return p.cwiseMax(0.0);
}

Eigen::MatrixXd MotionModel::h_transform(const KillingRate& b, const TestFunction& h, double t) const {
    if (h.dim() != dim())
        throw std::invalid_argument("h_transform: weight dimension mismatch");
    for (int i = 0; i < h.dim(); ++i)
        if (!(h[i] > 0.0))
            throw std::invalid_argument("h_transform: weight must be strictly positive");
    Eigen::MatrixXd pb = killed_transition(b, t);
    return h.values().cwiseInverse().asDiagonal() * pb * h.values().asDiagonal();
}

TestFunction integrated_unit_weight(const MotionModel& model, const KillingRate& b) {
    // composite Simpson, 65 nodes on [0,1]
    const int nodes = 65;
    const double step = 1.0 / (nodes - 1);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(model.dim());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(model.dim());
    for (int k = 0; k < nodes; ++k) {
        double w = (k == 0 || k == nodes - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        acc += w * (model.killed_transition(b, k * step) * ones);
    }
    acc *= step / 3.0;
    return TestFunction(model.sites(), acc);
}

} // namespace mvb
