#include "mvb/mechanism.hpp"

#include <cmath>
#include <stdexcept>

namespace mvb {

BranchingMechanism::BranchingMechanism(SiteSetPtr sites, Eigen::VectorXd drift,
                                       Eigen::VectorXd diffusion,
                                       std::vector<std::vector<JumpAtom>> jump_atoms)
    : sites_(std::move(sites)),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      jump_atoms_(std::move(jump_atoms)) {
    if (!sites_) throw std::invalid_argument("BranchingMechanism: null site set");
    int d = sites_->size();
    if (drift_.size() != d || diffusion_.size() != d)
        throw std::invalid_argument("BranchingMechanism: coefficient dimension mismatch");
    if (jump_atoms_.empty()) jump_atoms_.resize(d);
    if (static_cast<int>(jump_atoms_.size()) != d)
        throw std::invalid_argument("BranchingMechanism: need one atom list per site");
    if (!drift_.allFinite() || !diffusion_.allFinite())
        throw std::invalid_argument("BranchingMechanism: coefficients must be finite");
    for (int i = 0; i < d; ++i) {
        if (diffusion_(i) < 0.0)
            throw std::invalid_argument("BranchingMechanism: diffusion coefficient c must be >= 0");
        double moment = 0.0;
        for (const auto& atom : jump_atoms_[i]) {
            if (!(atom.size > 0.0))
                throw std::invalid_argument("BranchingMechanism: jump sizes must be > 0");
            if (!(atom.weight >= 0.0))
                throw std::invalid_argument("BranchingMechanism: jump weights must be >= 0");
            moment += atom.weight * std::min(atom.size, atom.size * atom.size);
            if (atom.weight > 0.0) has_jumps_ = true;
        }
        if (!std::isfinite(moment))
            throw std::invalid_argument("BranchingMechanism: jump moment not finite");
        if (phi_raw(i, 0.0) != 0.0)
            throw std::logic_error("BranchingMechanism: phi(x,0) != 0");
    }
}

BranchingMechanism BranchingMechanism::linear(SiteSetPtr sites, Eigen::VectorXd drift) {
    int d = sites->size();
    return BranchingMechanism(std::move(sites), std::move(drift), Eigen::VectorXd::Zero(d), {});
}

double BranchingMechanism::phi_raw(int site, double z) const {
    double v = drift_(site) * z + diffusion_(site) * z * z;
    for (const auto& atom : jump_atoms_[site])
        v += atom.weight * (std::expm1(-z * atom.size) + z * atom.size);
    return v;
}

double BranchingMechanism::phi(int site, double z) const {
    if (site < 0 || site >= dim())
        throw std::invalid_argument("phi: site index out of range");
    if (z < 0.0) throw std::invalid_argument("phi: z must be >= 0");
    return phi_raw(site, z);
}

void BranchingMechanism::phi_inplace(const Eigen::VectorXd& z, Eigen::VectorXd& out) const {
    int d = dim();
    out.resize(d);
    for (int i = 0; i < d; ++i) out(i) = phi_raw(i, z(i));
}

} // namespace mvb
