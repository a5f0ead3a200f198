#ifndef MVB_MECHANISM_HPP
#define MVB_MECHANISM_HPP

#include "mvb/measure.hpp"

#include <Eigen/Dense>
#include <vector>

namespace mvb {

/// One atom of the discretized jump kernel: weight w sitting at jump size u.
struct JumpAtom {
    double size;   // u > 0
    double weight; // w >= 0
};

/// Local branching mechanism
///   phi(x,z) = b(x) z + c(x) z^2 + sum_atoms w (e^{-z u} - 1 + z u),
/// with the jump kernel discretized to finitely many atoms per site.
class BranchingMechanism {
public:
    BranchingMechanism(SiteSetPtr sites, Eigen::VectorXd drift, Eigen::VectorXd diffusion,
                       std::vector<std::vector<JumpAtom>> jump_atoms);

    const SiteSetPtr& sites() const { return sites_; }
    int dim() const { return static_cast<int>(drift_.size()); }
    const Eigen::VectorXd& drift() const { return drift_; }
    const Eigen::VectorXd& diffusion() const { return diffusion_; }
    const std::vector<std::vector<JumpAtom>>& jump_atoms() const { return jump_atoms_; }
    bool has_jumps() const { return has_jumps_; }

    /// phi(site, z) for z >= 0; z < 0 is rejected.
    double phi(int site, double z) const;

    /// Componentwise phi applied to a value vector (no sign check; the
    /// formula extends smoothly to small negative arguments from integrator
    /// stage values).
    void phi_inplace(const Eigen::VectorXd& z, Eigen::VectorXd& out) const;

    /// Mechanism with neither diffusion nor jumps, phi(z) = b z.
    static BranchingMechanism linear(SiteSetPtr sites, Eigen::VectorXd drift);

private:
    SiteSetPtr sites_;
    Eigen::VectorXd drift_;
    Eigen::VectorXd diffusion_;
    std::vector<std::vector<JumpAtom>> jump_atoms_;
    bool has_jumps_ = false;

    double phi_raw(int site, double z) const;
};

} // namespace mvb

#endif
