#pragma once

#include <Eigen/Dense>

#include "dirac_thermo/subspace.hpp"

namespace dirac_thermo {

/// Pairing value <<(v,a),(w,b)>> = <a,w> + <b,v> on V + V* = R^{2N}.
/// Elements are stored base-first: the first N entries are the vector part,
/// the last N the covector part. Throws std::invalid_argument for odd or
/// mismatched dimensions.
double symmetric_pairing(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// The matrix J with <<x,y>> = x^T J y, i.e. [[0, I],[I, 0]] of size 2N.
Eigen::MatrixXd pairing_matrix(Eigen::Index base_dim);

/// An antisymmetric bilinear form on R^N. Construction enforces antisymmetry
/// to 1e-12 relative.
class PresymplecticForm {
public:
    explicit PresymplecticForm(const Eigen::MatrixXd& matrix);

    /// Canonical symplectic form [[0, I],[-I, 0]] on R^dim; dim must be even.
    static PresymplecticForm canonical(Eigen::Index dim);

    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
    Eigen::Index dim() const noexcept { return matrix_.rows(); }

    /// Covector Omega(v, .) of the flat map, as a coordinate vector:
    /// flat(v)^T w = v^T Omega w for all w.
    Eigen::VectorXd flat(const Eigen::VectorXd& v) const;

private:
    Eigen::MatrixXd matrix_;
};

/// Candidate linear Dirac structure D in V + V*, V = R^{base_dim}.
///
/// `elements` live in R^{2 base_dim}, vector part first. `certified` records
/// that a certification at the stored tolerance succeeded; operations that
/// rely on D actually being Dirac (membership_residual) reject uncertified
/// descriptors.
struct LinearDiracDescriptor {
    Eigen::Index base_dim = 0;
    Subspace elements;
    bool certified = false;
};

/// Result of checking the two defining properties of a Dirac structure:
/// dim D = N and D isotropic under the symmetric pairing (D = D^perp then
/// follows by dimension counting).
struct DiracCertification {
    bool is_dirac = false;
    bool dim_ok = false;
    /// Largest |<<d_i, d_j>>| over the orthonormal basis pairs.
    double max_pairing = 0.0;
};

/// Orthogonal complement of d.elements with respect to the symmetric pairing:
/// D^perp = { x : <<x, y>> = 0 for all y in D }.
Subspace orthogonal_complement(const LinearDiracDescriptor& d);

/// Checks dim D == base_dim and max basis pairing <= tol; marks `d` certified
/// on success.
DiracCertification certify_dirac(LinearDiracDescriptor& d, double tol = 1e-10);

/// Same check without mutating the descriptor.
DiracCertification certify_dirac(const LinearDiracDescriptor& d, double tol = 1e-10);

/// Dirac structure induced by a distribution Delta in V and an antisymmetric
/// form Omega on V:
///   D = { (v, a) : v in Delta, a - flat(v) in Delta^annihilator }.
/// The result is certified (construction guarantees isotropy and dimension).
LinearDiracDescriptor induced_dirac(const Subspace& delta, const PresymplecticForm& omega);

/// Distance from `candidate` (in R^{2 base_dim}) to d.elements. Requires a
/// certified descriptor; throws std::invalid_argument otherwise.
double membership_residual(const LinearDiracDescriptor& d, const Eigen::VectorXd& candidate);

}  // namespace dirac_thermo
