#pragma once

#include <Eigen/Dense>

namespace dirac_thermo {

/// Relative singular-value threshold used for every rank decision in the
/// subspace algebra: singular values at or below `rank_tolerance * s_max`
/// are treated as zero.
inline constexpr double rank_tolerance = 1e-10;

/// A linear subspace of R^d held as an orthonormal column basis.
///
/// Construction orthonormalizes the supplied spanning vectors through an SVD
/// and rejects rank-deficient input, so downstream operations can assume the
/// basis is orthonormal: projections are plain matrix products and membership
/// residuals need no normal-equation solves.
class Subspace {
public:
    /// Spans the columns of `span`. Throws std::invalid_argument if the
    /// columns are linearly dependent (rank below the column count).
    explicit Subspace(const Eigen::MatrixXd& span);

    /// The zero subspace {0} of R^d.
    static Subspace zero(Eigen::Index ambient_dim);

    /// All of R^d.
    static Subspace full(Eigen::Index ambient_dim);

    Eigen::Index ambient_dim() const noexcept { return basis_.rows(); }
    Eigen::Index dim() const noexcept { return basis_.cols(); }

    /// Orthonormal basis, one column per dimension (d x dim).
    const Eigen::MatrixXd& basis() const noexcept { return basis_; }

    /// Orthogonal projection of `x` onto the subspace.
    Eigen::VectorXd project(const Eigen::VectorXd& x) const;

    /// Euclidean distance from `x` to the subspace.
    double distance(const Eigen::VectorXd& x) const;

    /// True if the two subspaces are equal as sets (same ambient space and
    /// mutual containment up to the rank tolerance).
    bool same_span(const Subspace& other) const;

private:
    Subspace() = default;

    Eigen::MatrixXd basis_;
};

/// Subspace of all vectors orthogonal to `s` in the standard inner product.
/// Identifying (R^d)* with R^d, this is also the annihilator
/// { a : <a, v> = 0 for all v in s }.
Subspace annihilator(const Subspace& s);

/// Orthonormal basis of the null space of `A` (columns span {x : A x = 0}).
/// An empty-row matrix yields the identity basis.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& A, double tol = rank_tolerance);

/// Numerical rank of `A` under the relative singular-value threshold.
Eigen::Index numerical_rank(const Eigen::MatrixXd& A, double tol = rank_tolerance);

}  // namespace dirac_thermo
