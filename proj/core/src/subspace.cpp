#include "dirac_thermo/subspace.hpp"

#include <stdexcept>

namespace dirac_thermo {

namespace {

// Full left singular basis split at the numerical rank: first `rank` columns
// span col(A), the rest span its orthogonal complement.
struct SvdSplit {
    Eigen::MatrixXd U;
    Eigen::Index rank = 0;
};

SvdSplit left_singular_split(const Eigen::MatrixXd& A, double tol) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    if (s.size() > 0) {
        const double cutoff = tol * s(0);
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (s(i) > cutoff) ++rank;
        }
    }
    return {svd.matrixU(), rank};
}

}  // namespace

Subspace::Subspace(const Eigen::MatrixXd& span) {
    if (span.rows() == 0) {
        throw std::invalid_argument("Subspace: ambient dimension must be positive");
    }
    if (span.cols() == 0) {
        basis_ = Eigen::MatrixXd(span.rows(), 0);
        return;
    }
    const SvdSplit split = left_singular_split(span, rank_tolerance);
    if (split.rank < span.cols()) {
        throw std::invalid_argument("Subspace: spanning vectors are linearly dependent");
    }
    basis_ = split.U.leftCols(split.rank);
}

Subspace Subspace::zero(Eigen::Index ambient_dim) {
    return Subspace(Eigen::MatrixXd(ambient_dim, 0));
}

Subspace Subspace::full(Eigen::Index ambient_dim) {
    return Subspace(Eigen::MatrixXd::Identity(ambient_dim, ambient_dim));
}

Eigen::VectorXd Subspace::project(const Eigen::VectorXd& x) const {
    if (x.size() != ambient_dim()) {
        throw std::invalid_argument("Subspace::project: dimension mismatch");
    }
    return basis_ * (basis_.transpose() * x);
}

double Subspace::distance(const Eigen::VectorXd& x) const {
    return (x - project(x)).norm();
}

bool Subspace::same_span(const Subspace& other) const {
    if (ambient_dim() != other.ambient_dim()) return false;
    if (dim() != other.dim()) return false;
    // Containment check via projection residuals of the other basis.
    for (Eigen::Index j = 0; j < other.dim(); ++j) {
        if (distance(other.basis().col(j)) > 1e-9) return false;
    }
    return true;
}

Subspace annihilator(const Subspace& s) {
    if (s.dim() == 0) return Subspace::full(s.ambient_dim());
    // Basis columns are orthonormal, so the complement is the remaining
    // left singular directions.
    const SvdSplit split = left_singular_split(s.basis(), rank_tolerance);
    return Subspace(split.U.rightCols(s.ambient_dim() - split.rank));
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& A, double tol) {
    if (A.rows() == 0) {
        return Eigen::MatrixXd::Identity(A.cols(), A.cols());
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    if (s.size() > 0) {
        const double cutoff = tol * s(0);
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (s(i) > cutoff) ++rank;
        }
    }
    return svd.matrixV().rightCols(A.cols() - rank);
}

Eigen::Index numerical_rank(const Eigen::MatrixXd& A, double tol) {
    if (A.rows() == 0 || A.cols() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    const double cutoff = tol * (s.size() > 0 ? s(0) : 0.0);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff) ++rank;
    }
    return rank;
}

}  // namespace dirac_thermo
