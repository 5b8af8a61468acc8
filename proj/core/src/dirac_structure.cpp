#include "dirac_thermo/dirac_structure.hpp"

#include <cmath>
#include <stdexcept>

namespace dirac_thermo {

double symmetric_pairing(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("symmetric_pairing: dimension mismatch");
    }
    if (x.size() % 2 != 0 || x.size() == 0) {
        throw std::invalid_argument("symmetric_pairing: ambient dimension must be even");
    }
    const Eigen::Index n = x.size() / 2;
    return x.tail(n).dot(y.head(n)) + y.tail(n).dot(x.head(n));
}

Eigen::MatrixXd pairing_matrix(Eigen::Index base_dim) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * base_dim, 2 * base_dim);
    J.topRightCorner(base_dim, base_dim).setIdentity();
    J.bottomLeftCorner(base_dim, base_dim).setIdentity();
    return J;
}

PresymplecticForm::PresymplecticForm(const Eigen::MatrixXd& matrix) : matrix_(matrix) {
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
        throw std::invalid_argument("PresymplecticForm: matrix must be square and nonempty");
    }
    const double scale = std::max(1.0, matrix.norm());
    if ((matrix + matrix.transpose()).norm() > 1e-12 * scale) {
        throw std::invalid_argument("PresymplecticForm: matrix is not antisymmetric");
    }
}

PresymplecticForm PresymplecticForm::canonical(Eigen::Index dim) {
    if (dim % 2 != 0 || dim <= 0) {
        throw std::invalid_argument("PresymplecticForm::canonical: dimension must be positive even");
    }
    const Eigen::Index h = dim / 2;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    m.topRightCorner(h, h).setIdentity();
    m.bottomLeftCorner(h, h) = -Eigen::MatrixXd::Identity(h, h);
    return PresymplecticForm(m);
}

Eigen::VectorXd PresymplecticForm::flat(const Eigen::VectorXd& v) const {
    if (v.size() != dim()) {
        throw std::invalid_argument("PresymplecticForm::flat: dimension mismatch");
    }
    return matrix_.transpose() * v;
}

Subspace orthogonal_complement(const LinearDiracDescriptor& d) {
    if (d.elements.ambient_dim() != 2 * d.base_dim) {
        throw std::invalid_argument("orthogonal_complement: descriptor ambient dim != 2 * base_dim");
    }
    if (d.elements.dim() == 0) return Subspace::full(2 * d.base_dim);
    // <<x, y>> = x^T J y, so D^perp is the standard orthogonal complement of J D.
    return annihilator(Subspace(pairing_matrix(d.base_dim) * d.elements.basis()));
}

namespace {

DiracCertification certification_of(const LinearDiracDescriptor& d, double tol) {
    DiracCertification cert;
    cert.dim_ok = (d.elements.dim() == d.base_dim);
    const Eigen::MatrixXd& B = d.elements.basis();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < B.cols(); ++i) {
        for (Eigen::Index j = i; j < B.cols(); ++j) {
            worst = std::max(worst, std::abs(symmetric_pairing(B.col(i), B.col(j))));
        }
    }
    cert.max_pairing = worst;
    cert.is_dirac = cert.dim_ok && worst <= tol;
    return cert;
}

}  // namespace

DiracCertification certify_dirac(LinearDiracDescriptor& d, double tol) {
    const DiracCertification cert = certification_of(d, tol);
    if (cert.is_dirac) d.certified = true;
    return cert;
}

DiracCertification certify_dirac(const LinearDiracDescriptor& d, double tol) {
    return certification_of(d, tol);
}

LinearDiracDescriptor induced_dirac(const Subspace& delta, const PresymplecticForm& omega) {
    const Eigen::Index N = delta.ambient_dim();
    if (omega.dim() != N) {
        throw std::invalid_argument("induced_dirac: form and distribution dimensions differ");
    }
    const Subspace delta_ann = annihilator(delta);
    Eigen::MatrixXd span(2 * N, delta.dim() + delta_ann.dim());
    for (Eigen::Index j = 0; j < delta.dim(); ++j) {
        span.col(j).head(N) = delta.basis().col(j);
        span.col(j).tail(N) = omega.flat(delta.basis().col(j));
    }
    for (Eigen::Index j = 0; j < delta_ann.dim(); ++j) {
        span.col(delta.dim() + j).head(N).setZero();
        span.col(delta.dim() + j).tail(N) = delta_ann.basis().col(j);
    }
    LinearDiracDescriptor d{N, Subspace(span), false};
    certify_dirac(d, 1e-10);
    return d;
}

double membership_residual(const LinearDiracDescriptor& d, const Eigen::VectorXd& candidate) {
    if (!d.certified) {
        throw std::invalid_argument("membership_residual: descriptor has not been certified");
    }
    if (candidate.size() != 2 * d.base_dim) {
        throw std::invalid_argument("membership_residual: candidate has wrong dimension");
    }
    return d.elements.distance(candidate);
}

}  // namespace dirac_thermo
