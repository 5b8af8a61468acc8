#include "dirac_thermo/thermo_model.hpp"

#include <cmath>
#include <sstream>

namespace dirac_thermo {

double ThermoModel::temperature(const Vector& q, const Vector& v, double S) const {
    const double T = -dL_dS(q, v, S);
    if (!(T > temperature_floor)) {
        std::ostringstream msg;
        msg << "temperature " << T << " at or below floor " << temperature_floor;
        throw ModelDomainError(msg.str());
    }
    return T;
}

Matrix ThermoModel::constraints_checked(const Vector& q) const {
    if (m == 0) {
        return Matrix::Zero(0, n);
    }
    if (!constraint_forms) {
        throw ModelValidationError("model declares m > 0 but has no constraint_forms evaluator");
    }
    Matrix omega = constraint_forms(q);
    if (omega.rows() != m || omega.cols() != n) {
        throw ModelValidationError("constraint_forms returned a matrix of wrong shape");
    }
    if (numerical_rank(omega) != m) {
        std::ostringstream msg;
        msg << "constraint forms lose rank at q = [" << q.transpose() << "]";
        throw ConstraintRankError(msg.str());
    }
    return omega;
}

Matrix ThermoModel::constraint_rate(const Vector& q, const Vector& v, double fd_step) const {
    if (m == 0) {
        return Matrix::Zero(0, n);
    }
    if (constraint_forms_dot) {
        return constraint_forms_dot(q, v);
    }
    const double vnorm = v.norm();
    if (vnorm == 0.0) {
        return Matrix::Zero(m, n);
    }
    const double h = fd_step * (1.0 + q.norm()) / vnorm;
    return (constraint_forms(q + h * v) - constraint_forms(q - h * v)) / (2.0 * h);
}

VariationalConstraintMatrix variational_constraint(const ThermoModel& model, const Vector& q,
                                                   const Vector& v, double S) {
    model.temperature(q, v, S);  // domain guard
    const Matrix omega = model.constraints_checked(q);
    VariationalConstraintMatrix vc;
    vc.rows = Matrix::Zero(model.m + 1, model.n + 1);
    vc.rows.topLeftCorner(model.m, model.n) = omega;
    vc.rows.bottomLeftCorner(1, model.n) = -model.friction_force(q, v, S).transpose();
    vc.rows(model.m, model.n) = model.dL_dS(q, v, S);
    return vc;
}

Subspace variational_constraint_space(const ThermoModel& model, const Vector& q, const Vector& v,
                                      double S) {
    const VariationalConstraintMatrix vc = variational_constraint(model, q, v, S);
    return Subspace(null_space(vc.rows));
}

Subspace annihilator_of_CV(const ThermoModel& model, const Vector& q, const Vector& v, double S) {
    return annihilator(variational_constraint_space(model, q, v, S));
}

Vector kinematic_residual(const ThermoModel& model, const Vector& q, const Vector& v, double S,
                          double Sdot) {
    const Matrix omega = model.constraints_checked(q);
    Vector r(model.m + 1);
    r.head(model.m) = omega * v;
    r(model.m) = model.dL_dS(q, v, S) * Sdot - model.friction_force(q, v, S).dot(v);
    return r;
}

Vector partial_legendre(const ThermoModel& model, const Vector& q, const Vector& v, double S) {
    return model.dL_dv(q, v, S);
}

Vector inverse_legendre(const ThermoModel& model, const Vector& q, const Vector& p, double S,
                        const Vector& guess, int max_iter) {
    Vector v = guess;
    const double tol = 1e-10 * (1.0 + p.lpNorm<Eigen::Infinity>());
    for (int it = 0; it < max_iter; ++it) {
        const Vector r = model.dL_dv(q, v, S) - p;
        if (r.lpNorm<Eigen::Infinity>() <= tol) {
            return v;
        }
        const Matrix hess = model.d2L_dv2(q, v, S);
        Eigen::FullPivLU<Matrix> lu(hess);
        if (!lu.isInvertible()) {
            throw LegendreInversionError("velocity Hessian is singular during fiber inversion");
        }
        v -= lu.solve(r);
    }
    throw LegendreInversionError("fiber Legendre inversion did not converge");
}

Vector inverse_legendre(const ThermoModel& model, const Vector& q, const Vector& p, double S) {
    return inverse_legendre(model, q, p, S, Vector::Zero(model.n));
}

double GradientCheckReport::worst() const {
    return std::max(std::max(dq_error, dv_error), std::max(dS_error, hessian_error));
}

namespace {

double block_error(const Vector& analytic, const Vector& fd) {
    const double scale = std::max(1.0, fd.lpNorm<Eigen::Infinity>());
    return (analytic - fd).lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace

GradientCheckReport gradient_check(const ThermoModel& model, const Vector& q, const Vector& v,
                                   double S, double h) {
    const Eigen::Index n = model.n;
    GradientCheckReport report;

    Vector fd_dq(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector qp = q, qm = q;
        qp(i) += h;
        qm(i) -= h;
        fd_dq(i) = (model.lagrangian(qp, v, S) - model.lagrangian(qm, v, S)) / (2.0 * h);
    }
    report.dq_error = block_error(model.dL_dq(q, v, S), fd_dq);

    Vector fd_dv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector vp = v, vm = v;
        vp(i) += h;
        vm(i) -= h;
        fd_dv(i) = (model.lagrangian(q, vp, S) - model.lagrangian(q, vm, S)) / (2.0 * h);
    }
    report.dv_error = block_error(model.dL_dv(q, v, S), fd_dv);

    const double fd_dS = (model.lagrangian(q, v, S + h) - model.lagrangian(q, v, S - h)) / (2.0 * h);
    report.dS_error =
        std::abs(model.dL_dS(q, v, S) - fd_dS) / std::max(1.0, std::abs(fd_dS));

    Matrix fd_hess(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Vector vp = v, vm = v;
        vp(j) += h;
        vm(j) -= h;
        fd_hess.col(j) = (model.dL_dv(q, vp, S) - model.dL_dv(q, vm, S)) / (2.0 * h);
    }
    const Matrix analytic_hess = model.d2L_dv2(q, v, S);
    const double hscale =
        std::max(1.0, fd_hess.cwiseAbs().maxCoeff());
    report.hessian_error = (analytic_hess - fd_hess).cwiseAbs().maxCoeff() / hscale;

    return report;
}

void validate_model(const ThermoModel& model,
                    const std::vector<std::tuple<Vector, Vector, double>>& states,
                    double h, double threshold) {
    if (model.n <= 0) {
        throw ModelValidationError("model must have at least one mechanical degree of freedom");
    }
    if (model.m < 0 || model.m >= model.n) {
        throw ModelValidationError("constraint count must satisfy 0 <= m < n");
    }
    if (!model.lagrangian || !model.dL_dq || !model.dL_dv || !model.dL_dS || !model.d2L_dv2 ||
        !model.friction_force || !model.external_force) {
        throw ModelValidationError("model is missing a required evaluator");
    }
    for (const auto& [q, v, S] : states) {
        if (q.size() != model.n || v.size() != model.n) {
            throw ModelValidationError("validation state has wrong dimension");
        }
        if (model.dL_dq(q, v, S).size() != model.n ||
            model.dL_dv(q, v, S).size() != model.n ||
            model.friction_force(q, v, S).size() != model.n ||
            model.external_force(0.0, q, v, S).size() != model.n) {
            throw ModelValidationError("an evaluator returned a vector of wrong dimension");
        }
        const Matrix hess = model.d2L_dv2(q, v, S);
        if (hess.rows() != model.n || hess.cols() != model.n) {
            throw ModelValidationError("velocity Hessian has wrong shape");
        }
        model.constraints_checked(q);
        const GradientCheckReport report = gradient_check(model, q, v, S, h);
        if (!(report.worst() <= threshold)) {
            std::ostringstream msg;
            msg << "analytic derivatives disagree with finite differences: worst relative error "
                << report.worst() << " exceeds " << threshold << " (dq " << report.dq_error
                << ", dv " << report.dv_error << ", dS " << report.dS_error << ", d2v "
                << report.hessian_error << ")";
            throw ModelValidationError(msg.str());
        }
    }
}

}  // namespace dirac_thermo
