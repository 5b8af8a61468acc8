#include "dirac_thermo/kkt.hpp"

#include <cmath>
#include <sstream>

namespace dirac_thermo {

double entropy_rate(const ThermoModel& model, const Vector& q, const Vector& v, double S) {
    model.temperature(q, v, S);  // domain guard
    return model.friction_force(q, v, S).dot(v) / model.dL_dS(q, v, S);
}

Vector convective_momentum_rate(const ThermoModel& model, const Vector& q, const Vector& v,
                                double S, double Sdot, const SolverOptions& opts) {
    Vector conv = Vector::Zero(model.n);
    const double vnorm = v.norm();
    if (vnorm > 0.0) {
        const double h = opts.fd_step * (1.0 + q.norm()) / vnorm;
        conv += (model.dL_dv(q + h * v, v, S) - model.dL_dv(q - h * v, v, S)) / (2.0 * h);
    }
    if (Sdot != 0.0) {
        const double hS = opts.fd_step * (1.0 + std::abs(S));
        conv += Sdot * (model.dL_dv(q, v, S + hS) - model.dL_dv(q, v, S - hS)) / (2.0 * hS);
    }
    return conv;
}

namespace {

/// f = dL/dq + F^fr + F^ext - convective_momentum_rate (the vdot-free part
/// of d/dt[dL/dv] moved to the right-hand side).
Vector generalized_force(const ThermoModel& model, double t, const Vector& q, const Vector& v,
                         double S, const SolverOptions& opts) {
    return model.dL_dq(q, v, S) + model.friction_force(q, v, S) +
           model.external_force(t, q, v, S) -
           convective_momentum_rate(model, q, v, S, entropy_rate(model, q, v, S), opts);
}

}  // namespace

KKTSystem assemble_kkt(const ThermoModel& model, double t, const Vector& q, const Vector& v,
                       double S, const SolverOptions& opts) {
    const Eigen::Index n = model.n;
    const Eigen::Index m = model.m;
    KKTSystem sys;
    sys.mass = model.d2L_dv2(q, v, S);
    sys.mass = 0.5 * (sys.mass + sys.mass.transpose()).eval();
    sys.omega = model.constraints_checked(q);
    sys.force = generalized_force(model, t, q, v, S, opts);

    sys.matrix = Matrix::Zero(n + m, n + m);
    sys.matrix.topLeftCorner(n, n) = sys.mass;
    sys.matrix.topRightCorner(n, m) = -sys.omega.transpose();
    sys.matrix.bottomLeftCorner(m, n) = sys.omega;

    sys.rhs = Vector::Zero(n + m);
    sys.rhs.head(n) = sys.force;
    if (m > 0) {
        sys.rhs.tail(m) = -model.constraint_rate(q, v, opts.fd_step) * v;
    }
    return sys;
}

KernelAnalysis mass_kernel(const ThermoModel& model, const Vector& q, const Vector& v, double S,
                           const SolverOptions& opts) {
    const Eigen::Index n = model.n;
    Matrix M = model.d2L_dv2(q, v, S);
    M = 0.5 * (M + M.transpose()).eval();

    KernelAnalysis out;
    if (model.m == 0) {
        out.null_omega = Matrix::Identity(n, n);
    } else {
        out.null_omega = null_space(model.constraints_checked(q));
    }
    const Matrix projected =
        0.5 * (out.null_omega.transpose() * M * out.null_omega +
               (out.null_omega.transpose() * M * out.null_omega).transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(projected);
    if (es.info() != Eigen::Success) {
        throw KKTSingularError("eigendecomposition of the projected velocity Hessian failed");
    }
    const Vector eigs = es.eigenvalues();
    const double scale = std::max(1.0, eigs.cwiseAbs().maxCoeff());
    const double tol = opts.kkt_singular_tol * scale;
    if (eigs.size() > 0 && eigs(0) < -tol) {
        std::ostringstream msg;
        msg << "velocity Hessian is indefinite on the constraint distribution (eigenvalue "
            << eigs(0) << ")";
        throw KKTSingularError(msg.str());
    }

    std::vector<Eigen::Index> kernel_cols, regular_cols;
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        (std::abs(eigs(i)) <= tol ? kernel_cols : regular_cols).push_back(i);
    }
    out.kernel = Matrix(n, static_cast<Eigen::Index>(kernel_cols.size()));
    for (std::size_t j = 0; j < kernel_cols.size(); ++j) {
        out.kernel.col(static_cast<Eigen::Index>(j)) =
            out.null_omega * es.eigenvectors().col(kernel_cols[j]);
    }
    out.regular_eigs = Vector(static_cast<Eigen::Index>(regular_cols.size()));
    // regular directions in ambient coordinates, stored column-aligned with
    // regular_eigs
    out.regular_ambient = Matrix(n, out.regular_eigs.size());
    for (std::size_t j = 0; j < regular_cols.size(); ++j) {
        out.regular_eigs(static_cast<Eigen::Index>(j)) = eigs(regular_cols[j]);
        out.regular_ambient.col(static_cast<Eigen::Index>(j)) =
            out.null_omega * es.eigenvectors().col(regular_cols[j]);
    }
    return out;
}

KKTSolution solve_kkt(const ThermoModel& model, double t, const Vector& q, const Vector& v,
                      double S, const SolverOptions& opts) {
    const Eigen::Index n = model.n;
    const Eigen::Index m = model.m;
    const KKTSystem sys = assemble_kkt(model, t, q, v, S, opts);
    const KernelAnalysis kernel = mass_kernel(model, q, v, S, opts);

    KKTSolution sol;
    if (kernel.kernel.cols() == 0) {
        Eigen::JacobiSVD<Matrix> svd(sys.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double smax = svd.singularValues()(0);
        const double smin = svd.singularValues()(svd.singularValues().size() - 1);
        sol.condition_estimate = (smin > 0.0) ? smax / smin
                                              : std::numeric_limits<double>::infinity();
        if (!(sol.condition_estimate < opts.kkt_condition_max)) {
            std::ostringstream msg;
            msg << "saddle system condition estimate " << sol.condition_estimate
                << " exceeds limit " << opts.kkt_condition_max;
            throw KKTSingularError(msg.str());
        }
        const Vector x = svd.solve(sys.rhs);
        sol.vdot = x.head(n);
        sol.mu = x.tail(m);
        return sol;
    }

    // Positive semidefinite projected Hessian: close the system as an
    // index-1 problem. Accelerations along the kernel are set to zero; the
    // force balance on the kernel is maintained separately by
    // restore_kernel_velocities.
    sol.degenerate = true;

    Vector vdot_particular = Vector::Zero(n);
    Eigen::LDLT<Matrix> gram;
    if (m > 0) {
        gram.compute(sys.omega * sys.omega.transpose());
        vdot_particular = sys.omega.transpose() * gram.solve(sys.rhs.tail(m));
    }
    const Vector reduced_force = sys.force - sys.mass * vdot_particular;

    sol.kernel_residual =
        (kernel.kernel.transpose() * reduced_force).lpNorm<Eigen::Infinity>();

    sol.vdot = vdot_particular;
    if (kernel.regular_eigs.size() > 0) {
        const Vector coeffs = kernel.regular_ambient.transpose() * reduced_force;
        sol.vdot += kernel.regular_ambient * coeffs.cwiseQuotient(kernel.regular_eigs);
        sol.condition_estimate =
            kernel.regular_eigs.maxCoeff() / kernel.regular_eigs.minCoeff();
        if (!(sol.condition_estimate < opts.kkt_condition_max)) {
            std::ostringstream msg;
            msg << "projected Hessian condition estimate " << sol.condition_estimate
                << " exceeds limit " << opts.kkt_condition_max;
            throw KKTSingularError(msg.str());
        }
    } else {
        sol.condition_estimate = 1.0;
    }

    if (m > 0) {
        sol.mu = gram.solve(sys.omega * (sys.mass * sol.vdot - sys.force));
    } else {
        sol.mu = Vector::Zero(0);
    }
    return sol;
}

Vector restore_kernel_velocities(const ThermoModel& model, double t, const Vector& q,
                                 const Vector& v, double S, const SolverOptions& opts) {
    const KernelAnalysis kernel = mass_kernel(model, q, v, S, opts);
    const Eigen::Index k = kernel.kernel.cols();
    if (k == 0) {
        return v;
    }
    const Matrix& Y = kernel.kernel;
    const Vector v_base = v - Y * (Y.transpose() * v);
    Vector z = Y.transpose() * v;

    const auto balance = [&](const Vector& zz) -> Vector {
        return Y.transpose() * generalized_force(model, t, q, v_base + Y * zz, S, opts);
    };

    for (int it = 0;; ++it) {
        const Vector current = v_base + Y * z;
        const Vector f = generalized_force(model, t, q, current, S, opts);
        const Vector g = Y.transpose() * f;
        const double tol = opts.restore_tol * (1.0 + f.lpNorm<Eigen::Infinity>());
        if (g.lpNorm<Eigen::Infinity>() <= tol) {
            return current;
        }
        if (it >= opts.restore_max_iter) {
            throw KKTSingularError(
                "kernel velocity restoration did not converge; the force balance on the "
                "degenerate directions has no nearby root");
        }
        Matrix jac(k, k);
        for (Eigen::Index j = 0; j < k; ++j) {
            const double h = opts.fd_step * (1.0 + std::abs(z(j)));
            Vector zp = z, zm = z;
            zp(j) += h;
            zm(j) -= h;
            jac.col(j) = (balance(zp) - balance(zm)) / (2.0 * h);
        }
        Eigen::FullPivLU<Matrix> lu(jac);
        if (!lu.isInvertible()) {
            throw KKTSingularError(
                "kernel velocity restoration Jacobian is singular; the force balance on the "
                "degenerate directions cannot be solved");
        }
        z -= lu.solve(g);
    }
}

Vector project_velocity(const ThermoModel& model, const Vector& q, const Vector& v) {
    if (model.m == 0) {
        return v;
    }
    const Matrix omega = model.constraints_checked(q);
    const Eigen::LDLT<Matrix> gram((omega * omega.transpose()).eval());
    return v - omega.transpose() * gram.solve(omega * v);
}

}  // namespace dirac_thermo
