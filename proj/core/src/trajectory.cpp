#include "dirac_thermo/trajectory.hpp"

#include <cstdio>
#include <ostream>

namespace dirac_thermo {

namespace {

void append_value(std::string& line, double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    line += buf;
}

}  // namespace

void Trajectory::write_csv(std::ostream& out) const {
    std::string header = "t";
    for (Eigen::Index i = 1; i <= n; ++i) header += ",q_" + std::to_string(i);
    for (Eigen::Index i = 1; i <= n; ++i) header += ",v_" + std::to_string(i);
    header += ",S";
    for (Eigen::Index i = 1; i <= n; ++i) header += ",p_" + std::to_string(i);
    for (Eigen::Index i = 1; i <= m; ++i) header += ",mu_" + std::to_string(i);
    header += ",E,Sdot,dirac_residual,power_ext";
    if (open) header += ",N,I,P_W,P_H,P_M,p_time";
    out << header << "\n";

    for (std::size_t row = 0; row < samples.size(); ++row) {
        const TrajectorySample& s = samples[row];
        std::string line;
        append_value(line, s.t);
        for (Eigen::Index i = 0; i < n; ++i) {
            line += ',';
            append_value(line, s.state.q(i));
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            line += ',';
            append_value(line, s.state.v(i));
        }
        line += ',';
        append_value(line, s.state.S);
        for (Eigen::Index i = 0; i < n; ++i) {
            line += ',';
            append_value(line, s.state.p(i));
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            line += ',';
            append_value(line, s.mu(i));
        }
        line += ',';
        append_value(line, s.energy);
        line += ',';
        append_value(line, s.entropy_rate);
        line += ',';
        append_value(line, s.dirac_residual);
        line += ',';
        append_value(line, s.power_ext);
        if (open) {
            const OpenSample& o = open_samples[row];
            line += ',';
            append_value(line, o.N);
            line += ',';
            append_value(line, o.internal_production);
            line += ',';
            append_value(line, o.P_W);
            line += ',';
            append_value(line, o.P_H);
            line += ',';
            append_value(line, o.P_M);
            line += ',';
            append_value(line, o.p_time);
        }
        out << line << "\n";
    }
}

}  // namespace dirac_thermo
