#include "ndsid/stage2.hpp"

#include <cmath>
#include <limits>

#include "ndsid/errors.hpp"
#include "ndsid/simulate.hpp"

namespace ndsid {

namespace {

Matrix hstack_products(const Matrix& left, const std::vector<Matrix>& basis, Index rows, Index cols) {
    Matrix out(rows, cols * static_cast<Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i)
        out.middleCols(static_cast<Index>(i) * cols, cols) = left * basis[i];
    return out;
}

}  // namespace

ProjectionSet build_projections(const NdsModel& nds, double rank_tol) {
    if (nds.topology.num_params() < 1)
        throw InputError("build_projections: the topology has no unknown parameters");
    const auto& basis = nds.topology.basis;
    ProjectionSet p;
    p.M = hstack_products(nds.Bxv, basis, nds.mx(), nds.mz());
    p.N = hstack_products(nds.Dzv, basis, nds.mz(), nds.mz());
    p.Q = hstack_products(nds.Dyv, basis, nds.my(), nds.mz());
    const auto m = left_null_space(p.M, rank_tol);
    const auto n = left_null_space(p.N, rank_tol);
    const auto q = left_null_space(p.Q, rank_tol);
    p.U_M2 = m.basis;
    p.U_N2 = n.basis;
    p.U_Q2 = q.basis;
    p.r_M = m.rank;
    p.r_N = n.rank;
    p.r_Q = q.rank;
    p.tol_M = m.tolerance;
    p.tol_N = n.tolerance;
    p.tol_Q = q.tolerance;
    return p;
}

Matrix yss_from_eta(const InterpolationVector& eta, const GeneratorSpectrum& spectrum,
                    double* imag_residue) {
    if (eta.m_r != spectrum.m_r() || eta.m_c != spectrum.m_c() || eta.size() != eta.modes() * eta.my)
        throw DimensionError("yss_from_eta: interpolation vector does not match the spectrum");
    const Index n = spectrum.order();
    CMatrix RC(eta.my, n);
    for (Index i = 0; i < eta.m_r; ++i) RC.col(i) = eta.real_mode(i).cast<Complex>();
    for (Index i = 0; i < eta.m_c; ++i) {
        const CVector c = eta.complex_mode(i);
        RC.col(eta.m_r + 2 * i) = c;
        RC.col(eta.m_r + 2 * i + 1) = c.conjugate();
    }
    const CMatrix Y = RC * spectrum.T_inv;
    if (imag_residue) *imag_residue = Y.size() ? Y.imag().cwiseAbs().maxCoeff() : 0.0;
    return Y.real();
}

LinearSystem build_x_system(const NdsModel& nds, const InputGenerator& gen,
                            const ProjectionSet& proj, const Matrix& yss_hat,
                            const GroupScales& scales) {
    gen.validate();
    const Index q = gen.order();
    const Index mx = nds.mx(), mz = nds.mz(), my = nds.my();
    if (yss_hat.rows() != my || yss_hat.cols() != q)
        throw DimensionError("build_x_system: Yss_hat must be m_y x m_xi");
    const Matrix Iq = Matrix::Identity(q, q);
    const Matrix& phi0 = nds.topology.phi0;
    const Matrix UM = proj.U_M2.transpose();
    const Matrix UN = proj.U_N2.transpose();
    const Matrix UQ = proj.U_Q2.transpose();

    const Index r1 = q * UM.rows(), r2 = q * UN.rows(), r3 = q * UQ.rows();
    LinearSystem sys;
    sys.A = Matrix::Zero(r1 + r2 + r3, q * (mx + mz));
    sys.b = Vector::Zero(r1 + r2 + r3);

    auto top = [&](Index r0, Index rows) { return sys.A.block(r0, 0, rows, q * mx); };
    auto btm = [&](Index r0, Index rows) { return sys.A.block(r0, q * mx, rows, q * mz); };

    top(0, r1) = scales.dynamics * (kron(Iq, UM * nds.Axx) - kron(gen.Xi.transpose(), UM * nds.E));
    btm(0, r1) = scales.dynamics * kron(Iq, UM * nds.Bxv * phi0);
    top(r1, r2) = scales.internal * kron(Iq, UN * nds.Czx);
    btm(r1, r2) = scales.internal * kron(Iq, UN * (nds.Dzv * phi0 - Matrix::Identity(mz, mz)));
    top(r1 + r2, r3) = scales.output * kron(Iq, UQ * nds.Cyx);
    btm(r1 + r2, r3) = scales.output * kron(Iq, UQ * nds.Dyv * phi0);

    sys.b.segment(0, r1) = -scales.dynamics * vec(UM * nds.Bxu * gen.Pi);
    sys.b.segment(r1, r2) = -scales.internal * vec(UN * nds.Dzu * gen.Pi);
    sys.b.segment(r1 + r2, r3) = scales.output * vec(UQ * (yss_hat - nds.Dyu * gen.Pi));
    return sys;
}

XEstimate estimate_x(const LinearSystem& sys, Index mx, Index mz, Index order, double rank_tol) {
    if (sys.A.cols() != order * (mx + mz)) throw DimensionError("estimate_x: column count mismatch");
    const auto ls = solve_least_squares(sys.A, sys.b, rank_tol);
    XEstimate out;
    out.X_top = unvec(ls.x.head(order * mx), mx, order);
    out.X_btm = unvec(ls.x.tail(order * mz), mz, order);
    out.rank_ok = ls.full_rank;
    out.rank = ls.rank;
    out.cond = ls.condition;
    out.residual = ls.residual_norm;
    return out;
}

LinearSystem build_theta_system(const NdsModel& nds, const InputGenerator& gen,
                                const Matrix& X_top, const Matrix& X_btm, const Matrix& yss_hat,
                                const GroupScales& scales) {
    gen.validate();
    const Index q = gen.order();
    const Index mx = nds.mx(), mz = nds.mz(), my = nds.my();
    if (X_top.rows() != mx || X_btm.rows() != mz || X_top.cols() != q || X_btm.cols() != q)
        throw DimensionError("build_theta_system: X partitions have the wrong shape");
    if (yss_hat.rows() != my || yss_hat.cols() != q)
        throw DimensionError("build_theta_system: Yss_hat must be m_y x m_xi");
    const auto& basis = nds.topology.basis;
    const Index p = nds.topology.num_params();
    const Matrix& phi0 = nds.topology.phi0;
    const Index r1 = mx * q, r2 = mz * q, r3 = my * q;

    LinearSystem sys;
    sys.A.resize(r1 + r2 + r3, p);
    for (Index i = 0; i < p; ++i) {
        const Matrix PX = basis[static_cast<std::size_t>(i)] * X_btm;
        sys.A.col(i).segment(0, r1) = scales.dynamics * vec(nds.Bxv * PX);
        sys.A.col(i).segment(r1, r2) = scales.internal * vec(nds.Dzv * PX);
        sys.A.col(i).segment(r1 + r2, r3) = scales.output * vec(nds.Dyv * PX);
    }
    const Matrix P0X = phi0 * X_btm;
    sys.b.resize(r1 + r2 + r3);
    sys.b.segment(0, r1) = scales.dynamics * vec(nds.E * X_top * gen.Xi - nds.Axx * X_top -
                                                 nds.Bxv * P0X - nds.Bxu * gen.Pi);
    sys.b.segment(r1, r2) =
        scales.internal * vec(X_btm - nds.Czx * X_top - nds.Dzv * P0X - nds.Dzu * gen.Pi);
    sys.b.segment(r1 + r2, r3) =
        scales.output * vec(yss_hat - nds.Cyx * X_top - nds.Dyv * P0X - nds.Dyu * gen.Pi);
    return sys;
}

ThetaEstimate estimate_theta(const LinearSystem& sys, double rank_tol) {
    ThetaEstimate out;
    if (sys.A.size() == 0 || sys.A.cwiseAbs().maxCoeff() == 0.0) {
        out.theta = Vector::Zero(sys.A.cols());
        out.rank_ok = sys.A.cols() == 0;
        out.cond = std::numeric_limits<double>::infinity();
        out.residual = sys.b.norm();
        return out;
    }
    const auto ls = solve_least_squares(sys.A, sys.b, rank_tol);
    out.theta = ls.x;
    out.rank_ok = ls.full_rank;
    out.rank = ls.rank;
    out.cond = ls.condition;
    out.residual = ls.residual_norm;
    return out;
}

Stage2Report run_stage2(const NdsModel& nds, const InputGenerator& gen,
                        const GeneratorSpectrum& spectrum, const InterpolationVector& eta_hat,
                        const Stage2Options& opts) {
    Stage2Report rep;
    rep.Yss_hat = yss_from_eta(eta_hat, spectrum, &rep.yss_imag_residue);
    if (rep.yss_imag_residue > opts.imag_warn * std::max(1.0, rep.Yss_hat.cwiseAbs().maxCoeff()))
        rep.warnings.push_back("Yss_hat has a non-negligible imaginary residue (" +
                               std::to_string(rep.yss_imag_residue) + ")");

    const auto proj = build_projections(nds, opts.svd_rank_tol);
    rep.r_M = proj.r_M;
    rep.r_N = proj.r_N;
    rep.r_Q = proj.r_Q;
    const auto xsys = build_x_system(nds, gen, proj, rep.Yss_hat, opts.scales);
    rep.gamma_rows = xsys.A.rows();
    rep.gamma_cols = xsys.A.cols();
    const auto xe = estimate_x(xsys, nds.mx(), nds.mz(), gen.order(), opts.ls_rank_tol);
    rep.X_top = xe.X_top;
    rep.X_btm = xe.X_btm;
    rep.gamma_rank_ok = xe.rank_ok;
    rep.gamma_cond = xe.cond;
    rep.gamma_residual = xe.residual;

    rep.theta_hat = Vector::Constant(nds.topology.num_params(), std::numeric_limits<double>::quiet_NaN());
    if (!xe.rank_ok) {
        rep.warnings.push_back("Gamma is rank deficient; X is not identifiable");
        if (!opts.force) return rep;
    }
    const auto tsys = build_theta_system(nds, gen, xe.X_top, xe.X_btm, rep.Yss_hat, opts.scales);
    const auto te = estimate_theta(tsys, opts.ls_rank_tol);
    rep.theta_hat = te.theta;
    rep.psi_rank_ok = te.rank_ok;
    rep.psi_cond = te.cond;
    rep.psi_residual = te.residual;
    if (!te.rank_ok) rep.warnings.push_back("Psi is rank deficient; theta is not identifiable");
    return rep;
}

IdentifiabilityReport identifiability_report(const NdsModel& nds, const InputGenerator& gen,
                                             const Stage2Options& opts) {
    IdentifiabilityReport r;
    const auto sp = analyze_generator(gen);
    const auto c = coefficients(gen, sp);
    r.stage1_pe_hint = (c.alpha.array() != 0.0).all() && (c.amplitude.array() != 0.0).all();

    const auto sol = solve_sylvester(nds, gen);
    const auto proj = build_projections(nds, opts.svd_rank_tol);
    const auto xsys = build_x_system(nds, gen, proj, sol.Yss, opts.scales);
    const auto gl = solve_least_squares(xsys.A, xsys.b, opts.ls_rank_tol);
    r.gamma_rank_ok = gl.full_rank;
    r.gamma_cond = condition_number(xsys.A);

    const auto tsys = build_theta_system(nds, gen, sol.X_top(), sol.X_btm(), sol.Yss, opts.scales);
    const auto te = estimate_theta(tsys, opts.ls_rank_tol);
    r.psi_rank_at_truth = te.rank_ok;
    r.psi_cond = te.cond;
    return r;
}

}  // namespace ndsid
