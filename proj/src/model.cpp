#include "ndsid/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "ndsid/errors.hpp"

namespace ndsid {

namespace {

void expect_shape(const Matrix& m, Index rows, Index cols, const char* name, Index index) {
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError("subsystem " + std::to_string(index) + ": " + name + " is " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                             ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    }
}

double lu_rcond(const Matrix& M) {
    if (M.rows() == 0) return 1.0;
    return M.partialPivLu().rcond();
}

double lu_rcond(const CMatrix& M) {
    if (M.rows() == 0) return 1.0;
    return M.partialPivLu().rcond();
}

constexpr double kSingularRcond = 1e-14;

}  // namespace

DescriptorSubsystem DescriptorSubsystem::zeros(const SubsystemDims& d) {
    DescriptorSubsystem s;
    s.E = Matrix::Identity(d.nx, d.nx);
    s.Axx = Matrix::Zero(d.nx, d.nx);
    s.Bxv = Matrix::Zero(d.nx, d.nv);
    s.Bxu = Matrix::Zero(d.nx, d.nu);
    s.Czx = Matrix::Zero(d.nz, d.nx);
    s.Dzv = Matrix::Zero(d.nz, d.nv);
    s.Dzu = Matrix::Zero(d.nz, d.nu);
    s.Cyx = Matrix::Zero(d.ny, d.nx);
    s.Dyv = Matrix::Zero(d.ny, d.nv);
    s.Dyu = Matrix::Zero(d.ny, d.nu);
    return s;
}

SubsystemDims DescriptorSubsystem::dims() const {
    return {E.rows(), Bxv.cols(), Bxu.cols(), Czx.rows(), Cyx.rows()};
}

void DescriptorSubsystem::validate(Index index) const {
    const auto d = dims();
    expect_shape(E, d.nx, d.nx, "E", index);
    expect_shape(Axx, d.nx, d.nx, "Axx", index);
    expect_shape(Bxv, d.nx, d.nv, "Bxv", index);
    expect_shape(Bxu, d.nx, d.nu, "Bxu", index);
    expect_shape(Czx, d.nz, d.nx, "Czx", index);
    expect_shape(Dzv, d.nz, d.nv, "Dzv", index);
    expect_shape(Dzu, d.nz, d.nu, "Dzu", index);
    expect_shape(Cyx, d.ny, d.nx, "Cyx", index);
    expect_shape(Dyv, d.ny, d.nv, "Dyv", index);
    expect_shape(Dyu, d.ny, d.nu, "Dyu", index);
}

void Topology::validate() const {
    for (std::size_t i = 0; i < basis.size(); ++i) {
        if (basis[i].rows() != phi0.rows() || basis[i].cols() != phi0.cols())
            throw DimensionError("topology: basis matrix " + std::to_string(i + 1) +
                                 " does not match the shape of phi0");
    }
    if (theta.size() != num_params())
        throw DimensionError("topology: theta has " + std::to_string(theta.size()) +
                             " entries, basis has " + std::to_string(num_params()));
    if (!bounds.empty()) {
        if (static_cast<Index>(bounds.size()) != num_params())
            throw DimensionError("topology: bounds count differs from parameter count");
        for (Index i = 0; i < num_params(); ++i) {
            const auto& b = bounds[static_cast<std::size_t>(i)];
            if (b.lo > b.hi) throw InputError("topology: empty bound interval");
            if (!b.contains(theta(i)))
                throw InputError("topology: theta_" + std::to_string(i + 1) +
                                 " lies outside its admissible interval");
        }
    }
}

Matrix phi_of_theta(const Topology& topology, const Vector& theta) {
    if (theta.size() != topology.num_params())
        throw DimensionError("phi_of_theta: expected " + std::to_string(topology.num_params()) +
                             " parameters, got " + std::to_string(theta.size()));
    Matrix phi = topology.phi0;
    for (Index i = 0; i < theta.size(); ++i) phi += theta(i) * topology.basis[i];
    return phi;
}

namespace {

void derive_pencil(NdsModel& m) {
    const Index mx = m.mx(), mz = m.mz();
    m.phi = phi_of_theta(m.topology, m.topology.theta);

    m.Ebar = Matrix::Zero(mx + mz, mx + mz);
    m.Ebar.topLeftCorner(mx, mx) = m.E;

    m.Atheta.resize(mx + mz, mx + mz);
    m.Atheta.topLeftCorner(mx, mx) = m.Axx;
    m.Atheta.topRightCorner(mx, mz) = m.Bxv * m.phi;
    m.Atheta.bottomLeftCorner(mz, mx) = m.Czx;
    m.Atheta.bottomRightCorner(mz, mz) = m.Dzv * m.phi - Matrix::Identity(mz, mz);

    m.Ctheta.resize(m.my(), mx + mz);
    m.Ctheta.leftCols(mx) = m.Cyx;
    m.Ctheta.rightCols(mz) = m.Dyv * m.phi;

    m.Bstack.resize(mx + mz, m.mu());
    m.Bstack.topRows(mx) = m.Bxu;
    m.Bstack.bottomRows(mz) = m.Dzu;
}

}  // namespace

NdsModel assemble_nds(const std::vector<DescriptorSubsystem>& subsystems, const Topology& topology) {
    NdsModel m;
    m.subsystems = subsystems;
    m.topology = topology;

    auto& L = m.layout;
    L.x = L.v = L.u = L.z = L.y = {0};
    std::vector<Matrix> E, Axx, Bxv, Bxu, Czx, Dzv, Dzu, Cyx, Dyv, Dyu;
    for (std::size_t i = 0; i < subsystems.size(); ++i) {
        const auto& s = subsystems[i];
        s.validate(static_cast<Index>(i));
        const auto d = s.dims();
        L.x.push_back(L.x.back() + d.nx);
        L.v.push_back(L.v.back() + d.nv);
        L.u.push_back(L.u.back() + d.nu);
        L.z.push_back(L.z.back() + d.nz);
        L.y.push_back(L.y.back() + d.ny);
        E.push_back(s.E);
        Axx.push_back(s.Axx);
        Bxv.push_back(s.Bxv);
        Bxu.push_back(s.Bxu);
        Czx.push_back(s.Czx);
        Dzv.push_back(s.Dzv);
        Dzu.push_back(s.Dzu);
        Cyx.push_back(s.Cyx);
        Dyv.push_back(s.Dyv);
        Dyu.push_back(s.Dyu);
    }
    m.E = block_diag(E);
    m.Axx = block_diag(Axx);
    m.Bxv = block_diag(Bxv);
    m.Bxu = block_diag(Bxu);
    m.Czx = block_diag(Czx);
    m.Dzv = block_diag(Dzv);
    m.Dzu = block_diag(Dzu);
    m.Cyx = block_diag(Cyx);
    m.Dyv = block_diag(Dyv);
    m.Dyu = block_diag(Dyu);

    if (topology.phi0.rows() != L.v.back() || topology.phi0.cols() != L.z.back())
        throw DimensionError("topology: phi0 is " + std::to_string(topology.phi0.rows()) + "x" +
                             std::to_string(topology.phi0.cols()) + " but the subsystems give m_v=" +
                             std::to_string(L.v.back()) + ", m_z=" + std::to_string(L.z.back()));
    topology.validate();
    derive_pencil(m);
    return m;
}

NdsModel NdsModel::with_theta(const Vector& theta) const {
    if (theta.size() != topology.num_params())
        throw DimensionError("with_theta: parameter count mismatch");
    NdsModel copy = *this;
    copy.topology.theta = theta;
    derive_pencil(copy);
    return copy;
}

std::vector<Complex> finite_generalized_eigenvalues(const NdsModel& nds) {
    std::vector<Complex> out;
    const Index n = nds.Atheta.rows();
    if (n == 0) return out;
    Eigen::GeneralizedEigenSolver<Matrix> ges;
    ges.compute(nds.Atheta, nds.Ebar, false);
    if (ges.info() != Eigen::Success) throw Error("QZ iteration did not converge");
    const double scale = std::max(nds.Ebar.norm(), std::numeric_limits<double>::min());
    const auto& alphas = ges.alphas();
    const auto& betas = ges.betas();
    for (Index i = 0; i < n; ++i) {
        if (std::abs(betas(i)) > 1e-11 * scale) out.push_back(alphas(i) / betas(i));
    }
    return out;
}

Diagnostics check_regularity(const NdsModel& nds, const RegularityOptions& opts) {
    Diagnostics d;
    const Index mz = nds.mz();
    d.wellposed = lu_rcond(Matrix(Matrix::Identity(mz, mz) - nds.Dzv * nds.phi)) > 1e-12;

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const double scale = std::max(1.0, nds.Atheta.norm() / std::max(1.0, nds.Ebar.norm()));
    for (int k = 0; k < 5 && !d.regular_pencil; ++k) {
        const Complex s(scale * g(rng), scale * g(rng));
        const CMatrix P = s * nds.Ebar.cast<Complex>() - nds.Atheta.cast<Complex>();
        if (lu_rcond(P) > 1e-12) d.regular_pencil = true;
    }

    if (d.regular_pencil) {
        d.finite_eigenvalues = finite_generalized_eigenvalues(nds);
        // A defective eigenvalue at the origin (rigid-body mode) comes back perturbed
        // by about sqrt(eps), so demand a margin well above that.
        double largest = 1.0;
        for (auto l : d.finite_eigenvalues) largest = std::max(largest, std::abs(l));
        const double margin = 1e-7 * largest;
        d.stable = d.wellposed &&
                   std::all_of(d.finite_eigenvalues.begin(), d.finite_eigenvalues.end(),
                               [margin](Complex l) { return l.real() < -margin; });
    }
    if (d.stable) {
        double slowest = std::numeric_limits<double>::infinity();
        for (auto l : d.finite_eigenvalues) slowest = std::min(slowest, std::abs(l.real()));
        d.settling_bound = d.finite_eigenvalues.empty()
                               ? 0.0
                               : -std::log(opts.settle_fraction) / slowest;
    }
    if (opts.settling_override) d.settling_bound = *opts.settling_override;
    return d;
}

CMatrix transfer_eval(const NdsModel& nds, Complex s) {
    const CMatrix P = s * nds.Ebar.cast<Complex>() - nds.Atheta.cast<Complex>();
    CMatrix H = nds.Dyu.cast<Complex>();
    if (P.rows() == 0) return H;
    Eigen::PartialPivLU<CMatrix> lu(P);
    if (!(lu.rcond() > kSingularRcond))
        throw EvaluationError("transfer_eval: pencil sE - A is singular at the requested point", s);
    H += nds.Ctheta.cast<Complex>() * lu.solve(nds.Bstack.cast<Complex>());
    return H;
}

EliminatedRealization eliminate_internal(const NdsModel& nds) {
    const Index mz = nds.mz();
    const Matrix IminusDPhi = Matrix::Identity(mz, mz) - nds.Dzv * nds.phi;
    Matrix W = Matrix::Identity(mz, mz);
    if (mz > 0) {
        Eigen::PartialPivLU<Matrix> lu(IminusDPhi);
        if (!(lu.rcond() > 1e-12))
            throw WellPosednessError("I - Dzv*Phi(theta) is singular; the network is not well-posed");
        W = lu.inverse();
    }
    const Matrix BPhiW = nds.Bxv * nds.phi * W;
    const Matrix DPhiW = nds.Dyv * nds.phi * W;
    EliminatedRealization r;
    r.E = nds.E;
    r.A = nds.Axx + BPhiW * nds.Czx;
    r.B = nds.Bxu + BPhiW * nds.Dzu;
    r.C = nds.Cyx + DPhiW * nds.Czx;
    r.D = nds.Dyu + DPhiW * nds.Dzu;
    return r;
}

}  // namespace ndsid
