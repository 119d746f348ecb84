#include "ndsid/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "ndsid/errors.hpp"

namespace ndsid {

void InputGenerator::validate() const {
    if (Xi.rows() != Xi.cols()) throw DimensionError("generator: Xi must be square");
    if (Pi.cols() != Xi.rows()) throw DimensionError("generator: Pi must have m_xi columns");
    if (xi0.size() != Xi.rows()) throw DimensionError("generator: xi0 must have m_xi entries");
}

namespace {

struct Mode {
    Complex lambda;
    Vector re;  // real eigenvector, or Re w for a complex pair
    Vector im;  // Im w (empty for real modes)
    Index source = 0;
};

bool is_complex(const Mode& m) { return m.im.size() > 0; }

// Real modes ascending, then complex pairs by (omega, sigma).
void sort_canonical(std::vector<Mode>& modes) {
    std::stable_sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
        const bool ca = is_complex(a), cb = is_complex(b);
        if (ca != cb) return !ca;
        if (!ca) return a.lambda.real() < b.lambda.real();
        if (a.lambda.imag() != b.lambda.imag()) return a.lambda.imag() < b.lambda.imag();
        return a.lambda.real() < b.lambda.real();
    });
}

// Xi already block-diagonal with 1x1 blocks and [[s, w], [-w, s]] blocks: the
// modal matrix is a signed permutation and can be built exactly.
bool canonical_blocks(const Matrix& Xi, std::vector<Mode>& modes) {
    const Index n = Xi.rows();
    std::vector<std::pair<Index, Index>> blocks;
    for (Index i = 0; i < n;) {
        if (i + 1 < n && (Xi(i + 1, i) != 0.0 || Xi(i, i + 1) != 0.0)) {
            blocks.emplace_back(i, 2);
            i += 2;
        } else {
            blocks.emplace_back(i, 1);
            i += 1;
        }
    }
    Matrix mask = Matrix::Zero(n, n);
    for (auto [start, size] : blocks) mask.block(start, start, size, size).setOnes();
    if ((Xi.array() * (1.0 - mask.array())).abs().maxCoeff() != 0.0) return false;

    modes.clear();
    for (auto [start, size] : blocks) {
        Mode m;
        m.source = start;
        m.re = Vector::Zero(n);
        if (size == 1) {
            m.lambda = Xi(start, start);
            m.re(start) = 1.0;
        } else {
            const double s = Xi(start, start);
            const double w = Xi(start, start + 1);
            if (Xi(start + 1, start + 1) != s || Xi(start + 1, start) != -w || w == 0.0)
                return false;
            m.lambda = Complex(s, std::abs(w));
            m.im = Vector::Zero(n);
            m.re(start) = 1.0;
            m.im(start + 1) = w > 0.0 ? 1.0 : -1.0;
        }
        modes.push_back(std::move(m));
    }
    return true;
}

CVector normalized(const CVector& w) {
    const double biggest = w.cwiseAbs().maxCoeff();
    Index p = 0;
    while (std::abs(w(p)) < (1.0 - 1e-8) * biggest) ++p;
    return w / w(p);
}

void general_modes(const Matrix& Xi, std::vector<Mode>& modes) {
    Eigen::EigenSolver<Matrix> es(Xi, true);
    if (es.info() != Eigen::Success) throw Error("generator: eigen decomposition failed");
    const CVector ev = es.eigenvalues();
    const CMatrix vecs = es.eigenvectors();
    const double scale = std::max(Xi.norm(), 1.0);
    modes.clear();
    for (Index i = 0; i < ev.size(); ++i) {
        const CVector w = normalized(vecs.col(i));
        Mode m;
        m.source = i;
        if (std::abs(ev(i).imag()) <= 1e-12 * scale) {
            m.lambda = ev(i).real();
            m.re = w.real();
        } else if (ev(i).imag() > 0.0) {
            m.lambda = ev(i);
            m.re = w.real();
            m.im = w.imag();
        } else {
            continue;
        }
        modes.push_back(std::move(m));
    }
}

}  // namespace

GeneratorSpectrum analyze_generator(const InputGenerator& gen) {
    gen.validate();
    const Index n = gen.order();
    GeneratorSpectrum sp;
    if (n == 0) return sp;

    {
        const CVector ev = Eigen::EigenSolver<Matrix>(gen.Xi, false).eigenvalues();
        const double gap_tol = 1e-8 * gen.Xi.norm();
        for (Index i = 0; i < n; ++i)
            for (Index j = i + 1; j < n; ++j)
                if (std::abs(ev(i) - ev(j)) <= gap_tol)
                    throw AssumptionViolation(
                        "generator: eigenvalues of Xi must be pairwise distinct");
    }

    std::vector<Mode> modes;
    if (!canonical_blocks(gen.Xi, modes)) general_modes(gen.Xi, modes);
    sort_canonical(modes);

    sp.modal = Matrix::Zero(n, n);
    sp.J = Matrix::Zero(n, n);
    sp.T = CMatrix::Zero(n, n);
    sp.Lambda = CVector::Zero(n);
    const Complex j(0.0, 1.0);
    Index col = 0;
    for (const auto& m : modes) {
        sp.ordering.push_back(m.source);
        if (!is_complex(m)) {
            sp.lambda_r.push_back(m.lambda.real());
            sp.pi_r.push_back(gen.Pi * m.re);
            sp.modal.col(col) = m.re;
            sp.J(col, col) = m.lambda.real();
            sp.Lambda(col) = m.lambda.real();
            col += 1;
        }
    }
    for (const auto& m : modes) {
        if (is_complex(m)) {
            const double s = m.lambda.real(), w = m.lambda.imag();
            sp.lambda_c.push_back(m.lambda);
            const CVector wvec = m.re.cast<Complex>() + j * m.im.cast<Complex>();
            sp.pi_c.push_back(gen.Pi.cast<Complex>() * wvec);
            sp.modal.col(col) = m.re;
            sp.modal.col(col + 1) = m.im;
            sp.J.block(col, col, 2, 2) << s, w, -w, s;
            sp.Lambda(col) = m.lambda;
            sp.Lambda(col + 1) = std::conj(m.lambda);
            col += 2;
        }
    }
    if (col != n) throw AssumptionViolation("generator: could not separate the spectrum of Xi");

    sp.modal_inv = sp.modal.inverse();
    CMatrix blockT = CMatrix::Identity(n, n);
    CMatrix blockTinv = CMatrix::Identity(n, n);
    for (Index k = sp.m_r(); k < n; k += 2) {
        blockT.block(k, k, 2, 2) << 1.0, 1.0, j, -j;
        blockTinv.block(k, k, 2, 2) << 0.5, -0.5 * j, 0.5, 0.5 * j;
    }
    sp.T = sp.modal.cast<Complex>() * blockT;
    sp.T_inv = blockTinv * sp.modal_inv.cast<Complex>();
    return sp;
}

SteadyCoefficients coefficients(const InputGenerator& gen, const GeneratorSpectrum& spectrum) {
    if (gen.xi0.size() != spectrum.order())
        throw DimensionError("coefficients: xi0 does not match the generator order");
    const Vector c = spectrum.modal_inv * gen.xi0;
    const Index mr = spectrum.m_r(), mc = spectrum.m_c();
    SteadyCoefficients k;
    k.alpha = c.head(mr);
    k.mu.resize(mc);
    k.nu.resize(mc);
    k.phase.resize(mc);
    k.amplitude.resize(mc);
    for (Index i = 0; i < mc; ++i) {
        k.mu(i) = c(mr + 2 * i);
        k.nu(i) = c(mr + 2 * i + 1);
        k.phase(i) = std::atan2(k.nu(i), k.mu(i));
        k.amplitude(i) = std::hypot(k.mu(i), k.nu(i));
    }
    return k;
}

Vector reconstruct_xi0(const GeneratorSpectrum& spectrum, const SteadyCoefficients& coeffs) {
    const Index mr = spectrum.m_r(), mc = spectrum.m_c();
    Vector c(mr + 2 * mc);
    c.head(mr) = coeffs.alpha;
    for (Index i = 0; i < mc; ++i) {
        c(mr + 2 * i) = coeffs.mu(i);
        c(mr + 2 * i + 1) = coeffs.nu(i);
    }
    return spectrum.modal * c;
}

Vector psi(const GeneratorSpectrum& spectrum, const SteadyCoefficients& coeffs, double t) {
    const Index mr = spectrum.m_r(), mc = spectrum.m_c();
    Vector out(mr + 2 * mc);
    for (Index i = 0; i < mr; ++i) out(i) = coeffs.alpha(i) * std::exp(spectrum.lambda_r[i] * t);
    for (Index i = 0; i < mc; ++i) {
        const auto lam = spectrum.lambda_c[static_cast<std::size_t>(i)];
        const double envelope = coeffs.amplitude(i) * std::exp(lam.real() * t);
        const double arg = lam.imag() * t - coeffs.phase(i);
        out(mr + 2 * i) = envelope * std::cos(arg);
        out(mr + 2 * i + 1) = -envelope * std::sin(arg);
    }
    return out;
}

Vector input_u(const InputGenerator& gen, double t) {
    gen.validate();
    return gen.Pi * (expm(gen.Xi * t) * gen.xi0);
}

}  // namespace ndsid
