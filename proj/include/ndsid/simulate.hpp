#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ndsid/generator.hpp"
#include "ndsid/model.hpp"

namespace ndsid {

/// Solution of  Ebar X - Z = 0,  A_theta X + B_stack Pi = Z Xi.
struct SylvesterSolution {
    Matrix X;
    Matrix Z;
    Matrix Yss;  ///< C_theta X + Dyu Pi
    Index mx = 0;

    Matrix X_top() const { return X.topRows(mx); }
    Matrix X_btm() const { return X.bottomRows(X.rows() - mx); }
};

/// Dense Kronecker solve of (I (x) A_theta - Xi^T (x) Ebar) vec(X) = -vec(B_stack Pi).
/// Throws EigenvalueCollision when the system is singular.
SylvesterSolution solve_sylvester(const NdsModel& nds, const InputGenerator& gen);

/// y_s(t) = Yss expm(Xi t) xi(0). Debug builds also evaluate the modal sum and
/// assert agreement.
Vector steady_state_response(const SylvesterSolution& sol, const InputGenerator& gen, double t);

/// Modal form  sum_i alpha_i e^{lambda_i t} eta_r,i + sum_i Re{conj(beta_i) e^{lambda_i t} eta_c,i},
/// with the interpolations read off Yss T.
Vector steady_state_modal(const SylvesterSolution& sol, const GeneratorSpectrum& spectrum,
                          const SteadyCoefficients& coeffs, double t);

/// Exact time response of the z-eliminated network driven by the generator,
/// evaluated per time point through the exponential of the augmented matrix
///   [[E^-1 A, E^-1 B Pi], [0, Xi]].
class ResponseSimulator {
   public:
    /// Throws WellPosednessError or UnsupportedDescriptorSimulation (singular E).
    ResponseSimulator(const NdsModel& nds, const InputGenerator& gen, const Vector& x0);

    Vector state(double t) const;
    Vector output(double t) const;

   private:
    Matrix augmented_;
    Vector initial_;
    Matrix output_map_;
    Index mx_ = 0;
};

Vector full_response(const NdsModel& nds, const InputGenerator& gen, const Vector& x0, double t);

struct SamplingWindow {
    Index subsystem = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    double interval_min = 0.1;
    double interval_max = 5.0;
};

struct ScheduleSpec {
    std::vector<SamplingWindow> windows;
};

struct ScheduleEntry {
    Index subsystem = 0;
    double t = 0.0;
};

/// Independent per-subsystem timelines t_{j+1} = t_j + U[interval_min, interval_max]
/// starting from t_start, merged and sorted by (t, subsystem).
std::vector<ScheduleEntry> make_schedule(const ScheduleSpec& spec, std::uint64_t seed);

/// Same streams as make_schedule with open-ended windows, truncated once
/// `steady_samples` entries with t >= t_settle have been produced.
std::vector<ScheduleEntry> make_schedule_until(const ScheduleSpec& spec, double t_settle,
                                               Index steady_samples, std::uint64_t seed);

struct SampleRecord {
    Index subsystem = 0;
    double t = 0.0;
    Vector y;
};

struct SampleDataset {
    std::vector<SampleRecord> records;
    double noise_variance = 0.0;
    double t_settle = 0.0;
    std::uint64_t rng_seed = 0;
    std::optional<double> transient_bound;  ///< ||y_t(t_settle)|| when it could be computed

    /// Index of the first record with t >= t_settle (records.size() if none).
    std::size_t first_steady_index() const;
    std::size_t steady_count() const { return records.size() - first_steady_index(); }
};

enum class SimulationMode {
    Full,        ///< transient + steady state (needs invertible E)
    SteadyOnly,  ///< steady state only; every sample must satisfy t >= t_settle
};

struct MeasureOptions {
    SimulationMode mode = SimulationMode::Full;
    double t_settle = 0.0;
};

/// y_k(t) = S_k y(t) + n with iid Gaussian noise of standard deviation noise_std.
SampleDataset measure(const NdsModel& nds, const InputGenerator& gen, const Vector& x0,
                      const std::vector<ScheduleEntry>& schedule, double noise_std,
                      std::uint64_t seed, const MeasureOptions& opts = {});

}  // namespace ndsid
