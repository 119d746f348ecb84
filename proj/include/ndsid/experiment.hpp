#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ndsid/bench.hpp"
#include "ndsid/io.hpp"
#include "ndsid/stage2.hpp"

namespace ndsid {

enum class Estimator { Batch, Rls };
enum class InitialState { Zero, Steady };

struct NlsConfig {
    bool enabled = true;
    std::vector<double> levels{0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
    Index inits = 5;
    Index max_iterations = 100;
    bool select_by_error = true;  ///< keep the init with the smallest final e_theta (else: cost)
};

/// One JSON document drives every command; see README for the key list.
struct ExperimentConfig {
    io::Json model;  ///< {"chain": {...}} | {"file": "model.json"} | inline model document
    InputGenerator generator;
    double interval_min = 0.1;
    double interval_max = 5.0;
    double noise_variance = 0.0;
    std::optional<double> t_settle;
    double settle_fraction = 1e-3;
    std::vector<Index> sweep;
    Index steady_samples = 0;  ///< defaults to the last sweep entry
    Index trials = 1;
    std::uint64_t seed = 1;
    unsigned threads = 0;  ///< 0 = hardware concurrency
    std::filesystem::path output_dir = "out";
    Estimator estimator = Estimator::Batch;
    InitialState initial_state = InitialState::Zero;
    SimulationMode simulation = SimulationMode::Full;
    NlsConfig nls;
    Stage2Options stage2;

    std::filesystem::path base_dir;  ///< relative paths in the document resolve here
    io::Json source;                 ///< normalized document (after overrides), hashed into reports

    static ExperimentConfig from_json(const io::Json& j, const std::filesystem::path& base_dir = {});
    static ExperimentConfig load(const std::filesystem::path& path,
                                 const std::vector<std::string>& overrides = {});
    std::string hash() const { return io::hash_json(source); }
};

/// Applies "a.b.c=<json value>" (a bare word is taken as a string).
void apply_override(io::Json& doc, const std::string& assignment);

/// Truth model, generator and sampling plan shared by every trial.
struct Problem {
    NdsModel nds;
    std::vector<DescriptorSubsystem> subsystems;
    InputGenerator gen;
    GeneratorSpectrum spectrum;
    SteadyCoefficients coeffs;
    Vector theta_true;
    InterpolationVector eta_true;
    Diagnostics diagnostics;
    double t_settle = 0.0;
    ScheduleSpec schedule;
};

/// Throws AssumptionViolation for an unstable model and InputError for bad documents.
Problem build_problem(const ExperimentConfig& cfg);

SampleDataset generate_dataset(const Problem& p, const ExperimentConfig& cfg, std::uint64_t seed,
                               Index steady_samples);

struct SweepPoint {
    Index samples = 0;
    double e_eta = 0.0;
    double e_theta = 0.0;
    Vector eta_hat;
    Vector theta_hat;
    bool ok = false;  ///< stage-1 rank and both stage-2 rank flags
};

struct Identification {
    std::vector<SweepPoint> sweep;
    Stage2Report report;  ///< for the largest sweep point
};

/// Stage 1 + Stage 2 at every sweep point not exceeding the dataset's steady count
/// (the full steady set when none fits).
Identification identify(const Problem& p, const SampleDataset& ds, const ExperimentConfig& cfg);

struct NlsLevel {
    double level = 0.0;
    double nls_e_theta = 0.0;
    double nls_cost = 0.0;
    Index nls_iterations = 0;
    Vector nls_theta;
};

std::vector<NlsLevel> compare_nls(const Problem& p, const SampleDataset& ds, const ExperimentConfig& cfg);

struct MonteCarloPoint {
    Index samples = 0;
    Index completed = 0;
    Index failures = 0;
    double median_e_eta = 0.0, mean_e_eta = 0.0, std_e_eta = 0.0;
    double median_e_theta = 0.0, mean_e_theta = 0.0, std_e_theta = 0.0;
    Vector mean_theta, std_error_theta;
};

struct MonteCarloResult {
    std::vector<MonteCarloPoint> points;
    std::vector<std::string> trial_errors;  ///< "trial k: message", in trial order
};

MonteCarloResult montecarlo(const Problem& p, const ExperimentConfig& cfg);

/// Runs body(i) for i in [0, n) on `threads` workers (0 = hardware concurrency).
void parallel_for(Index n, unsigned threads, const std::function<void(Index)>& body);

inline constexpr const char* kSweepHeader = "samples,e_eta,e_theta";
inline constexpr const char* kNlsHeader = "level,nls_e_theta,two_stage_e_theta,nls_iterations";
inline constexpr const char* kMonteCarloHeader =
    "samples,completed,failures,median_e_eta,mean_e_eta,std_e_eta,median_e_theta,mean_e_theta,std_e_theta";
inline constexpr const char* kBiasHeader = "samples,param,true,mean,bias,std_error";

std::string sweep_to_csv(const std::vector<SweepPoint>& sweep);
std::string nls_to_csv(const std::vector<NlsLevel>& levels, double two_stage_e_theta);
std::string montecarlo_to_csv(const MonteCarloResult& r);
std::string bias_to_csv(const MonteCarloResult& r, const Vector& theta_true);

/// Process exit codes.
enum ExitCode : int { kOk = 0, kIdentifiability = 2, kInput = 3, kNumerical = 4 };

/// Commands writing into cfg.output_dir. Each returns an exit code; library errors propagate.
struct CommandOptions {
    bool force = false;
    std::optional<std::filesystem::path> dataset;  ///< default: <output_dir>/dataset.csv
};
int cmd_generate(const ExperimentConfig& cfg, std::string& log);
int cmd_identify(const ExperimentConfig& cfg, const CommandOptions& opts, std::string& log);
int cmd_compare_nls(const ExperimentConfig& cfg, const CommandOptions& opts, std::string& log);
int cmd_montecarlo(const ExperimentConfig& cfg, const CommandOptions& opts, std::string& log);
int cmd_diagnose(const ExperimentConfig& cfg, std::string& log);

/// Maps a library exception to an exit code.
int exit_code_for(const std::exception& e);

}  // namespace ndsid
