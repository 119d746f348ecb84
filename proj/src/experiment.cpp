#include "ndsid/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "ndsid/errors.hpp"
#include "ndsid/rng.hpp"

namespace ndsid {

namespace fs = std::filesystem;
using io::Json;

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw InputError(std::string("config: bad value for '") + key + "'");
    }
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& context) {
    if (!j.is_object()) throw InputError(context + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw InputError(context + ": unknown key '" + it.key() + "'");
}

Interval interval_from(const Json& j, const char* key, Interval fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw InputError(std::string("chain.") + key + ": expected [lo, hi]");
    return {v[0].get<double>(), v[1].get<double>()};
}

ChainSpec chain_from_json(const Json& j) {
    check_keys(j, {"n_carts", "mass_range", "spring_range", "damper_range", "unknown_coupling",
                   "wall_anchoring", "split_forces", "seed"},
               "chain");
    ChainSpec s;
    s.n_carts = get_or<Index>(j, "n_carts", s.n_carts);
    s.mass_range = interval_from(j, "mass_range", s.mass_range);
    s.spring_range = interval_from(j, "spring_range", s.spring_range);
    s.damper_range = interval_from(j, "damper_range", s.damper_range);
    s.unknown_coupling = get_or<Index>(j, "unknown_coupling", 0);
    s.wall_anchoring = get_or<bool>(j, "wall_anchoring", true);
    s.split_forces = get_or<bool>(j, "split_forces", true);
    s.seed = get_or<std::uint64_t>(j, "seed", 1);
    s.validate();
    return s;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
    mean = sd = std::nan("");
    if (v.empty()) return;
    mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) return;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    sd = std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::uint64_t trial_seed(const ExperimentConfig& cfg, Index trial) {
    return derive_seed(cfg.seed, kTrialStream + static_cast<std::uint64_t>(trial));
}

}  // namespace

void apply_override(Json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw InputError("override '" + assignment + "': expected key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(raw);
    } catch (const Json::exception&) {
        value = raw;
    }
    Json* node = &doc;
    std::stringstream ks(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ks, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->is_object() && !node->is_null()) throw InputError("override '" + key + "': path crosses a non-object");
        node = &(*node)[parts[i]];
    }
    (*node)[parts.back()] = std::move(value);
}

ExperimentConfig ExperimentConfig::from_json(const Json& j, const fs::path& base_dir) {
    check_keys(j, {"model", "generator", "schedule", "noise_variance", "t_settle", "settle_fraction",
                   "sweep", "steady_samples", "trials", "seed", "threads", "output_dir", "estimator",
                   "initial_state", "simulation", "nls", "stage2", "description"},
               "config");
    ExperimentConfig c;
    c.source = j;
    c.base_dir = base_dir;
    if (!j.contains("model")) throw InputError("config: missing key 'model'");
    c.model = j.at("model");
    if (!j.contains("generator")) throw InputError("config: missing key 'generator'");
    c.generator = io::generator_from_json(j.at("generator"));

    if (j.contains("schedule")) {
        const Json& s = j.at("schedule");
        check_keys(s, {"interval_min", "interval_max"}, "schedule");
        c.interval_min = get_or<double>(s, "interval_min", c.interval_min);
        c.interval_max = get_or<double>(s, "interval_max", c.interval_max);
    }
    if (!(c.interval_min > 0.0) || c.interval_max < c.interval_min)
        throw InputError("schedule: need 0 < interval_min <= interval_max");

    c.noise_variance = get_or<double>(j, "noise_variance", 0.0);
    if (c.noise_variance < 0.0) throw InputError("config: noise_variance must be >= 0");
    if (j.contains("t_settle") && !j.at("t_settle").is_null()) {
        c.t_settle = get_or<double>(j, "t_settle", 0.0);
        if (*c.t_settle < 0.0) throw InputError("config: t_settle must be >= 0");
    }
    c.settle_fraction = get_or<double>(j, "settle_fraction", c.settle_fraction);
    if (!(c.settle_fraction > 0.0 && c.settle_fraction < 1.0))
        throw InputError("config: settle_fraction must lie in (0, 1)");

    c.sweep = get_or<std::vector<Index>>(j, "sweep", {});
    for (std::size_t i = 0; i < c.sweep.size(); ++i) {
        if (c.sweep[i] < 1) throw InputError("config: sweep entries must be positive");
        if (i && c.sweep[i] <= c.sweep[i - 1]) throw InputError("config: sweep must be strictly ascending");
    }
    c.steady_samples = get_or<Index>(j, "steady_samples", c.sweep.empty() ? 0 : c.sweep.back());
    if (c.steady_samples < 1) throw InputError("config: steady_samples (or a sweep) is required");
    c.trials = get_or<Index>(j, "trials", 1);
    if (c.trials < 1) throw InputError("config: trials must be >= 1");
    c.seed = get_or<std::uint64_t>(j, "seed", 1);
    c.threads = get_or<unsigned>(j, "threads", 0);
    c.output_dir = get_or<std::string>(j, "output_dir", "out");

    const auto est = get_or<std::string>(j, "estimator", "batch");
    if (est == "batch") c.estimator = Estimator::Batch;
    else if (est == "rls") c.estimator = Estimator::Rls;
    else throw InputError("config: estimator must be 'batch' or 'rls'");
    const auto init = get_or<std::string>(j, "initial_state", "zero");
    if (init == "zero") c.initial_state = InitialState::Zero;
    else if (init == "steady") c.initial_state = InitialState::Steady;
    else throw InputError("config: initial_state must be 'zero' or 'steady'");
    const auto sim = get_or<std::string>(j, "simulation", "full");
    if (sim == "full") c.simulation = SimulationMode::Full;
    else if (sim == "steady") c.simulation = SimulationMode::SteadyOnly;
    else throw InputError("config: simulation must be 'full' or 'steady'");

    if (j.contains("nls")) {
        const Json& n = j.at("nls");
        check_keys(n, {"enabled", "levels", "inits", "max_iterations", "select"}, "nls");
        c.nls.enabled = get_or<bool>(n, "enabled", true);
        c.nls.levels = get_or<std::vector<double>>(n, "levels", c.nls.levels);
        c.nls.inits = get_or<Index>(n, "inits", c.nls.inits);
        c.nls.max_iterations = get_or<Index>(n, "max_iterations", c.nls.max_iterations);
        const auto sel = get_or<std::string>(n, "select", "error");
        if (sel != "error" && sel != "cost") throw InputError("nls.select must be 'error' or 'cost'");
        c.nls.select_by_error = sel == "error";
        if (c.nls.inits < 1) throw InputError("nls.inits must be >= 1");
        for (double l : c.nls.levels)
            if (!(l >= 0.0)) throw InputError("nls.levels must be nonnegative");
    }
    if (j.contains("stage2")) {
        const Json& s = j.at("stage2");
        check_keys(s, {"svd_rank_tol", "ls_rank_tol", "scales"}, "stage2");
        c.stage2.svd_rank_tol = get_or<double>(s, "svd_rank_tol", c.stage2.svd_rank_tol);
        c.stage2.ls_rank_tol = get_or<double>(s, "ls_rank_tol", c.stage2.ls_rank_tol);
        if (s.contains("scales")) {
            const Json& g = s.at("scales");
            check_keys(g, {"dynamics", "internal", "output"}, "stage2.scales");
            c.stage2.scales.dynamics = get_or<double>(g, "dynamics", 1.0);
            c.stage2.scales.internal = get_or<double>(g, "internal", 1.0);
            c.stage2.scales.output = get_or<double>(g, "output", 1.0);
        }
    }
    if (c.model.is_object() && c.model.contains("file")) {
        fs::path f = c.model.at("file").get<std::string>();
        if (f.is_relative()) f = base_dir / f;
        if (!fs::exists(f)) throw InputError("config: model file not found: " + f.string());
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path, const std::vector<std::string>& overrides) {
    Json doc = io::read_json_file(path);
    for (const auto& o : overrides) apply_override(doc, o);
    return from_json(doc, path.parent_path());
}

Problem build_problem(const ExperimentConfig& cfg) {
    Problem p;
    const Json& m = cfg.model;
    if (m.is_object() && m.contains("chain")) {
        const ChainModel chain = build_chain(chain_from_json(m.at("chain")));
        p.subsystems = chain.subsystems;
        p.nds = chain.assemble();
        p.theta_true = chain.theta_true;
    } else {
        Json doc = m;
        if (m.is_object() && m.contains("file")) {
            fs::path f = m.at("file").get<std::string>();
            if (f.is_relative()) f = cfg.base_dir / f;
            doc = io::read_json_file(f);
        }
        p.nds = io::model_from_json(doc);
        p.subsystems = p.nds.subsystems;
        p.theta_true = p.nds.topology.theta;
    }
    p.gen = cfg.generator;
    p.gen.validate();
    if (p.gen.Pi.rows() != p.nds.mu())
        throw DimensionError("generator Pi has " + std::to_string(p.gen.Pi.rows()) +
                             " rows but the model has " + std::to_string(p.nds.mu()) + " external inputs");
    p.spectrum = analyze_generator(p.gen);
    p.coeffs = coefficients(p.gen, p.spectrum);

    RegularityOptions ro;
    ro.settle_fraction = cfg.settle_fraction;
    ro.settling_override = cfg.t_settle;
    p.diagnostics = check_regularity(p.nds, ro);
    if (!p.diagnostics.wellposed) throw WellPosednessError("model is not well-posed: I - Dzv Phi is singular");
    if (!p.diagnostics.regular_pencil) throw AssumptionViolation("pencil (Ebar, A_theta) is singular");
    if (!p.diagnostics.stable)
        throw AssumptionViolation("model is not asymptotically stable; steady-state identification needs a stable network");
    p.t_settle = *p.diagnostics.settling_bound;
    p.eta_true = oracle_eta(p.nds, p.spectrum);

    for (Index k = 0; k < static_cast<Index>(p.nds.subsystems.size()); ++k)
        if (p.nds.layout.output_size(k) > 0)
            p.schedule.windows.push_back({k, 0.0, 0.0, cfg.interval_min, cfg.interval_max});
    if (p.schedule.windows.empty()) throw InputError("model has no external outputs");
    return p;
}

SampleDataset generate_dataset(const Problem& p, const ExperimentConfig& cfg, std::uint64_t seed,
                               Index steady_samples) {
    auto schedule = make_schedule_until(p.schedule, p.t_settle, steady_samples, seed);
    if (cfg.simulation == SimulationMode::SteadyOnly)
        std::erase_if(schedule, [&](const ScheduleEntry& e) { return e.t < p.t_settle; });
    Vector x0 = Vector::Zero(p.nds.mx());
    if (cfg.initial_state == InitialState::Steady) x0 = solve_sylvester(p.nds, p.gen).X_top() * p.gen.xi0;
    MeasureOptions mo;
    mo.mode = cfg.simulation;
    mo.t_settle = p.t_settle;
    auto ds = measure(p.nds, p.gen, x0, schedule, std::sqrt(cfg.noise_variance), seed, mo);
    ds.t_settle = p.t_settle;
    ds.noise_variance = cfg.noise_variance;
    return ds;
}

namespace {

SweepPoint finish_point(const Problem& p, const ExperimentConfig& cfg, Index samples,
                        const InterpolationVector& eta, bool stage1_ok, Stage2Report* keep) {
    SweepPoint sp;
    sp.samples = samples;
    sp.eta_hat = eta.eta_bar;
    auto rep = run_stage2(p.nds, p.gen, p.spectrum, eta, cfg.stage2);
    sp.theta_hat = rep.theta_hat;
    sp.e_eta = relative_error(eta.eta_bar, p.eta_true.eta_bar);
    sp.e_theta = sp.theta_hat.allFinite() ? relative_error(sp.theta_hat, p.theta_true) : std::nan("");
    sp.ok = stage1_ok && rep.gamma_rank_ok && rep.psi_rank_ok;
    if (keep) *keep = std::move(rep);
    return sp;
}

}  // namespace

Identification identify(const Problem& p, const SampleDataset& ds, const ExperimentConfig& cfg) {
    const Index steady = static_cast<Index>(ds.steady_count());
    if (steady == 0) throw InsufficientData("dataset has no samples at or after the settling bound");
    std::vector<Index> points;
    for (Index n : cfg.sweep)
        if (n <= steady) points.push_back(n);
    if (points.empty()) points.push_back(steady);

    Identification out;
    if (cfg.estimator == Estimator::Batch) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            BatchOptions bo;
            bo.max_samples = static_cast<std::size_t>(points[i]);
            const auto be = estimate_batch(ds, p.spectrum, p.coeffs, p.nds.layout, bo);
            const bool last = i + 1 == points.size();
            out.sweep.push_back(finish_point(p, cfg, points[i], be.eta, be.rank_ok, last ? &out.report : nullptr));
        }
    } else {
        auto st = rls_init(p.nds.my(), p.spectrum.m_r(), p.spectrum.m_c(), ds.t_settle);
        std::size_t next = 0;
        Index used = 0;
        for (std::size_t r = ds.first_steady_index(); r < ds.records.size() && next < points.size(); ++r) {
            rls_update(st, ds.records[r], p.spectrum, p.coeffs, p.nds.layout);
            if (++used == points[next]) {
                const bool last = next + 1 == points.size();
                out.sweep.push_back(finish_point(p, cfg, used, st.estimate, true, last ? &out.report : nullptr));
                ++next;
            }
        }
    }
    return out;
}

std::vector<NlsLevel> compare_nls(const Problem& p, const SampleDataset& ds, const ExperimentConfig& cfg) {
    std::vector<NlsLevel> out(cfg.nls.levels.size());
    parallel_for(static_cast<Index>(out.size()), cfg.threads, [&](Index li) {
        const auto l = static_cast<std::size_t>(li);
        auto rng = make_rng(cfg.seed, kInitStream + l);
        NlsOptions no;
        no.max_iterations = cfg.nls.max_iterations;
        no.theta_true = p.theta_true;
        NlsLevel best;
        best.level = cfg.nls.levels[l];
        bool have = false;
        for (Index k = 0; k < cfg.nls.inits; ++k) {
            const Vector init = perturb_theta(p.theta_true, cfg.nls.levels[l], rng);
            const auto r = nls_baseline(ds, p.nds, p.gen, init, no);
            const double e = relative_error(r.theta, p.theta_true);
            const bool better = !have || (cfg.nls.select_by_error ? e < best.nls_e_theta : r.final_cost < best.nls_cost);
            if (better) {
                best.nls_e_theta = e;
                best.nls_cost = r.final_cost;
                best.nls_iterations = r.iterations;
                best.nls_theta = r.theta;
                have = true;
            }
        }
        out[l] = best;
    });
    return out;
}

MonteCarloResult montecarlo(const Problem& p, const ExperimentConfig& cfg) {
    if (cfg.trials < 2) throw InputError("montecarlo: trials must be >= 2");
    struct Trial {
        std::vector<SweepPoint> sweep;
        std::string error;
    };
    std::vector<Trial> trials(static_cast<std::size_t>(cfg.trials));
    parallel_for(cfg.trials, cfg.threads, [&](Index t) {
        auto& slot = trials[static_cast<std::size_t>(t)];
        try {
            const auto ds = generate_dataset(p, cfg, trial_seed(cfg, t), cfg.steady_samples);
            slot.sweep = identify(p, ds, cfg).sweep;
        } catch (const std::exception& e) {
            slot.error = e.what();
        }
    });

    MonteCarloResult res;
    std::vector<Index> points = cfg.sweep;
    if (points.empty()) points.push_back(cfg.steady_samples);
    const Index mt = p.theta_true.size();
    for (Index n : points) {
        MonteCarloPoint mp;
        mp.samples = n;
        std::vector<double> ee, et;
        std::vector<Vector> thetas;
        for (const auto& tr : trials) {
            const auto it = std::find_if(tr.sweep.begin(), tr.sweep.end(),
                                         [n](const SweepPoint& s) { return s.samples == n; });
            if (it == tr.sweep.end() || !it->ok || !it->theta_hat.allFinite()) {
                ++mp.failures;
                continue;
            }
            ee.push_back(it->e_eta);
            et.push_back(it->e_theta);
            thetas.push_back(it->theta_hat);
        }
        mp.completed = static_cast<Index>(thetas.size());
        mp.median_e_eta = median(ee);
        mp.median_e_theta = median(et);
        mean_std(ee, mp.mean_e_eta, mp.std_e_eta);
        mean_std(et, mp.mean_e_theta, mp.std_e_theta);
        mp.mean_theta = Vector::Constant(mt, std::nan(""));
        mp.std_error_theta = Vector::Constant(mt, std::nan(""));
        for (Index i = 0; i < mt; ++i) {
            std::vector<double> c;
            for (const auto& th : thetas) c.push_back(th(i));
            double mean = 0.0, sd = 0.0;
            mean_std(c, mean, sd);
            mp.mean_theta(i) = mean;
            mp.std_error_theta(i) = sd / std::sqrt(static_cast<double>(c.size()));
        }
        res.points.push_back(std::move(mp));
    }
    for (std::size_t t = 0; t < trials.size(); ++t)
        if (!trials[t].error.empty()) res.trial_errors.push_back("trial " + std::to_string(t) + ": " + trials[t].error);
    return res;
}

void parallel_for(Index n, unsigned threads, const std::function<void(Index)>& body) {
    if (n <= 0) return;
    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<Index>(workers, n));
    if (workers == 1) {
        for (Index i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (Index i; (i = next.fetch_add(1)) < n;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::string sweep_to_csv(const std::vector<SweepPoint>& sweep) {
    std::string s = std::string(kSweepHeader) + "\n";
    for (const auto& p : sweep)
        s += std::to_string(p.samples) + "," + io::format_double(p.e_eta) + "," + io::format_double(p.e_theta) + "\n";
    return s;
}

std::string nls_to_csv(const std::vector<NlsLevel>& levels, double two_stage_e_theta) {
    std::string s = std::string(kNlsHeader) + "\n";
    for (const auto& l : levels)
        s += io::format_double(l.level) + "," + io::format_double(l.nls_e_theta) + "," +
             io::format_double(two_stage_e_theta) + "," + std::to_string(l.nls_iterations) + "\n";
    return s;
}

std::string montecarlo_to_csv(const MonteCarloResult& r) {
    std::string s = std::string(kMonteCarloHeader) + "\n";
    for (const auto& p : r.points) {
        s += std::to_string(p.samples) + "," + std::to_string(p.completed) + "," + std::to_string(p.failures);
        for (double v : {p.median_e_eta, p.mean_e_eta, p.std_e_eta, p.median_e_theta, p.mean_e_theta, p.std_e_theta})
            s += "," + io::format_double(v);
        s += "\n";
    }
    return s;
}

std::string bias_to_csv(const MonteCarloResult& r, const Vector& theta_true) {
    std::string s = std::string(kBiasHeader) + "\n";
    for (const auto& p : r.points)
        for (Index i = 0; i < theta_true.size(); ++i)
            s += std::to_string(p.samples) + "," + std::to_string(i) + "," + io::format_double(theta_true(i)) +
                 "," + io::format_double(p.mean_theta(i)) + "," +
                 io::format_double(p.mean_theta(i) - theta_true(i)) + "," +
                 io::format_double(p.std_error_theta(i)) + "\n";
    return s;
}

// ---- commands ---------------------------------------------------------------

namespace {

fs::path dataset_path(const ExperimentConfig& cfg, const CommandOptions& opts) {
    return opts.dataset ? *opts.dataset : cfg.output_dir / "dataset.csv";
}

Json dataset_metadata(const ExperimentConfig& cfg, const Problem& p, const SampleDataset& ds) {
    Json m = {{"config_hash", cfg.hash()},
              {"generator", io::generator_to_json(p.gen)},
              {"noise_variance", ds.noise_variance},
              {"t_settle", ds.t_settle},
              {"rng_seed", ds.rng_seed},
              {"interval_min", cfg.interval_min},
              {"interval_max", cfg.interval_max},
              {"steady_samples", static_cast<Index>(ds.steady_count())},
              {"records", ds.records.size()},
              {"simulation", cfg.simulation == SimulationMode::Full ? "full" : "steady"},
              {"initial_state", cfg.initial_state == InitialState::Zero ? "zero" : "steady"},
              {"theta_true", io::vector_to_json(p.theta_true)},
              {"dims", {{"subsystems", p.nds.subsystems.size()}, {"mx", p.nds.mx()}, {"mv", p.nds.mv()},
                        {"mu", p.nds.mu()}, {"mz", p.nds.mz()}, {"my", p.nds.my()}}}};
    m["transient_bound"] = ds.transient_bound ? Json(*ds.transient_bound) : Json(nullptr);
    return m;
}

SampleDataset load_dataset(const ExperimentConfig& cfg, const Problem& p, const fs::path& csv) {
    std::ifstream in(csv, std::ios::binary);
    if (!in) throw InputError("cannot open dataset " + csv.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto ds = io::dataset_from_csv(buf.str(), csv.string());
    const auto meta_path = io::metadata_path(csv);
    const Json meta = io::read_json_file(meta_path);
    const auto gen = io::generator_from_json(meta.at("generator"));
    if (gen.Xi != p.gen.Xi || gen.Pi != p.gen.Pi || gen.xi0 != p.gen.xi0)
        throw InputError(meta_path.string() + ": generator differs from the config");
    ds.t_settle = meta.at("t_settle").get<double>();
    ds.noise_variance = meta.at("noise_variance").get<double>();
    ds.rng_seed = meta.value("rng_seed", std::uint64_t{0});
    (void)cfg;
    for (const auto& r : ds.records) {
        if (r.subsystem < 0 || r.subsystem >= static_cast<Index>(p.nds.subsystems.size()) ||
            r.y.size() != p.nds.layout.output_size(r.subsystem))
            throw InputError(csv.string() + ": record at t=" + io::format_double(r.t) +
                             " does not match the model's output layout");
    }
    return ds;
}

int check_identifiable(const Problem& p, const ExperimentConfig& cfg, bool force, std::string& log) {
    const auto id = identifiability_report(p.nds, p.gen, cfg.stage2);
    if (id.all_ok()) return kOk;
    log += "identifiability check failed: " + io::identifiability_to_json(id).dump() + "\n";
    if (force) {
        log += "continuing (--force)\n";
        return kOk;
    }
    return kIdentifiability;
}

}  // namespace

int cmd_generate(const ExperimentConfig& cfg, std::string& log) {
    const Problem p = build_problem(cfg);
    const auto ds = generate_dataset(p, cfg, trial_seed(cfg, 0), cfg.steady_samples);
    const fs::path csv = cfg.output_dir / "dataset.csv";
    io::write_text_file(csv, io::dataset_to_csv(ds));
    io::write_json_file(io::metadata_path(csv), dataset_metadata(cfg, p, ds));
    io::write_json_file(cfg.output_dir / "model.json", io::model_to_json(p.subsystems, p.nds.topology));
    log += "wrote " + csv.string() + " (" + std::to_string(ds.records.size()) + " records, " +
           std::to_string(ds.steady_count()) + " after t_settle=" + io::format_double(ds.t_settle) + ")\n";
    return kOk;
}

int cmd_identify(const ExperimentConfig& cfg, const CommandOptions& opts, std::string& log) {
    const Problem p = build_problem(cfg);
    if (int rc = check_identifiable(p, cfg, opts.force, log)) return rc;
    const auto ds = load_dataset(cfg, p, dataset_path(cfg, opts));
    ExperimentConfig run = cfg;
    run.stage2.force = opts.force;
    const auto id = identify(p, ds, run);
    const auto& last = id.sweep.back();
    Json report = {{"config_hash", cfg.hash()},
                   {"samples", last.samples},
                   {"e_eta", last.e_eta},
                   {"e_theta", std::isfinite(last.e_theta) ? Json(last.e_theta) : Json(nullptr)},
                   {"theta_true", io::vector_to_json(p.theta_true)},
                   {"stage2", io::stage2_report_to_json(id.report)}};
    io::write_json_file(cfg.output_dir / "report.json", report);
    io::write_text_file(cfg.output_dir / "eta_hat.csv", io::vector_to_csv(last.eta_hat));
    InterpolationVector shape = InterpolationVector::zeros(p.nds.my(), p.spectrum.m_r(), p.spectrum.m_c());
    io::write_json_file(cfg.output_dir / "eta_hat.json",
                        {{"config_hash", cfg.hash()}, {"labels", io::eta_labels(shape)},
                         {"values", io::vector_to_json(last.eta_hat)}});
    io::write_text_file(cfg.output_dir / "theta_hat.csv", io::vector_to_csv(last.theta_hat));
    io::write_text_file(cfg.output_dir / "convergence.csv", sweep_to_csv(id.sweep));
    log += "samples=" + std::to_string(last.samples) + " e_eta=" + io::format_double(last.e_eta) +
           " e_theta=" + io::format_double(last.e_theta) + "\n";
    for (const auto& w : id.report.warnings) log += "warning: " + w + "\n";
    if (!last.ok && !opts.force) {
        log += "rank check failed on the data; rerun with --force to keep the estimate\n";
        return kIdentifiability;
    }
    return kOk;
}

int cmd_compare_nls(const ExperimentConfig& cfg, const CommandOptions& opts, std::string& log) {
    if (!cfg.nls.enabled) {
        log += "nls baseline disabled; nothing written\n";
        return kOk;
    }
    const Problem p = build_problem(cfg);
    if (int rc = check_identifiable(p, cfg, opts.force, log)) return rc;
    const auto ds = load_dataset(cfg, p, dataset_path(cfg, opts));
    ExperimentConfig run = cfg;
    run.sweep.clear();
    run.stage2.force = opts.force;
    const double two_stage = identify(p, ds, run).sweep.back().e_theta;
    const auto levels = compare_nls(p, ds, cfg);
    io::write_text_file(cfg.output_dir / "nls_comparison.csv", nls_to_csv(levels, two_stage));
    io::write_json_file(cfg.output_dir / "nls_comparison.json",
                        {{"config_hash", cfg.hash()}, {"two_stage_e_theta", two_stage},
                         {"inits_per_level", cfg.nls.inits},
                         {"select", cfg.nls.select_by_error ? "error" : "cost"}});
    log += "two-stage e_theta=" + io::format_double(two_stage) + "\n";
    for (const auto& l : levels)
        log += "level " + io::format_double(l.level) + ": nls e_theta=" + io::format_double(l.nls_e_theta) + "\n";
    return kOk;
}

int cmd_montecarlo(const ExperimentConfig& cfg, const CommandOptions& opts, std::string& log) {
    const Problem p = build_problem(cfg);
    if (int rc = check_identifiable(p, cfg, opts.force, log)) return rc;
    ExperimentConfig run = cfg;
    run.stage2.force = opts.force;
    const auto r = montecarlo(p, run);
    io::write_text_file(cfg.output_dir / "montecarlo.csv", montecarlo_to_csv(r));
    io::write_text_file(cfg.output_dir / "montecarlo_bias.csv", bias_to_csv(r, p.theta_true));
    io::write_json_file(cfg.output_dir / "montecarlo.json",
                        {{"config_hash", cfg.hash()}, {"trials", cfg.trials},
                         {"theta_true", io::vector_to_json(p.theta_true)}, {"trial_errors", r.trial_errors}});
    for (const auto& pt : r.points)
        log += "samples=" + std::to_string(pt.samples) + " median e_eta=" + io::format_double(pt.median_e_eta) +
               " median e_theta=" + io::format_double(pt.median_e_theta) + " failures=" +
               std::to_string(pt.failures) + "\n";
    for (const auto& e : r.trial_errors) log += e + "\n";
    return kOk;
}

int cmd_diagnose(const ExperimentConfig& cfg, std::string& log) {
    const Problem p = build_problem(cfg);
    const auto id = identifiability_report(p.nds, p.gen, cfg.stage2);
    const auto proj = build_projections(p.nds, cfg.stage2.svd_rank_tol);
    Json out = {{"config_hash", cfg.hash()},
                {"regularity", io::diagnostics_to_json(p.diagnostics)},
                {"identifiability", io::identifiability_to_json(id)},
                {"projection_ranks", {{"M", proj.r_M}, {"N", proj.r_N}, {"Q", proj.r_Q}}},
                {"dims", {{"mx", p.nds.mx()}, {"mv", p.nds.mv()}, {"mu", p.nds.mu()},
                          {"mz", p.nds.mz()}, {"my", p.nds.my()}, {"mtheta", p.theta_true.size()},
                          {"eta_length", p.eta_true.size()}}}};
    log += out.dump(2) + "\n";
    return id.all_ok() ? kOk : kIdentifiability;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
        dynamic_cast<const InsufficientData*>(&e) || dynamic_cast<const PreSettlingSample*>(&e) ||
        dynamic_cast<const Json::exception*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e))
        return kInput;
    if (dynamic_cast<const AssumptionViolation*>(&e)) return kIdentifiability;
    return kNumerical;
}

}  // namespace ndsid
