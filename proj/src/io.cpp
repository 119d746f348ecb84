#include "ndsid/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ndsid/errors.hpp"

namespace ndsid::io {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace {

double parse_double(const std::string& s, const std::string& context) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto r = std::from_chars(first, last, v);
    if (r.ec != std::errc() || r.ptr != last)
        throw InputError(context + ": cannot parse number '" + s + "'");
    return v;
}

long long parse_int(const std::string& s, const std::string& context) {
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw InputError(context + ": cannot parse integer '" + s + "'");
    return v;
}

const Json& require(const Json& j, const char* key, const std::string& context) {
    if (!j.is_object() || !j.contains(key))
        throw InputError(context + ": missing key '" + key + "'");
    return j.at(key);
}

double number(const Json& j, const std::string& context) {
    if (!j.is_number()) throw InputError(context + ": expected a number");
    return j.get<double>();
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
    Json data = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        data.push_back(std::move(row));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j, const std::string& context) {
    if (j.is_array()) {
        // bare nested array, convenient for hand-written configs
        const Index r = static_cast<Index>(j.size());
        const Index c = r ? static_cast<Index>(j[0].size()) : 0;
        Matrix m(r, c);
        for (Index i = 0; i < r; ++i) {
            if (!j[i].is_array() || static_cast<Index>(j[i].size()) != c)
                throw InputError(context + ": ragged matrix rows");
            for (Index k = 0; k < c; ++k) m(i, k) = number(j[i][k], context);
        }
        return m;
    }
    const Index r = require(j, "rows", context).get<Index>();
    const Index c = require(j, "cols", context).get<Index>();
    const Json& data = require(j, "data", context);
    if (r < 0 || c < 0 || !data.is_array() || static_cast<Index>(data.size()) != r)
        throw InputError(context + ": matrix data does not match rows");
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i) {
        if (!data[i].is_array() || static_cast<Index>(data[i].size()) != c)
            throw InputError(context + ": matrix data does not match cols");
        for (Index k = 0; k < c; ++k) m(i, k) = number(data[i][k], context);
    }
    return m;
}

Json vector_to_json(const Vector& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vector vector_from_json(const Json& j, const std::string& context) {
    if (!j.is_array()) throw InputError(context + ": expected an array");
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) v(i) = number(j[i], context);
    return v;
}

namespace {
constexpr const char* kBlockNames[] = {"E", "Axx", "Bxv", "Bxu", "Czx", "Dzv", "Dzu", "Cyx", "Dyv", "Dyu"};

template <class S>
auto blocks(S& s) {
    return std::array{&s.E, &s.Axx, &s.Bxv, &s.Bxu, &s.Czx, &s.Dzv, &s.Dzu, &s.Cyx, &s.Dyv, &s.Dyu};
}
}  // namespace

Json subsystem_to_json(const DescriptorSubsystem& s) {
    Json j = Json::object();
    const auto b = blocks(s);
    for (std::size_t i = 0; i < b.size(); ++i) j[kBlockNames[i]] = matrix_to_json(*b[i]);
    return j;
}

DescriptorSubsystem subsystem_from_json(const Json& j, Index index) {
    const std::string ctx = "subsystem " + std::to_string(index);
    DescriptorSubsystem s;
    const auto b = blocks(s);
    for (std::size_t i = 0; i < b.size(); ++i)
        *b[i] = matrix_from_json(require(j, kBlockNames[i], ctx), ctx + "." + kBlockNames[i]);
    s.validate(index);
    return s;
}

Json topology_to_json(const Topology& t) {
    Json basis = Json::array();
    for (const auto& b : t.basis) basis.push_back(matrix_to_json(b));
    Json bounds = Json::array();
    for (const auto& b : t.bounds) bounds.push_back({b.lo, b.hi});
    return {{"phi0", matrix_to_json(t.phi0)},
            {"basis", std::move(basis)},
            {"theta", vector_to_json(t.theta)},
            {"bounds", std::move(bounds)}};
}

Topology topology_from_json(const Json& j) {
    const std::string ctx = "topology";
    Topology t;
    t.phi0 = matrix_from_json(require(j, "phi0", ctx), ctx + ".phi0");
    for (const auto& b : require(j, "basis", ctx)) t.basis.push_back(matrix_from_json(b, ctx + ".basis"));
    t.theta = vector_from_json(require(j, "theta", ctx), ctx + ".theta");
    if (j.contains("bounds")) {
        for (const auto& b : j.at("bounds")) {
            if (!b.is_array() || b.size() != 2) throw InputError(ctx + ".bounds: expected [lo, hi]");
            t.bounds.push_back({number(b[0], ctx), number(b[1], ctx)});
        }
    }
    return t;
}

Json model_to_json(const std::vector<DescriptorSubsystem>& subsystems, const Topology& topology) {
    Json subs = Json::array();
    for (const auto& s : subsystems) subs.push_back(subsystem_to_json(s));
    return {{"subsystems", std::move(subs)}, {"topology", topology_to_json(topology)}};
}

NdsModel model_from_json(const Json& j) {
    std::vector<DescriptorSubsystem> subs;
    const Json& arr = require(j, "subsystems", "model");
    if (!arr.is_array()) throw InputError("model.subsystems: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i)
        subs.push_back(subsystem_from_json(arr[i], static_cast<Index>(i)));
    return assemble_nds(subs, topology_from_json(require(j, "topology", "model")));
}

Json generator_to_json(const InputGenerator& gen) {
    return {{"Xi", matrix_to_json(gen.Xi)}, {"Pi", matrix_to_json(gen.Pi)}, {"xi0", vector_to_json(gen.xi0)}};
}

InputGenerator generator_from_json(const Json& j) {
    InputGenerator g;
    g.Xi = matrix_from_json(require(j, "Xi", "generator"), "generator.Xi");
    g.Pi = matrix_from_json(require(j, "Pi", "generator"), "generator.Pi");
    g.xi0 = vector_from_json(require(j, "xi0", "generator"), "generator.xi0");
    g.validate();
    return g;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    if (!out) throw InputError("write failed: " + path.string());
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

std::string dataset_to_csv(const SampleDataset& ds) {
    std::string out = std::string(kDatasetHeader) + "\n";
    for (const auto& r : ds.records) {
        const std::string prefix = std::to_string(r.subsystem) + "," + format_double(r.t) + ",";
        for (Index c = 0; c < r.y.size(); ++c)
            out += prefix + std::to_string(c) + "," + format_double(r.y(c)) + "\n";
    }
    return out;
}

SampleDataset dataset_from_csv(const std::string& text, const std::string& context) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kDatasetHeader)
        throw InputError(context + ": expected header '" + kDatasetHeader + "'");
    SampleDataset ds;
    std::vector<double> values;
    Index sub = -1;
    double t = 0.0;
    auto flush = [&] {
        if (sub < 0) return;
        SampleRecord r{sub, t, Vector(static_cast<Index>(values.size()))};
        for (std::size_t i = 0; i < values.size(); ++i) r.y(static_cast<Index>(i)) = values[i];
        ds.records.push_back(std::move(r));
        values.clear();
    };
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = context + " line " + std::to_string(lineno);
        std::string f[4];
        std::istringstream ls(line);
        for (int i = 0; i < 4; ++i)
            if (!std::getline(ls, f[i], ',')) throw InputError(where + ": expected 4 fields");
        const Index s = static_cast<Index>(parse_int(f[0], where));
        const double tt = parse_double(f[1], where);
        const auto ch = static_cast<std::size_t>(parse_int(f[2], where));
        const double v = parse_double(f[3], where);
        if (s != sub || tt != t || ch == 0) {
            flush();
            sub = s;
            t = tt;
        }
        if (ch != values.size()) throw InputError(where + ": channels must be listed in order from 0");
        values.push_back(v);
    }
    flush();
    for (std::size_t i = 1; i < ds.records.size(); ++i)
        if (ds.records[i].t < ds.records[i - 1].t)
            throw InputError(context + ": records must be in nondecreasing time order");
    return ds;
}

std::filesystem::path metadata_path(const std::filesystem::path& csv_path) {
    auto p = csv_path;
    p.replace_extension(".meta.json");
    return p;
}

std::string vector_to_csv(const Vector& v) {
    std::string out = std::string(kEstimateHeader) + "\n";
    for (Index i = 0; i < v.size(); ++i) out += std::to_string(i) + "," + format_double(v(i)) + "\n";
    return out;
}

Json eta_labels(const InterpolationVector& eta) {
    Json out = Json::array();
    Index idx = 0;
    for (Index i = 0; i < eta.m_r; ++i)
        for (Index c = 0; c < eta.my; ++c)
            out.push_back({{"index", idx++}, {"mode", i}, {"kind", "real"}, {"channel", c}});
    for (Index i = 0; i < eta.m_c; ++i)
        for (const char* part : {"re", "im"})
            for (Index c = 0; c < eta.my; ++c)
                out.push_back({{"index", idx++}, {"mode", eta.m_r + i}, {"kind", part}, {"channel", c}});
    return out;
}

Json stage2_report_to_json(const Stage2Report& r) {
    Json theta = Json::array();
    for (Index i = 0; i < r.theta_hat.size(); ++i) {
        if (std::isfinite(r.theta_hat(i)))
            theta.push_back(r.theta_hat(i));
        else
            theta.push_back(nullptr);
    }
    return {{"theta_hat", std::move(theta)},
            {"Yss_hat", matrix_to_json(r.Yss_hat)},
            {"X_top", matrix_to_json(r.X_top)},
            {"X_btm", matrix_to_json(r.X_btm)},
            {"gamma_rank_ok", r.gamma_rank_ok},
            {"psi_rank_ok", r.psi_rank_ok},
            {"gamma_cond", r.gamma_cond},
            {"psi_cond", r.psi_cond},
            {"gamma_residual", r.gamma_residual},
            {"psi_residual", r.psi_residual},
            {"gamma_shape", {r.gamma_rows, r.gamma_cols}},
            {"projection_ranks", {{"M", r.r_M}, {"N", r.r_N}, {"Q", r.r_Q}}},
            {"yss_imag_residue", r.yss_imag_residue},
            {"warnings", r.warnings}};
}

Json identifiability_to_json(const IdentifiabilityReport& r) {
    return {{"stage1_pe_hint", r.stage1_pe_hint},
            {"gamma_rank_ok", r.gamma_rank_ok},
            {"gamma_cond", r.gamma_cond},
            {"psi_rank_at_truth", r.psi_rank_at_truth},
            {"psi_cond", r.psi_cond},
            {"all_ok", r.all_ok()}};
}

Json diagnostics_to_json(const Diagnostics& d) {
    Json eig = Json::array();
    for (const auto& e : d.finite_eigenvalues) eig.push_back({e.real(), e.imag()});
    Json j = {{"wellposed", d.wellposed},
              {"regular_pencil", d.regular_pencil},
              {"stable", d.stable},
              {"finite_eigenvalues", std::move(eig)}};
    j["settling_bound"] = d.settling_bound ? Json(*d.settling_bound) : Json(nullptr);
    return j;
}

std::string hash_json(const Json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace ndsid::io
