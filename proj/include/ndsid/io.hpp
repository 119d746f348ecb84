#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "ndsid/generator.hpp"
#include "ndsid/model.hpp"
#include "ndsid/simulate.hpp"
#include "ndsid/stage1.hpp"
#include "ndsid/stage2.hpp"

namespace ndsid::io {

using Json = nlohmann::json;

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

/// {"rows": r, "cols": c, "data": [[row 0], [row 1], ...]}; an empty matrix keeps its shape.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& context);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& context);

Json subsystem_to_json(const DescriptorSubsystem& s);
DescriptorSubsystem subsystem_from_json(const Json& j, Index index);
Json topology_to_json(const Topology& t);
Topology topology_from_json(const Json& j);

/// Model document: {"subsystems": [...], "topology": {...}}.
Json model_to_json(const std::vector<DescriptorSubsystem>& subsystems, const Topology& topology);
NdsModel model_from_json(const Json& j);

Json generator_to_json(const InputGenerator& gen);
InputGenerator generator_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Header: subsystem,time_s,channel,value (one row per channel, subsystem and channel 0-based).
inline constexpr const char* kDatasetHeader = "subsystem,time_s,channel,value";
std::string dataset_to_csv(const SampleDataset& ds);
/// Records are rebuilt from consecutive rows sharing (subsystem, time_s).
SampleDataset dataset_from_csv(const std::string& text, const std::string& context = "dataset");

/// Sidecar next to a dataset CSV: <stem>.meta.json.
std::filesystem::path metadata_path(const std::filesystem::path& csv_path);

inline constexpr const char* kEstimateHeader = "index,value";
std::string vector_to_csv(const Vector& v);

/// Labels of eta_bar entries: [{"index", "mode", "kind": "real"|"re"|"im", "channel"}].
Json eta_labels(const InterpolationVector& eta);

Json stage2_report_to_json(const Stage2Report& r);
Json identifiability_to_json(const IdentifiabilityReport& r);
Json diagnostics_to_json(const Diagnostics& d);

/// FNV-1a 64 of the compact dump, as 16 hex digits.
std::string hash_json(const Json& j);

}  // namespace ndsid::io
