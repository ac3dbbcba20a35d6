#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "hmpc/analysis.hpp"
#include "hmpc/design.hpp"
#include "hmpc/lti_model.hpp"
#include "hmpc/thermal.hpp"

namespace hmpc {

using Json = nlohmann::ordered_json;

/// Matrices are arrays of rows; doubles are written with round-trip precision.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json model_to_json(const InterconnectedModel& model);
/// Rebuilds the subsystems and coupling blocks and reassembles. Throws FormatError.
InterconnectedModel model_from_json(const Json& j);

Json building_to_json(const BuildingConfig& cfg);
/// Throws FormatError on malformed input, ConfigInvalid on invalid values.
BuildingConfig building_from_json(const Json& j);

Json run_to_json(const RunConfig& cfg);
RunConfig run_from_json(const Json& j);

Json report_to_json(const ValidationReport& rep);
Json certificate_to_json(const CertificateReport& rep);
Json allocation_to_json(const RadiusAllocation& alloc);
Json design_to_json(const DesignArtifacts& design);

Json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const Json& j);

BuildingConfig load_building_config(const std::filesystem::path& path);
RunConfig load_run_config(const std::filesystem::path& path);

/// FNV-1a over the canonical dump, printed as 16 hex digits.
std::string config_hash(const Json& j);

}  // namespace hmpc
