#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hmpc/closed_loop.hpp"
#include "hmpc/model_io.hpp"

namespace hmpc {

inline constexpr const char* kFastHeader = "# hmpc-trace fast v1";
inline constexpr const char* kSlowHeader = "# hmpc-trace slow v1";
inline constexpr const char* kSoakHeader = "# hmpc-trace hl-soak v1";

/// `override` if given, else $HMPC_OUT_DIR, else ./hmpc_out.
std::filesystem::path output_dir(const std::optional<std::string>& override = std::nullopt);

/// Writes fast.csv, slow.csv, certificate.json, design.json, model.json and
/// meta.json. Everything except the wall-clock fields of meta.json is a
/// function of the design and the trace only.
void write_trace(const std::filesystem::path& dir, const TraceArchive& trace, const DesignArtifacts& design,
                 const Json& config, double wall_seconds);

void write_soak(const std::filesystem::path& dir, const std::vector<SoakRecord>& soak);

/// Numeric CSV with a version line and a header row.
struct CsvTable {
  std::string version;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Index of the column, throws FormatError if absent.
  int column(const std::string& name) const;
  /// Columns name_0, name_1, ... of one row.
  Vector block(std::size_t row, const std::string& prefix) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Re-checks a written archive against its model and certificate:
/// transitions, input limits, correction budgets, the disturbance bound,
/// the tube, nominal convergence, entry into Z and the state envelope.
ValidationReport verify_trace(const std::filesystem::path& dir);

}  // namespace hmpc
