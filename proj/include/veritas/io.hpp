#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "veritas/core_model.hpp"

namespace veritas::io {

inline constexpr const char* kLogFormat = "veritas-log/1";

// Rounds to 9 significant digits, the precision used for every number we write.
double round_sig9(double x);

// Session logs are JSON lines: a header object, then one object per chunk.
void write_log(std::ostream& out, const SessionLog& log);
SessionLog read_log(std::istream& in);
void write_log(const std::filesystem::path& path, const SessionLog& log);
SessionLog read_log(const std::filesystem::path& path);

// Capacity traces are CSV with a `window_start_s,mbps` header. Reading takes
// the grid for ε and c_max; δ must agree with the row spacing.
void write_trace_csv(std::ostream& out, const CapacityTrace& trace);
CapacityTrace read_trace_csv(std::istream& in, const QuantGrid& grid);
void write_trace_csv(const std::filesystem::path& path, const CapacityTrace& trace);
CapacityTrace read_trace_csv(const std::filesystem::path& path, const QuantGrid& grid);

// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace veritas::io
