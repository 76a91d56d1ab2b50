#pragma once

// Record files: a short "key: value" text header terminated by a "data:" line,
// followed by little-endian IEEE-754 doubles.

#include <filesystem>
#include <string>
#include <string_view>

#include "cvdelay/synth.hpp"

namespace cvdelay {

inline constexpr int kRecordFormatVersion = 1;

void write_record(const std::filesystem::path& path, const TimeSeriesRecord& rec);
TimeSeriesRecord read_record(const std::filesystem::path& path);
// time_s,sample with a one-line header.
void write_record_csv(const std::filesystem::path& path, const TimeSeriesRecord& rec);

// Writes to a sibling temporary file, then renames over the target.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace cvdelay
