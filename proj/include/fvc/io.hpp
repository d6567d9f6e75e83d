#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fvc/raster.hpp"

namespace fvc {

// Middlebury .flo: "PIEH", int32 LE width, int32 LE height, row-major
// interleaved (u,v) float32. Invalid pixels carry the 1e9 sentinel.
void write_flo(const FlowField& flow, const std::filesystem::path& path);
FlowField read_flo(const std::filesystem::path& path);

// PNG (8-bit gray/RGB), binary PGM (P5) and PPM (P6), chosen by extension.
void write_frame(const Frame& frame, const std::filesystem::path& path);
Frame read_frame(const std::filesystem::path& path);

// Masks as PGM, 0/255.
void write_mask(const ValidityMask& mask, const std::filesystem::path& path);
ValidityMask read_mask(const std::filesystem::path& path);

struct TimestampRecord {
  std::string timestamp_id;
  std::string source_id;
  std::vector<std::string> frame_paths;  // relative to the manifest directory
  std::vector<std::string> ref_paths;    // undistorted counterparts
  std::string flow_path;
  std::string params_path;
};

struct Manifest {
  std::string dataset_id;
  std::string version = "1";
  std::string generator_config;  // SamplerConfig echo, JSON text
  std::vector<TimestampRecord> timestamps;
};

void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& text);

}  // namespace fvc
