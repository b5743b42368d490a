#pragma once

#include <filesystem>
#include <stdexcept>

#include "fdw/cube/cube.hpp"

namespace fdw::cube {

struct CubeIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VersionMismatchError : CubeIoError {
  using CubeIoError::CubeIoError;
};
struct TruncatedPayloadError : CubeIoError {
  using CubeIoError::CubeIoError;
};
struct ChecksumError : CubeIoError {
  using CubeIoError::CubeIoError;
};

/// On-disk cube format: a directory with header.json plus little-endian
/// binary payloads chan_<name>.f32, clc.u16, susceptible.u8, burn.u8.
/// header.json records a CRC-64 per payload file.
void save_cube(const DataCube& cube, const std::filesystem::path& dir);
DataCube load_cube(const std::filesystem::path& dir);

}  // namespace fdw::cube
