// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "acnet/matrix.hpp"
#include "acnet/model.hpp"

namespace acnet {

/// Binary matrix container: magic "ACNM", u32 version, u32 dtype tag
/// (1 = little-endian f64), u32 rows, u32 cols, then row-major payload.
/// Bit-exact and language neutral.
void write_matrix_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_file(const std::filesystem::path& path);

/// Write-temp-then-rename; a killed process never leaves a readable but
/// truncated file at `path`.
void atomic_write_bytes(const std::filesystem::path& path, const std::string& bytes);
std::string read_bytes(const std::filesystem::path& path);

/// Checkpoint container: magic "ACNC", u32 version, JSON model config,
/// then every named parameter matrix in registration order.
void save_checkpoint(const std::filesystem::path& path, const GroundingModel& model);
std::unique_ptr<GroundingModel> load_checkpoint(const std::filesystem::path& path);

}  // namespace acnet
