#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sfmsemval/model.h"

namespace sfmsemval {

enum class ModelFormat { kText, kBinary, kAuto };

ModelFormat ModelFormatFromName(const std::string& name);

struct LoadDiagnostics {
  // Quaternions whose norm drifted from 1 by more than 1e-6 before
  // renormalization, and similar recoverable oddities.
  std::vector<std::string> warnings;
};

// Reads cameras/images/points3D from `dir`. kAuto picks the binary files when
// cameras.bin exists and the text files otherwise. The result is verified
// with VerifyModel; failures name the file and the line (text) or byte
// offset (binary) of the offending record.
SparseModel LoadModel(const std::filesystem::path& dir,
                      ModelFormat format = ModelFormat::kAuto,
                      LoadDiagnostics* diagnostics = nullptr);

void WriteModelText(const SparseModel& model, const std::filesystem::path& dir);
void WriteModelBinary(const SparseModel& model,
                      const std::filesystem::path& dir);

// ASCII PLY with x y z r g b and one unsigned char `status` per point.
// Points absent from `status` get status 0.
void WritePointsPly(const SparseModel& model,
                    const std::map<Point3DId, int>& status,
                    const std::filesystem::path& path);

}  // namespace sfmsemval
