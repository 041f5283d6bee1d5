#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sfmsemval/model.h"

namespace sfmsemval {

// COLMAP database pair key: id1 * 2147483647 + id2 with id1 <= id2.
inline constexpr std::uint64_t kMaxNumImages = 2147483647;

std::uint64_t PairId(std::uint64_t image_id1, std::uint64_t image_id2);
std::pair<std::uint64_t, std::uint64_t> InversePairId(std::uint64_t pair_id);

enum class MatchSource { kMatches, kTwoViewGeometries };

MatchSource MatchSourceFromName(const std::string& name);

// Symmetric image-by-image count matrix with a zero diagonal. Row/column k
// corresponds to image_ids[k] (ascending).
struct MatchMatrix {
  std::vector<ImageId> image_ids;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;

  std::int64_t At(ImageId a, ImageId b) const;
};

// Reads the `rows` column of the chosen table. Image ids come from the
// `images` table when present, plus any id referenced by a pair.
MatchMatrix LoadMatchMatrix(const std::filesystem::path& db, MatchSource source);

// Header row "image_id,<id>,<id>,..." followed by one row per image.
void WriteMatchMatrixCsv(const MatchMatrix& matrix, std::ostream& out);

}  // namespace sfmsemval
