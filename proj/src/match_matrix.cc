#include "sfmsemval/match_matrix.h"

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>

#include <sqlite3.h>

#include "sfmsemval/error.h"

namespace sfmsemval {

std::uint64_t PairId(std::uint64_t image_id1, std::uint64_t image_id2) {
  if (image_id1 >= kMaxNumImages || image_id2 >= kMaxNumImages) {
    throw std::out_of_range("image id outside [0, 2147483646]");
  }
  if (image_id1 > image_id2) std::swap(image_id1, image_id2);
  return image_id1 * kMaxNumImages + image_id2;
}

std::pair<std::uint64_t, std::uint64_t> InversePairId(std::uint64_t pair_id) {
  const std::uint64_t id2 = pair_id % kMaxNumImages;
  const std::uint64_t id1 = pair_id / kMaxNumImages;
  if (id1 >= kMaxNumImages || id1 > id2) {
    throw std::out_of_range("invalid pair id " + std::to_string(pair_id));
  }
  return {id1, id2};
}

MatchSource MatchSourceFromName(const std::string& name) {
  if (name == "matches") return MatchSource::kMatches;
  if (name == "two_view_geometries") return MatchSource::kTwoViewGeometries;
  throw InputError("unknown match source '" + name +
                   "' (expected matches or two_view_geometries)");
}

std::int64_t MatchMatrix::At(ImageId a, ImageId b) const {
  const auto ia = std::lower_bound(image_ids.begin(), image_ids.end(), a);
  const auto ib = std::lower_bound(image_ids.begin(), image_ids.end(), b);
  if (ia == image_ids.end() || *ia != a || ib == image_ids.end() || *ib != b) {
    throw std::out_of_range("image id not in match matrix");
  }
  return counts(ia - image_ids.begin(), ib - image_ids.begin());
}

namespace {

struct DbCloser {
  void operator()(sqlite3* db) const { sqlite3_close(db); }
};
struct StmtFinalizer {
  void operator()(sqlite3_stmt* stmt) const { sqlite3_finalize(stmt); }
};
using DbHandle = std::unique_ptr<sqlite3, DbCloser>;
using StmtHandle = std::unique_ptr<sqlite3_stmt, StmtFinalizer>;

StmtHandle Prepare(sqlite3* db, const std::string& sql,
                   const std::string& where) {
  sqlite3_stmt* raw = nullptr;
  if (sqlite3_prepare_v2(db, sql.c_str(), -1, &raw, nullptr) != SQLITE_OK) {
    throw InputError(where + ": " + sqlite3_errmsg(db));
  }
  return StmtHandle(raw);
}

bool HasTable(sqlite3* db, const std::string& table, const std::string& where) {
  auto stmt = Prepare(
      db, "SELECT 1 FROM sqlite_master WHERE type='table' AND name=?", where);
  sqlite3_bind_text(stmt.get(), 1, table.c_str(), -1, SQLITE_TRANSIENT);
  return sqlite3_step(stmt.get()) == SQLITE_ROW;
}

}  // namespace

MatchMatrix LoadMatchMatrix(const std::filesystem::path& db_path,
                            MatchSource source) {
  const std::string where = db_path.string();
  if (!std::filesystem::is_regular_file(db_path)) {
    throw InputError(where + ": database file not found");
  }
  sqlite3* raw = nullptr;
  const int rc =
      sqlite3_open_v2(where.c_str(), &raw, SQLITE_OPEN_READONLY, nullptr);
  DbHandle db(raw);
  if (rc != SQLITE_OK) {
    throw InputError(where + ": cannot open database: " +
                     (raw ? sqlite3_errmsg(raw) : "out of memory"));
  }

  const std::string table =
      source == MatchSource::kMatches ? "matches" : "two_view_geometries";
  if (!HasTable(db.get(), table, where)) {
    throw InputError(where + ": missing table '" + table + "'");
  }

  std::set<ImageId> ids;
  if (HasTable(db.get(), "images", where)) {
    auto stmt = Prepare(db.get(), "SELECT image_id FROM images", where);
    while (sqlite3_step(stmt.get()) == SQLITE_ROW) {
      ids.insert(static_cast<ImageId>(sqlite3_column_int64(stmt.get(), 0)));
    }
  }

  std::map<std::pair<ImageId, ImageId>, std::int64_t> pair_counts;
  auto stmt =
      Prepare(db.get(), "SELECT pair_id, rows FROM " + table, where);
  int step;
  while ((step = sqlite3_step(stmt.get())) == SQLITE_ROW) {
    const auto pair_id =
        static_cast<std::uint64_t>(sqlite3_column_int64(stmt.get(), 0));
    const std::int64_t rows = sqlite3_column_int64(stmt.get(), 1);
    std::pair<std::uint64_t, std::uint64_t> ids_of_pair;
    try {
      ids_of_pair = InversePairId(pair_id);
    } catch (const std::out_of_range& e) {
      throw InputError(where + ": " + table + ": " + e.what());
    }
    if (rows < 0) {
      throw InputError(where + ": " + table + ": negative row count for pair " +
                       std::to_string(pair_id));
    }
    const auto a = static_cast<ImageId>(ids_of_pair.first);
    const auto b = static_cast<ImageId>(ids_of_pair.second);
    ids.insert(a);
    ids.insert(b);
    if (a != b) pair_counts[{a, b}] += rows;
  }
  if (step != SQLITE_DONE) {
    throw InputError(where + ": " + sqlite3_errmsg(db.get()));
  }

  MatchMatrix matrix;
  matrix.image_ids.assign(ids.begin(), ids.end());
  const auto n = static_cast<Eigen::Index>(matrix.image_ids.size());
  matrix.counts.setZero(n, n);
  auto index_of = [&](ImageId id) {
    return std::lower_bound(matrix.image_ids.begin(), matrix.image_ids.end(),
                            id) -
           matrix.image_ids.begin();
  };
  for (const auto& [pair, count] : pair_counts) {
    const auto i = index_of(pair.first);
    const auto j = index_of(pair.second);
    matrix.counts(i, j) = count;
    matrix.counts(j, i) = count;
  }
  return matrix;
}

void WriteMatchMatrixCsv(const MatchMatrix& matrix, std::ostream& out) {
  out << "image_id";
  for (const ImageId id : matrix.image_ids) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < matrix.image_ids.size(); ++i) {
    out << matrix.image_ids[i];
    for (std::size_t j = 0; j < matrix.image_ids.size(); ++j) {
      out << ',' << matrix.counts(static_cast<Eigen::Index>(i),
                                  static_cast<Eigen::Index>(j));
    }
    out << '\n';
  }
}

}  // namespace sfmsemval
