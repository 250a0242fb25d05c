#include "rfgn/cache.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_set>

namespace rfgn {

namespace {

constexpr char kMagic[4] = {'R', 'F', 'G', 'N'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "snapshot writer assumes a little-endian host");

template <typename T>
void write_pod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ConfigError("truncated snapshot file");
  return value;
}

}  // namespace

NodeStateCache::NodeStateCache(Matrix initial, std::optional<std::uint64_t> layer_budget)
    : states_(initial), initial_(std::move(initial)), layer_budget_(layer_budget) {
  if (!states_.allFinite()) throw NumericError("initial node states are not finite");
  if (layer_budget_ && *layer_budget_ == 0) throw ConfigError("layer budget must be positive");
}

Matrix NodeStateCache::pull(std::span<const EntityId> ids) const {
  Matrix rows(static_cast<Eigen::Index>(ids.size()), states_.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= states_.rows()) throw ConfigError("pull id out of range");
    rows.row(static_cast<Eigen::Index>(i)) = states_.row(ids[i]);
  }
  return rows;
}

void NodeStateCache::push(std::span<const EntityId> ids, const Matrix& rows) {
  if (static_cast<Eigen::Index>(ids.size()) != rows.rows() || rows.cols() != states_.cols())
    throw ConfigError("push dimension mismatch");
  std::unordered_set<EntityId> seen;
  for (EntityId id : ids) {
    if (id < 0 || id >= states_.rows()) throw ConfigError("push id out of range");
    if (!seen.insert(id).second) throw ConfigError("duplicate id in push");
  }
  if (!rows.allFinite()) throw NumericError("push rows are not finite");
  for (std::size_t i = 0; i < ids.size(); ++i)
    states_.row(ids[i]) = rows.row(static_cast<Eigen::Index>(i));
}

void NodeStateCache::push_all(const Matrix& states) {
  if (states.rows() != states_.rows() || states.cols() != states_.cols())
    throw ConfigError("push dimension mismatch");
  if (!states.allFinite()) throw NumericError("push rows are not finite");
  states_ = states;
}

CacheAdvance NodeStateCache::advance_and_maybe_clear() {
  ++step_;
  if (layer_budget_ && step_ % *layer_budget_ == 0) {
    states_ = initial_;
    return CacheAdvance::Cleared;
  }
  return CacheAdvance::Kept;
}

void NodeStateCache::save(const std::string& path) const { save_matrix(path, states_); }

NodeStateCache NodeStateCache::load(const std::string& path,
                                    std::optional<std::uint64_t> layer_budget) {
  return NodeStateCache(load_matrix(path), layer_budget);
}

void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint64_t>(m.rows()));
  write_pod(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(Real) * m.size()));
  if (!out) throw ConfigError("write failed: " + path);
}

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open: " + path);
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError("bad snapshot magic in " + path);
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) throw ConfigError("unsupported snapshot version");
  const auto rows = read_pod<std::uint64_t>(in);
  const auto cols = read_pod<std::uint64_t>(in);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(Real) * m.size()));
  if (!in) throw ConfigError("truncated snapshot file: " + path);
  return m;
}

}  // namespace rfgn
