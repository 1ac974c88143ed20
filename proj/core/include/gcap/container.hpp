#ifndef GCAP_CONTAINER_HPP_
#define GCAP_CONTAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gcap {

// Single binary container for every float payload the engine reads or
// writes (proposal descriptors, per-frame scores, checkpoints).
//
// Layout, all integers little-endian:
//   magic   "GCAP"                      4 bytes
//   version u32 = 1
//   rows    u32
//   cols    u32
//   payload rows*cols float32, row-major
//   index   u32 entry count, then per entry:
//             u32 name length, name bytes, u32 row offset, u32 rows
// Index entries must be non-overlapping and within the payload.
class FeatureContainer {
 public:
  static constexpr uint32_t kVersion = 1;

  struct IndexEntry {
    std::string name;
    uint32_t row_offset = 0;
    uint32_t rows = 0;
  };

  FeatureContainer() = default;
  explicit FeatureContainer(uint32_t cols) : cols_(cols) {}

  uint32_t rows() const { return rows_; }
  uint32_t cols() const { return cols_; }
  const std::vector<IndexEntry>& index() const { return index_; }
  const std::vector<float>& payload() const { return payload_; }

  // Appends `rows` rows of payload under `name`; data must be rows*cols long.
  void add_tensor(const std::string& name, std::span<const float> data, uint32_t rows);

  bool has(const std::string& name) const;
  // View of a named tensor's payload (entry.rows x cols, row-major).
  std::span<const float> tensor(const std::string& name) const;
  const IndexEntry& entry(const std::string& name) const;

  void save(const std::filesystem::path& file) const;
  static FeatureContainer load(const std::filesystem::path& file);

 private:
  uint32_t rows_ = 0;
  uint32_t cols_ = 0;
  std::vector<float> payload_;
  std::vector<IndexEntry> index_;
};

}  // namespace gcap

#endif  // GCAP_CONTAINER_HPP_
