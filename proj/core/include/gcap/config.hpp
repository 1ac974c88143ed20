#ifndef GCAP_CONFIG_HPP_
#define GCAP_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace gcap {

// Flat key=value configuration. Lines are `key = value`; blank lines and
// lines starting with '#' are ignored. Every tunable default in the engine
// can be overridden here.
class Config {
 public:
  Config() = default;
  static Config load(const std::filesystem::path& file);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  size_t get_size(const std::string& key, size_t fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace gcap

#endif  // GCAP_CONFIG_HPP_
