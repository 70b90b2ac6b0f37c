#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jepa/core.hpp"

namespace jepa {

// Flat binary tensor archive with a JSON manifest. Little-endian scalars,
// column-major element order; parameters are stored as 32-bit floats, and
// auxiliary state (physics, return history) as 64-bit floats. See
// docs/checkpoint_format.md for the byte layout.
class ArchiveWriter {
 public:
  void add_f32(const std::string& name, const Matf& m);
  void add_f64(const std::string& name, const Matd& m);
  void set_meta(const std::string& key, const std::string& value);
  void write(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, Matf>> f32_;
  std::vector<std::pair<std::string, Matd>> f64_;
  std::map<std::string, std::string> meta_;
};

struct Archive {
  std::map<std::string, Matf> f32;
  std::map<std::string, Matd> f64;
  std::map<std::string, std::string> meta;

  const Matf& get_f32(const std::string& name) const;
  const Matd& get_f64(const std::string& name) const;
  const std::string& get_meta(const std::string& key) const;
  bool has_meta(const std::string& key) const { return meta.count(key) > 0; }

  static Archive read(const std::string& path);
};

// Exact double round-trips through text (C99 hex float form).
std::string double_to_hex(double v);
double hex_to_double(const std::string& s);

}  // namespace jepa
