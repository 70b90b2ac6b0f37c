#include "jepa/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace jepa {

static_assert(std::endian::native == std::endian::little,
              "archive i/o assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'J', 'E', 'P', 'A', 'A', 'R', 'C', 'H'};
constexpr std::uint32_t kVersion = 1;

using nlohmann::json;
}  // namespace

void ArchiveWriter::add_f32(const std::string& name, const Matf& m) {
  f32_.emplace_back(name, m);
}

void ArchiveWriter::add_f64(const std::string& name, const Matd& m) {
  f64_.emplace_back(name, m);
}

void ArchiveWriter::set_meta(const std::string& key, const std::string& value) {
  meta_[key] = value;
}

void ArchiveWriter::write(const std::string& path) const {
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : f32_) {
    tensors.push_back({{"name", name},
                       {"rows", m.rows()},
                       {"cols", m.cols()},
                       {"dtype", "f32"},
                       {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * sizeof(float);
  }
  for (const auto& [name, m] : f64_) {
    tensors.push_back({{"name", name},
                       {"rows", m.rows()},
                       {"cols", m.cols()},
                       {"dtype", "f64"},
                       {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * sizeof(double);
  }
  json manifest = {{"tensors", tensors}, {"meta", meta_}};
  const std::string mtext = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t version = kVersion;
  const std::uint32_t flags = 0;
  const std::uint64_t mlen = mtext.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&flags), sizeof(flags));
  out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  for (const auto& [name, m] : f32_) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(float)));
  }
  for (const auto& [name, m] : f64_) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

Archive Archive::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  std::uint32_t version = 0, flags = 0;
  std::uint64_t mlen = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&flags), sizeof(flags));
  in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: not an archive: " + path);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version in " + path);
  std::string mtext(mlen, '\0');
  in.read(mtext.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw std::runtime_error("checkpoint: truncated manifest: " + path);

  json manifest;
  try {
    manifest = json::parse(mtext);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("checkpoint: bad manifest: ") + e.what());
  }

  Archive a;
  for (const auto& [k, v] : manifest.at("meta").items()) {
    a.meta[k] = v.get<std::string>();
  }
  const std::streampos data_start = in.tellg();
  for (const auto& t : manifest.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const Index rows = t.at("rows").get<Index>();
    const Index cols = t.at("cols").get<Index>();
    const std::string dtype = t.at("dtype").get<std::string>();
    const std::uint64_t offset = t.at("offset").get<std::uint64_t>();
    in.seekg(data_start + static_cast<std::streamoff>(offset));
    if (dtype == "f32") {
      Matf m(rows, cols);
      in.read(reinterpret_cast<char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(float)));
      if (!in) throw std::runtime_error("checkpoint: truncated tensor '" + name + "' in " + path);
      a.f32.emplace(name, std::move(m));
    } else if (dtype == "f64") {
      Matd m(rows, cols);
      in.read(reinterpret_cast<char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
      if (!in) throw std::runtime_error("checkpoint: truncated tensor '" + name + "' in " + path);
      a.f64.emplace(name, std::move(m));
    } else {
      throw std::runtime_error("checkpoint: unknown dtype '" + dtype + "' in " + path);
    }
  }
  return a;
}

const Matf& Archive::get_f32(const std::string& name) const {
  auto it = f32.find(name);
  if (it == f32.end()) throw std::runtime_error("checkpoint: missing tensor " + name);
  return it->second;
}

const Matd& Archive::get_f64(const std::string& name) const {
  auto it = f64.find(name);
  if (it == f64.end()) throw std::runtime_error("checkpoint: missing tensor " + name);
  return it->second;
}

const std::string& Archive::get_meta(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw std::runtime_error("checkpoint: missing meta key " + key);
  return it->second;
}

std::string double_to_hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double hex_to_double(const std::string& s) {
  return std::strtod(s.c_str(), nullptr);
}

}  // namespace jepa
