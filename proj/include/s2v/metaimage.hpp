#pragma once

// MetaImage (.mhd + .raw) reader/writer for the subset used by the toolkit:
// uncompressed MET_FLOAT payloads, little-endian, 2 or 3 dimensions.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "s2v/error.hpp"
#include "s2v/image.hpp"

namespace s2v {

using AnyImage = std::variant<ImageGrid2, Volume3>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  std::istringstream in(value);
  std::string token;
  while (in >> token) {
    T parsed{};
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), parsed);
    if (ec != std::errc() || ptr != token.data() + token.size())
      throw Error("malformed value for " + key + ": '" + value + "'");
    out.push_back(parsed);
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::uint32_t to_little_endian(std::uint32_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xFFU) << 24) | ((bits & 0xFF00U) << 8) | ((bits >> 8) & 0xFF00U) |
           (bits >> 24);
  }
  return bits;
}

inline std::vector<char> encode_float32(std::span<const double> data) {
  std::vector<char> bytes(data.size() * 4);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto bits = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(data[i])));
    std::memcpy(bytes.data() + 4 * i, &bits, 4);
  }
  return bytes;
}

inline std::vector<double> decode_float32(const std::vector<char>& bytes) {
  std::vector<double> data(bytes.size() / 4);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + 4 * i, 4);
    data[i] = static_cast<double>(std::bit_cast<float>(to_little_endian(bits)));
  }
  return data;
}

inline void write_header(const std::filesystem::path& path, std::span<const std::size_t> dims,
                         std::span<const double> spacing, std::span<const double> data) {
  std::filesystem::path raw = path;
  raw.replace_extension(".raw");

  std::ostringstream header;
  header << "ObjectType = Image\n";
  header << "NDims = " << dims.size() << "\n";
  header << "DimSize =";
  for (auto d : dims) header << ' ' << d;
  header << "\nElementSpacing =";
  for (auto s : spacing) header << ' ' << format_double(s);
  header << "\nElementType = MET_FLOAT\n";
  header << "ElementByteOrderMSB = False\n";
  header << "ElementDataFile = " << raw.filename().string() << "\n";

  std::ofstream hdr(path, std::ios::binary | std::ios::trunc);
  if (!hdr) throw Error("cannot open " + path.string() + " for writing");
  hdr << header.str();
  if (!hdr) throw Error("failed writing " + path.string());

  const auto bytes = encode_float32(data);
  std::ofstream out(raw, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + raw.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + raw.string());
}

}  // namespace detail

/// Reads a MetaImage header and its raw payload. NDims selects the returned
/// kind. Unknown header keys are ignored.
inline AnyImage load_metaimage(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open MetaImage header " + path.string());

  std::map<std::string, std::string> keys;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    keys[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = keys.find(key);
    if (it == keys.end()) throw Error("MetaImage header missing " + key);
    return it->second;
  };

  if (auto it = keys.find("ObjectType"); it != keys.end() && it->second != "Image")
    throw Error("unsupported ObjectType " + it->second);
  const auto ndims_list = detail::parse_list<int>("NDims", get("NDims"));
  require(ndims_list.size() == 1, "NDims must be a single integer");
  const int ndims = ndims_list[0];
  if (ndims != 2 && ndims != 3) throw Error("unsupported NDims " + std::to_string(ndims));
  if (get("ElementType") != "MET_FLOAT")
    throw Error("unsupported ElementType " + get("ElementType"));
  if (auto it = keys.find("ElementByteOrderMSB"); it != keys.end() && it->second != "False")
    throw Error("unsupported ElementByteOrderMSB " + it->second);
  if (auto it = keys.find("CompressedData"); it != keys.end() && it->second != "False")
    throw Error("compressed payloads are not supported");

  const auto dims = detail::parse_list<std::size_t>("DimSize", get("DimSize"));
  require(dims.size() == static_cast<std::size_t>(ndims), "DimSize does not match NDims");
  std::vector<double> spacing(static_cast<std::size_t>(ndims), 1.0);
  if (keys.count("ElementSpacing")) {
    spacing = detail::parse_list<double>("ElementSpacing", keys["ElementSpacing"]);
    require(spacing.size() == dims.size(), "ElementSpacing does not match NDims");
  }

  const std::string data_file = get("ElementDataFile");
  if (data_file == "LOCAL") throw Error("inline (LOCAL) payloads are not supported");
  const auto raw = path.parent_path() / data_file;
  std::ifstream rin(raw, std::ios::binary);
  if (!rin) throw Error("cannot open MetaImage payload " + raw.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(rin)), std::istreambuf_iterator<char>());

  std::size_t count = 1;
  for (auto d : dims) count *= d;
  if (bytes.size() != count * 4)
    throw Error("payload length mismatch: expected " + std::to_string(count * 4) +
                " bytes, found " + std::to_string(bytes.size()));
  auto data = detail::decode_float32(bytes);

  if (ndims == 2) return ImageGrid2({dims[0], dims[1]}, {spacing[0], spacing[1]}, std::move(data));
  return Volume3({dims[0], dims[1], dims[2]}, {spacing[0], spacing[1], spacing[2]},
                 std::move(data));
}

inline Volume3 load_volume(const std::filesystem::path& path) {
  auto image = load_metaimage(path);
  if (auto* vol = std::get_if<Volume3>(&image)) return std::move(*vol);
  throw Error(path.string() + " is not a 3D image");
}

inline ImageGrid2 load_image2(const std::filesystem::path& path) {
  auto image = load_metaimage(path);
  if (auto* img = std::get_if<ImageGrid2>(&image)) return std::move(*img);
  throw Error(path.string() + " is not a 2D image");
}

/// Writes `path` (header) and a sibling `.raw` payload. The validity mask of
/// 2D images is not stored; invalid pixels are written as their zero value.
inline void save_metaimage(const Volume3& image, const std::filesystem::path& path) {
  detail::write_header(path, image.dims(), image.spacing(), image.data());
}

inline void save_metaimage(const ImageGrid2& image, const std::filesystem::path& path) {
  detail::write_header(path, image.dims(), image.spacing(), image.data());
}

inline void save_metaimage(const AnyImage& image, const std::filesystem::path& path) {
  std::visit([&](const auto& img) { save_metaimage(img, path); }, image);
}

}  // namespace s2v
