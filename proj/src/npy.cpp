#include "vageo/npy.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include "vageo/error.hpp"

namespace vageo {

static_assert(std::endian::native == std::endian::little, "npy writer assumes a little-endian host");

void write_npy_f32(const std::filesystem::path& path, const std::vector<double>& values, const std::vector<int64_t>& shape) {
  int64_t count = 1;
  for (auto d : shape) count *= d;
  if (count != static_cast<int64_t>(values.size())) throw ShapeError("npy: shape does not match value count");

  std::ostringstream dict;
  dict << "{'descr': '<f4', 'fortran_order': False, 'shape': (";
  for (size_t i = 0; i < shape.size(); ++i) dict << shape[i] << (shape.size() == 1 || i + 1 < shape.size() ? "," : "");
  dict << "), }";
  std::string header = dict.str();
  // magic(6) + version(2) + length(2) + header + '\n' padded to 64 bytes
  const size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<uint16_t>(header.size());
  out.put(static_cast<char>(len & 0xff));
  out.put(static_cast<char>(len >> 8));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::vector<float> buf(values.begin(), values.end());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

NpyArray read_npy_f32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  char magic[10];
  in.read(magic, 10);
  if (in.gcount() != 10 || std::memcmp(magic, "\x93NUMPY", 6) != 0 || magic[6] != 1) {
    throw ParseError("'" + path.string() + "' is not an npy v1 file", 0);
  }
  const size_t len = static_cast<unsigned char>(magic[8]) | (static_cast<unsigned char>(magic[9]) << 8);
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (header.find("'<f4'") == std::string::npos || header.find("'fortran_order': False") == std::string::npos) {
    throw ParseError("npy: only C-order little-endian float32 is supported", 0);
  }
  std::smatch m;
  if (!std::regex_search(header, m, std::regex(R"('shape':\s*\(([^)]*)\))"))) throw ParseError("npy: missing shape", 0);
  NpyArray arr;
  std::stringstream dims(m[1].str());
  std::string tok;
  int64_t count = 1;
  while (std::getline(dims, tok, ',')) {
    if (tok.find_first_not_of(" ") == std::string::npos) continue;
    arr.shape.push_back(std::stoll(tok));
    count *= arr.shape.back();
  }
  arr.values.resize(static_cast<size_t>(count));
  in.read(reinterpret_cast<char*>(arr.values.data()), static_cast<std::streamsize>(count * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(float))) throw ParseError("npy: truncated data", 0);
  return arr;
}

}  // namespace vageo
