#include "vageo/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "vageo/error.hpp"

namespace vageo {
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'V', 'A', 'G', 'E', 'O', 'C', 'K', 'P'};

struct Slot {
  std::string name;
  std::string kind;
  Tensor* tensor;
};

std::vector<Slot> slots(GeoLocalizer& model, Adam* optimizer) {
  std::vector<Slot> out;
  ParamRegistry& reg = model.registry();
  for (const auto& p : reg.params) out.push_back({p.name, "param", &p.param->value});
  for (const auto& b : reg.buffers) out.push_back({b.name, "buffer", b.tensor});
  if (optimizer) {
    for (size_t i = 0; i < reg.params.size(); ++i) out.push_back({reg.params[i].name, "adam_m", &optimizer->first_moments()[i]});
    for (size_t i = 0; i < reg.params.size(); ++i) out.push_back({reg.params[i].name, "adam_v", &optimizer->second_moments()[i]});
  }
  return out;
}

CheckpointHeader read_header(std::ifstream& in, const fs::path& path) {
  char magic[8];
  uint32_t version = 0;
  uint64_t length = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&length), sizeof length);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw ParseError("'" + path.string() + "' is not a checkpoint", 0);
  if (version != kCheckpointVersion) {
    throw ParseError("checkpoint version " + std::to_string(version) + " is not supported", 0);
  }
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw ParseError("truncated checkpoint header", 0);
  CheckpointHeader h;
  h.version = version;
  try {
    const Json j = Json::parse(text);
    h.config = j.at("config");
    h.epoch = j.at("epoch").get<int64_t>();
    h.step = j.at("step").get<int64_t>();
    h.adam_steps = j.at("adam_steps").get<int64_t>();
    for (const auto& e : j.at("tensors")) {
      h.entries.push_back({e.at("name").get<std::string>(), e.at("kind").get<std::string>(), e.at("shape").get<Shape>(),
                           e.at("offset").get<uint64_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what(), 0);
  }
  return h;
}

}  // namespace

void save_checkpoint(const fs::path& path, const RunConfig& config, GeoLocalizer& model, const Adam* optimizer,
                     int64_t epoch, int64_t step) {
  auto all = slots(model, const_cast<Adam*>(optimizer));
  Json header;
  header["format"] = "vageo-checkpoint";
  header["config"] = to_json(config);
  header["epoch"] = epoch;
  header["step"] = step;
  header["adam_steps"] = optimizer ? optimizer->steps() : 0;
  header["tensors"] = Json::array();
  uint64_t offset = 0;
  for (const auto& s : all) {
    header["tensors"].push_back({{"name", s.name}, {"kind", s.kind}, {"shape", s.tensor->shape()}, {"offset", offset}});
    offset += s.tensor->size();
  }
  const std::string text = header.dump();
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
    const uint64_t length = text.size();
    out.write(kMagic, 8);
    out.write(reinterpret_cast<const char*>(&kCheckpointVersion), sizeof kCheckpointVersion);
    out.write(reinterpret_cast<const char*>(&length), sizeof length);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& s : all) {
      out.write(reinterpret_cast<const char*>(s.tensor->data()), static_cast<std::streamsize>(s.tensor->size() * sizeof(double)));
    }
    if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

CheckpointHeader read_checkpoint_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  return read_header(in, path);
}

CheckpointHeader load_checkpoint(const fs::path& path, GeoLocalizer& model, Adam* optimizer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  CheckpointHeader h = read_header(in, path);
  const std::streamoff data_start = in.tellg();
  std::map<std::pair<std::string, std::string>, const CheckpointEntry*> index;
  for (const auto& e : h.entries) index[{e.kind, e.name}] = &e;
  for (const auto& s : slots(model, optimizer)) {
    auto it = index.find({s.kind, s.name});
    if (it == index.end()) throw ValidationError("checkpoint lacks " + s.kind + " '" + s.name + "'");
    const CheckpointEntry& e = *it->second;
    if (e.shape != s.tensor->shape()) {
      throw ShapeError("checkpoint " + s.kind + " '" + s.name + "' has shape " + shape_string(e.shape) + ", model expects " +
                       shape_string(s.tensor->shape()));
    }
    in.seekg(data_start + static_cast<std::streamoff>(e.offset * sizeof(double)));
    in.read(reinterpret_cast<char*>(s.tensor->data()), static_cast<std::streamsize>(s.tensor->size() * sizeof(double)));
    if (!in) throw ParseError("truncated checkpoint data", 0);
  }
  if (optimizer) optimizer->set_steps(h.adam_steps);
  return h;
}

}  // namespace vageo
