#include "robustlab/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace robustlab {

namespace {

using nlohmann::json;

constexpr char kMagic[5] = {'A', 'R', 'O', 'F', '1'};

const char* family_name(Family f) { return f == Family::mlp ? "mlp" : "cnn"; }
Family family_from(const std::string& s) {
  if (s == "mlp") return Family::mlp;
  if (s == "cnn") return Family::cnn;
  throw std::runtime_error("checkpoint: unknown model family '" + s + "'");
}

json spec_to_json(const ModelSpec& spec) {
  return json{{"family", family_name(spec.family)},
              {"width_factor", spec.width_factor},
              {"input_shape", spec.input_shape},
              {"num_classes", spec.num_classes},
              {"depth", spec.depth}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  spec.family = family_from(j.at("family").get<std::string>());
  spec.width_factor = j.at("width_factor").get<int>();
  spec.input_shape = j.at("input_shape").get<std::vector<int>>();
  spec.num_classes = j.at("num_classes").get<int>();
  spec.depth = j.at("depth").get<int>();
  return spec;
}

// float32 little-endian, independent of host order
void put_f32le(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  out.push_back(static_cast<char>(bits & 0xFF));
  out.push_back(static_cast<char>((bits >> 8) & 0xFF));
  out.push_back(static_cast<char>((bits >> 16) & 0xFF));
  out.push_back(static_cast<char>((bits >> 24) & 0xFF));
}

float get_f32le(const unsigned char* p) {
  const uint32_t bits = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                        (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void save_checkpoint(const Model& model, const CheckpointMeta& meta, const std::string& path) {
  json manifest = json::array();
  for (const auto& p : model.params) {
    manifest.push_back(json{{"name", p.name},
                            {"tag", p.tag == ParamTag::weight ? "weight" : "bias"},
                            {"shape", p.value.shape}});
  }
  const json header = {{"epoch", meta.epoch},
                       {"config_digest", meta.config_digest},
                       {"rng_state", meta.rng_state},
                       {"model_spec", spec_to_json(model.spec)},
                       {"manifest", manifest}};
  const std::string htext = header.dump();

  std::string body;
  body.reserve(16 + htext.size());
  body.append(kMagic, 5);
  const uint32_t hlen = static_cast<uint32_t>(htext.size());
  body.push_back(static_cast<char>(hlen & 0xFF));
  body.push_back(static_cast<char>((hlen >> 8) & 0xFF));
  body.push_back(static_cast<char>((hlen >> 16) & 0xFF));
  body.push_back(static_cast<char>((hlen >> 24) & 0xFF));
  body += htext;
  for (const auto& p : model.params)
    for (float v : p.value.data) put_f32le(body, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 9 || std::memcmp(bytes.data(), kMagic, 5) != 0)
    throw std::runtime_error(path + ": not an AROF1 checkpoint (bad magic)");
  const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
  const uint32_t hlen = static_cast<uint32_t>(u[5]) | (static_cast<uint32_t>(u[6]) << 8) |
                        (static_cast<uint32_t>(u[7]) << 16) | (static_cast<uint32_t>(u[8]) << 24);
  if (bytes.size() < 9 + static_cast<size_t>(hlen))
    throw std::runtime_error(path + ": truncated header");

  json header;
  try {
    header = json::parse(bytes.substr(9, hlen));
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": corrupt header: " + e.what());
  }

  LoadedCheckpoint out;
  out.meta.epoch = header.at("epoch").get<int>();
  out.meta.config_digest = header.at("config_digest").get<std::string>();
  out.meta.rng_state = header.at("rng_state").get<std::string>();
  out.model.spec = spec_from_json(header.at("model_spec"));

  const auto plan = shape_plan(out.model.spec);
  const json& manifest = header.at("manifest");
  if (manifest.size() != plan.size())
    throw std::runtime_error(path + ": manifest has " + std::to_string(manifest.size()) +
                             " entries, spec expects " + std::to_string(plan.size()));

  size_t offset = 9 + hlen;
  int64_t total = 0;
  for (size_t i = 0; i < plan.size(); ++i) {
    const json& entry = manifest[i];
    const auto shape = entry.at("shape").get<std::vector<int>>();
    const auto name = entry.at("name").get<std::string>();
    if (name != plan[i].name || shape != plan[i].shape) {
      throw std::runtime_error(path + ": manifest disagrees with spec at '" + name +
                               "': file has " + shape_str(shape) + ", spec expects " +
                               plan[i].name + " " + shape_str(plan[i].shape));
    }
    total += numel_of(shape);
  }
  if (bytes.size() != offset + static_cast<size_t>(total) * 4)
    throw std::runtime_error(path + ": body length " + std::to_string(bytes.size() - offset) +
                             " does not match manifest (" + std::to_string(total * 4) + " bytes)");

  for (const auto& ps : plan) {
    Param p;
    p.name = ps.name;
    p.tag = ps.tag;
    p.value = Tensor(ps.shape);
    for (float& v : p.value.data) {
      v = get_f32le(reinterpret_cast<const unsigned char*>(bytes.data()) + offset);
      offset += 4;
    }
    out.model.params.push_back(std::move(p));
  }
  return out;
}

LoadedCheckpoint load_checkpoint(const std::string& path, const ModelSpec& expected) {
  LoadedCheckpoint out = load_checkpoint(path);
  const auto want = shape_plan(expected);
  const auto got = shape_plan(out.model.spec);
  if (want.size() != got.size())
    throw std::runtime_error(path + ": checkpoint spec has " + std::to_string(got.size()) +
                             " parameters, expected " + std::to_string(want.size()));
  for (size_t i = 0; i < want.size(); ++i) {
    if (want[i].name != got[i].name || want[i].shape != got[i].shape)
      throw std::runtime_error(path + ": shape diff at '" + got[i].name + "': checkpoint " +
                               shape_str(got[i].shape) + " vs expected " + shape_str(want[i].shape));
  }
  return out;
}

}  // namespace robustlab
