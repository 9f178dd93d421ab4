#pragma once
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lexkit/model.hpp"

namespace lexkit {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string fnv1a64_hex(std::string_view s) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
  return buf;
}

namespace detail {

constexpr char kCheckpointMagic[8] = {'L', 'E', 'X', 'K', 'I', 'T', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline void put_u32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string &out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::string &out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u32(out, bits);
}
inline std::uint32_t get_u32(const std::string &in, std::size_t &pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos++])) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(const std::string &in, std::size_t &pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos++])) << (8 * i);
  return v;
}
inline float get_f32(const std::string &in, std::size_t &pos) {
  const std::uint32_t bits = get_u32(in, pos);
  float v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace detail

// Checkpoint file: 8-byte magic, little-endian u32 format version, u64
// manifest length, a JSON manifest (config echo, vocabulary, knowledge tree
// and its hash, PMI edges, named parameter inventory), then the parameter
// payload as contiguous little-endian float32 in manifest order. The file is
// written to a temp path and renamed into place.
inline void save_checkpoint(const ChargeModel<float> &model, const std::string &path) {
  json manifest;
  manifest["config"] = model.config();
  manifest["vocab"] = model.vocab().tokens();
  const json tree_json = knowledge_to_json(model.tree());
  manifest["knowledge"] = tree_json;
  manifest["knowledge_hash"] = fnv1a64_hex(tree_json.dump());
  json edges = json::array();
  {
    std::vector<std::uint64_t> keys;
    keys.reserve(model.edges().raw().size());
    for (const auto &[k, w] : model.edges().raw()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (std::uint64_t k : keys)
      edges.push_back({static_cast<int>(k & 0xffffffffu), static_cast<int>(k >> 32),
                       model.edges().raw().at(k)});
  }
  manifest["pmi_edges"] = edges;
  json param_list = json::array();
  std::size_t payload_floats = 0;
  for (const auto &[name, t] : model.params().items()) {
    param_list.push_back({{"name", name}, {"shape", t->shape}});
    payload_floats += t->size();
  }
  manifest["params"] = param_list;
  manifest["payload_bytes"] = payload_floats * 4;

  std::string blob;
  blob.append(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
  detail::put_u32(blob, detail::kCheckpointVersion);
  const std::string manifest_text = manifest.dump();
  detail::put_u64(blob, manifest_text.size());
  blob += manifest_text;
  for (const auto &[name, t] : model.params().items())
    for (float v : t->value) detail::put_f32(blob, v);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write checkpoint '" + path + "'");
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw UsageError("short write on checkpoint '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw UsageError("cannot move checkpoint into place at '" + path + "'");
}

inline std::shared_ptr<ChargeModel<float>> load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptionError("cannot open checkpoint '" + path + "'");
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (blob.size() < sizeof(detail::kCheckpointMagic) + 12 ||
      std::memcmp(blob.data(), detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic)) != 0)
    throw CorruptionError("'" + path + "' is not a lexkit checkpoint");
  std::size_t pos = sizeof(detail::kCheckpointMagic);
  const std::uint32_t version = detail::get_u32(blob, pos);
  if (version != detail::kCheckpointVersion)
    throw CorruptionError("checkpoint '" + path + "' has format version " +
                          std::to_string(version) + ", this build reads version " +
                          std::to_string(detail::kCheckpointVersion));
  const std::uint64_t manifest_len = detail::get_u64(blob, pos);
  if (pos + manifest_len > blob.size())
    throw CorruptionError("checkpoint '" + path + "' is truncated inside the manifest");
  json manifest;
  try {
    manifest = json::parse(blob.substr(pos, manifest_len));
  } catch (const json::exception &e) {
    throw CorruptionError("checkpoint '" + path + "' has a corrupt manifest: " + e.what());
  }
  pos += manifest_len;

  TrainConfig cfg = manifest.at("config").get<TrainConfig>();
  Vocabulary vocab;
  {
    const auto tokens = manifest.at("vocab").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (vocab.add(tokens[i]) != static_cast<int>(i))
        throw CorruptionError("checkpoint '" + path + "' vocabulary is not a dense id map");
  }
  KnowledgeTree tree = knowledge_from_json(manifest.at("knowledge"));
  if (manifest.value("knowledge_hash", "") != fnv1a64_hex(knowledge_to_json(tree).dump()))
    throw CorruptionError("checkpoint '" + path + "' knowledge tree does not match its hash");
  EdgeSet edges;
  for (const auto &edge : manifest.at("pmi_edges"))
    edges.insert(edge.at(0).get<int>(), edge.at(1).get<int>(), edge.at(2).get<double>());

  auto model = std::make_shared<ChargeModel<float>>(std::move(cfg), std::move(vocab),
                                                    std::move(tree), std::move(edges));

  const auto &param_list = manifest.at("params");
  const auto &items = model->params().items();
  if (param_list.size() != items.size())
    throw CorruptionError("checkpoint '" + path + "' lists " + std::to_string(param_list.size()) +
                          " parameters, model has " + std::to_string(items.size()));
  std::size_t payload_floats = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto &[name, tensor] = items[i];
    if (param_list[i].at("name").get<std::string>() != name ||
        param_list[i].at("shape").get<Shape>() != tensor->shape)
      throw CorruptionError("checkpoint '" + path + "' parameter " + std::to_string(i) +
                            " does not match model parameter '" + name + "'");
    payload_floats += tensor->size();
  }
  const std::uint64_t payload_bytes = manifest.at("payload_bytes").get<std::uint64_t>();
  if (payload_bytes != payload_floats * 4 || blob.size() - pos != payload_bytes)
    throw CorruptionError("checkpoint '" + path + "' payload is truncated or oversized (" +
                          std::to_string(blob.size() - pos) + " bytes, expected " +
                          std::to_string(payload_floats * 4) + ")");
  for (const auto &[name, tensor] : items)
    for (std::size_t i = 0; i < tensor->size(); ++i) tensor->value[i] = detail::get_f32(blob, pos);
  model->invalidate_knowledge_cache();
  return model;
}

}  // namespace lexkit
