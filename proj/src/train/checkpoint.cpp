#include "actrec/train/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <map>

#include "actrec/data/atomic_file.hpp"
#include "actrec/error.hpp"

namespace actrec::train {

namespace {

constexpr char kMagic[4] = {'A', 'C', 'K', 'P'};
constexpr std::size_t kPrefixBytes = 12;

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint64_t get_le(std::string_view in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string encode_checkpoint(const models::ModelConfig& config, const models::ModelParams& params,
                              const nlohmann::json& metadata) {
  config.validate();
  models::check_params_match(config, params);
  nlohmann::json table = nlohmann::json::array();
  for (std::size_t i = 0; i < params.size(); ++i) {
    table.push_back({{"name", params.name(i)}, {"shape", params.at(i).shape()}});
  }
  const nlohmann::json header{{"format_version", kCheckpointVersion},
                              {"model_config", models::to_json(config)},
                              {"parameters", table},
                              {"metadata", metadata}};
  const std::string text = header.dump();
  std::string out(kMagic, 4);
  put_le(out, text.size(), 8);
  out += text;
  out.reserve(out.size() + 4 * params.total_elements());
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (float v : params.at(i).values()) put_le(out, std::bit_cast<std::uint32_t>(v), 4);
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes, std::optional<models::ModelKind> expected_kind) {
  if (bytes.size() < kPrefixBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError("not a checkpoint (bad magic)");
  }
  const std::uint64_t header_len = get_le(bytes, 4, 8);
  if (header_len > bytes.size() - kPrefixBytes) throw CheckpointError("truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kPrefixBytes, header_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }

  Checkpoint ck;
  std::vector<std::pair<std::string, num::Shape>> table;
  try {
    const int version = header.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    ck.config = models::model_config_from_json(header.at("model_config"));
    for (const auto& entry : header.at("parameters")) {
      table.emplace_back(entry.at("name").get<std::string>(), entry.at("shape").get<num::Shape>());
    }
    if (header.contains("metadata")) ck.metadata = header["metadata"];
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint model config: ") + e.what());
  }

  if (expected_kind && *expected_kind != ck.config.kind) {
    throw CheckpointError("checkpoint holds a " + models::to_string(ck.config.kind) + " model, expected " +
                          models::to_string(*expected_kind));
  }

  // Compare the stored table with what the config requires before reading payloads.
  const std::vector<models::ParamSpec> schema = models::param_schema(ck.config);
  std::map<std::string, const num::Shape*> stored;
  for (const auto& [name, shape] : table) {
    if (!stored.emplace(name, &shape).second) throw CheckpointError("duplicate parameter '" + name + "' in checkpoint");
  }
  for (const models::ParamSpec& spec : schema) {
    auto it = stored.find(spec.name);
    if (it == stored.end()) throw CheckpointError("checkpoint is missing parameter '" + spec.name + "'");
    if (*it->second != spec.shape) {
      throw CheckpointError("parameter '" + spec.name + "' has shape " + num::shape_string(*it->second) +
                            " in the checkpoint, config requires " + num::shape_string(spec.shape));
    }
  }
  if (table.size() != schema.size()) {
    for (const auto& [name, shape] : table) {
      bool known = false;
      for (const auto& spec : schema) known = known || spec.name == name;
      if (!known) throw CheckpointError("checkpoint has unexpected parameter '" + name + "'");
    }
  }

  std::size_t offset = kPrefixBytes + header_len;
  std::size_t needed = 0;
  for (const auto& [name, shape] : table) needed += 4 * num::shape_numel(shape);
  if (bytes.size() - offset != needed) {
    throw CheckpointError("checkpoint payload is " + std::to_string(bytes.size() - offset) + " bytes, header needs " +
                          std::to_string(needed));
  }
  // Payload follows table order; params are stored in schema order.
  std::map<std::string, num::Tensor<float>> loaded;
  for (const auto& [name, shape] : table) {
    std::vector<float> values(num::shape_numel(shape));
    for (float& v : values) {
      v = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, offset, 4)));
      offset += 4;
    }
    loaded.emplace(name, num::Tensor<float>(shape, std::move(values)));
  }
  for (const models::ParamSpec& spec : schema) ck.params.add(spec.name, std::move(loaded.at(spec.name)));
  for (std::size_t i = 0; i < ck.params.size(); ++i) {
    if (!ck.params.at(i).all_finite()) throw CheckpointError("parameter '" + ck.params.name(i) + "' is not finite");
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const models::ModelConfig& config,
                     const models::ModelParams& params, const nlohmann::json& metadata) {
  data::write_file_atomic(path, encode_checkpoint(config, params, metadata));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<models::ModelKind> expected_kind) {
  std::string bytes;
  try {
    bytes = data::read_file(path);
  } catch (const DataError& e) {
    throw CheckpointError(e.what());
  }
  try {
    return decode_checkpoint(bytes, expected_kind);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace actrec::train
