#include "evit/checkpoint.hpp"

#include <fstream>
#include <json.hpp>

#include "byte_io.hpp"
#include "evit/error.hpp"

namespace evit {

namespace {

using nlohmann::json;

json config_to_json(const ViTConfig& c) {
  return json{{"patch", c.patch},           {"channels", c.channels},
              {"dim", c.dim},               {"head_dim", c.head_dim},
              {"heads", c.heads},           {"layers", c.layers},
              {"mlp_dim", c.mlp_dim},       {"frame_height", c.frame_height},
              {"frame_width", c.frame_width}, {"num_classes", c.num_classes}};
}

ViTConfig config_from_json(const json& j) {
  ViTConfig c;
  c.patch = j.at("patch").get<std::size_t>();
  c.channels = j.at("channels").get<std::size_t>();
  c.dim = j.at("dim").get<std::size_t>();
  c.head_dim = j.at("head_dim").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.mlp_dim = j.at("mlp_dim").get<std::size_t>();
  c.frame_height = j.at("frame_height").get<std::size_t>();
  c.frame_width = j.at("frame_width").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  return c;
}

}  // namespace

std::string save_checkpoint(const ViTParams& params, const ViTConfig& cfg) {
  json manifest = json::array();
  std::size_t offset = 0;
  for_each_tensor(params, [&](const std::string& name, const Tensor2D& t) {
    manifest.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}, {"offset", offset}});
    offset += 8 * t.size();
  });
  const std::string header = json{{"config", config_to_json(cfg)}, {"tensors", manifest}}.dump();

  std::string out;
  out.reserve(8 + header.size() + offset);
  out.append("VITC");
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out.append(header);
  for_each_tensor(params, [&](const std::string&, const Tensor2D& t) {
    for (double v : t.values()) detail::put_f64(out, v);
  });
  return out;
}

Checkpoint load_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "VITC") throw Error(ErrorCode::BadMagic, "expected VITC");
  detail::ByteReader in(bytes.substr(4));
  json header;
  try {
    const auto len = in.get_le<std::uint32_t>();
    header = json::parse(in.take(len));
  } catch (const Error&) {
    throw Error(ErrorCode::ManifestMismatch, "header runs past the end of the file");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestMismatch, std::string("unreadable header: ") + e.what());
  }

  Checkpoint ck;
  try {
    ck.config = config_from_json(header.at("config"));
    ck.config.validate();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ManifestMismatch, std::string("bad config: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::ManifestMismatch, e.what());
  }
  ck.params = make_params(ck.config);

  const json* manifest = nullptr;
  if (auto it = header.find("tensors"); it != header.end() && it->is_array()) manifest = &*it;
  if (manifest == nullptr) throw Error(ErrorCode::ManifestMismatch, "missing tensor manifest");

  std::size_t index = 0, offset = 0;
  for_each_tensor(ck.params, [&](const std::string& name, const Tensor2D& t) {
    if (index >= manifest->size()) throw Error(ErrorCode::ManifestMismatch, "manifest ends before " + name);
    const json& entry = (*manifest)[index++];
    try {
      if (entry.at("name").get<std::string>() != name) {
        throw Error(ErrorCode::ManifestMismatch,
                    "expected " + name + ", found " + entry.at("name").get<std::string>());
      }
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols()) {
        throw Error(ErrorCode::ShapeMismatch, name + " has the wrong shape for the config");
      }
      if (entry.at("offset").get<std::size_t>() != offset) {
        throw Error(ErrorCode::ManifestMismatch, name + " offset out of canonical order");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ManifestMismatch, name + ": " + e.what());
    }
    offset += 8 * t.size();
  });
  if (index != manifest->size()) throw Error(ErrorCode::ManifestMismatch, "extra manifest entries");
  if (in.remaining() != offset) {
    throw Error(ErrorCode::ManifestMismatch, "payload holds " + std::to_string(in.remaining()) +
                                                 " bytes, manifest needs " + std::to_string(offset));
  }
  for_each_tensor(ck.params, [&](const std::string&, Tensor2D& t) {
    for (double& v : t.values()) v = in.get_f64();
  });
  return ck;
}

void save_checkpoint_file(const ViTParams& params, const ViTConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  const std::string bytes = save_checkpoint(params, cfg);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_checkpoint(bytes);
}

}  // namespace evit
