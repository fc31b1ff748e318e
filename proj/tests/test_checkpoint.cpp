#include <gtest/gtest.h>

#include <cstring>

#include "evit/checkpoint.hpp"
#include "evit/error.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace evit;
using nlohmann::json;

namespace {

ErrorCode load_code(const std::string& bytes) {
  try {
    load_checkpoint(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "load succeeded";
  return ErrorCode::Io;
}

struct Split {
  json header;
  std::string payload;
};

Split split(const std::string& bytes) {
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 4, 4);
  return {json::parse(bytes.substr(8, len)), bytes.substr(8 + len)};
}

std::string join(const json& header, const std::string& payload) {
  const std::string h = header.dump();
  const auto len = static_cast<std::uint32_t>(h.size());
  std::string out = "VITC";
  out.append(reinterpret_cast<const char*>(&len), 4);
  return out + h + payload;
}

}  // namespace

TEST(Checkpoint, RoundTripIsExact) {
  const auto cfg = ViTConfig::toy();
  const auto p = ref::lively_params(cfg, 1);
  const auto ck = load_checkpoint(save_checkpoint(p, cfg));
  EXPECT_EQ(ck.config, cfg);
  EXPECT_EQ(ck.params, p);
}

TEST(Checkpoint, HeaderListsTensorsInOrder) {
  const auto cfg = ref::gradcheck_config();
  const auto s = split(save_checkpoint(ref::lively_params(cfg, 2), cfg));
  const auto& tensors = s.header.at("tensors");
  ASSERT_FALSE(tensors.empty());
  EXPECT_EQ(tensors[0].at("name"), "E");
  EXPECT_EQ(tensors[0].at("offset"), 0);
  EXPECT_EQ(s.payload.size(), 8 * parameter_count(make_params(cfg)));
}

TEST(Checkpoint, BadMagic) {
  std::string bytes = save_checkpoint(make_params(ref::gradcheck_config()), ref::gradcheck_config());
  bytes[0] = 'X';
  EXPECT_EQ(load_code(bytes), ErrorCode::BadMagic);
  EXPECT_EQ(load_code(""), ErrorCode::BadMagic);
}

TEST(Checkpoint, TruncatedPayload) {
  const auto cfg = ref::gradcheck_config();
  const std::string bytes = save_checkpoint(make_params(cfg), cfg);
  EXPECT_EQ(load_code(bytes.substr(0, bytes.size() - 8)), ErrorCode::ManifestMismatch);
  EXPECT_EQ(load_code(bytes + std::string(8, '\0')), ErrorCode::ManifestMismatch);
  EXPECT_EQ(load_code(bytes.substr(0, 20)), ErrorCode::ManifestMismatch);
}

TEST(Checkpoint, WrongShapeNamesTensor) {
  const auto cfg = ref::gradcheck_config();
  auto s = split(save_checkpoint(make_params(cfg), cfg));
  auto& entry = s.header.at("tensors")[1];
  const std::string name = entry.at("name");
  entry["shape"] = {1, 1};
  try {
    load_checkpoint(join(s.header, s.payload));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
    EXPECT_NE(std::string(e.what()).find(name), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, ConfigOrManifestDisagreement) {
  const auto cfg = ref::gradcheck_config();
  auto s = split(save_checkpoint(make_params(cfg), cfg));
  auto renamed = s.header;
  renamed.at("tensors")[0]["name"] = "W";
  EXPECT_EQ(load_code(join(renamed, s.payload)), ErrorCode::ManifestMismatch);
  auto broken = s.header;
  broken.at("config")["head_dim"] = 3;
  EXPECT_EQ(load_code(join(broken, s.payload)), ErrorCode::ManifestMismatch);
}
