#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <limits>

#include "hyperpp/checkpoint.hpp"
#include "hyperpp/random.hpp"

using namespace hyperpp;

namespace {

Checkpoint sample_checkpoint() {
  EncoderConfig enc;
  enc.input_dim = 5;
  enc.hidden_dims = {7, 6};
  enc.latent_dim = 4;
  enc.actor_outputs = 3;
  enc.critic_outputs = 51;
  Checkpoint ck;
  ck.config_hash = 0x0123456789abcdefULL;
  ck.params = init_params(enc, 42);
  // Values whose bit patterns a decimal round trip would disturb.
  ck.params.values[0] = std::numeric_limits<double>::denorm_min();
  ck.params.values[1] = -0.0;
  ck.params.values[2] = std::nextafter(1.0, 2.0);
  Vector m = Vector::LinSpaced(10, -1, 1);
  ck.aux.emplace_back("adam.m", m);
  ck.aux.emplace_back("empty", Vector());
  return ck;
}

}  // namespace

TEST_CASE("checkpoint round trip is bit-exact") {
  const Checkpoint ck = sample_checkpoint();
  const std::string bytes = serialize_checkpoint(ck);
  CHECK(bytes.substr(0, 8) == std::string("HYPERPP\0", 8));
  const Checkpoint back = deserialize_checkpoint(bytes);
  CHECK(back.config_hash == ck.config_hash);
  CHECK(back.params.same_layout(ck.params));
  REQUIRE(back.params.size() == ck.params.size());
  CHECK(std::memcmp(back.params.values.data(), ck.params.values.data(),
                    static_cast<std::size_t>(ck.params.size()) * sizeof(double)) == 0);
  CHECK(std::signbit(back.params.values[1]));
  REQUIRE(back.aux.size() == 2);
  CHECK(*back.find_aux("adam.m") == *ck.find_aux("adam.m"));
  CHECK(back.find_aux("empty")->size() == 0);
  CHECK(back.find_aux("missing") == nullptr);
  CHECK(serialize_checkpoint(back) == bytes);
}

TEST_CASE("values are stored little-endian after the header") {
  Checkpoint ck;
  ck.params.add("w", 1, 1);
  ck.params.values[0] = 1.0;  // 0x3ff0000000000000
  const std::string b = serialize_checkpoint(ck);
  // magic 8, version 4, hash 8, count 4, name 4+1, offset/rows/cols 24, n 8
  const std::size_t at = 8 + 4 + 8 + 4 + 5 + 24 + 8;
  CHECK(static_cast<unsigned char>(b[at + 7]) == 0x3f);
  CHECK(static_cast<unsigned char>(b[at + 6]) == 0xf0);
  CHECK(static_cast<unsigned char>(b[at]) == 0x00);
  CHECK(static_cast<unsigned char>(b[8]) == kCheckpointVersion);
}

TEST_CASE("file round trip") {
  const auto path = (std::filesystem::temp_directory_path() / "hyperpp_ckpt_test.bin").string();
  const Checkpoint ck = sample_checkpoint();
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.params.values == ck.params.values);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const std::string bytes = serialize_checkpoint(sample_checkpoint());
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(bad), CheckpointError);
  bad = bytes;
  bad[8] = 9;
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(bad), doctest::Contains("version"), CheckpointError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), CheckpointError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), CheckpointError);
  CHECK_THROWS_AS(deserialize_checkpoint(""), CheckpointError);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
