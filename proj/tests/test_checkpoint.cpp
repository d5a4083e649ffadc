#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "decom/checkpoint.hpp"
#include "decom/rng.hpp"

using namespace decom;

namespace {
std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("checkpoint round-trips names, shapes and payloads") {
  Checkpoint ckpt;
  Rng rng(1);
  Tensor a(3, 4), b(1, 4), c(2, 2);
  for (double& v : a.data) v = rng.uniform(-5, 5);
  for (double& v : b.data) v = rng.normal();
  for (double& v : c.data) v = rng.normal() * 1e-12;
  ckpt.add("base_0", {a, b});
  ckpt.add("critic_r", {c});

  const std::string path = tmp_path("decom_ckpt_roundtrip.ckpt");
  save_checkpoint(ckpt, path);
  Checkpoint loaded = load_checkpoint(path);

  REQUIRE(loaded.entries.size() == 2);
  CHECK(loaded.entries[0].first == "base_0");
  CHECK(loaded.entries[1].first == "critic_r");
  const auto* ts = loaded.find("base_0");
  REQUIRE(ts != nullptr);
  REQUIRE(ts->size() == 2);
  CHECK((*ts)[0].shape == a.shape);
  CHECK((*ts)[0].data == a.data);  // bit-exact doubles
  CHECK((*ts)[1].data == b.data);
  CHECK(loaded.find("critic_r")->at(0).data == c.data);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint header line is fixed and validated") {
  Checkpoint ckpt;
  ckpt.add("n", {Tensor::scalar(1.0)});
  const std::string path = tmp_path("decom_ckpt_header.ckpt");
  save_checkpoint(ckpt, path);
  {
    std::ifstream is(path, std::ios::binary);
    std::string header;
    std::getline(is, header);
    CHECK(header == "DECOM-CKPT v1");
  }
  {
    std::ofstream os(path, std::ios::binary);
    os << "DECOM-CKPT v999\n";
  }
  CHECK_THROWS(load_checkpoint(path));
  std::remove(path.c_str());
}

TEST_CASE("checkpoint rejects truncated files and duplicates") {
  Checkpoint ckpt;
  Tensor t(8, 8, 1.25);
  ckpt.add("net", {t});
  CHECK_THROWS(ckpt.add("net", {t}));

  const std::string path = tmp_path("decom_ckpt_trunc.ckpt");
  save_checkpoint(ckpt, path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size / 2);
  CHECK_THROWS(load_checkpoint(path));
  std::remove(path.c_str());
  CHECK_THROWS(load_checkpoint(path));
}
