#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "asyncq/mdp.hpp"
#include "asyncq/mdp_io.hpp"
#include "asyncq/types.hpp"

using namespace asyncq;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path((std::filesystem::temp_directory_path() / name).string()) {}
  ~TempFile() { std::remove(path.c_str()); }
  void fill(const std::string& text) const {
    std::ofstream out(path, std::ios::trunc);
    out << text;
  }
};

}  // namespace

TEST_CASE("model files round-trip exactly") {
  const TabularMdp original = make_random_mdp(9, 3, 0.4, 0.77, 4242);
  const TempFile file("asyncq_io_roundtrip.mdp");
  write_mdp_file(original, file.path);
  const TabularMdp loaded = read_mdp_file(file.path);

  CHECK(loaded.num_states() == 9);
  CHECK(loaded.num_actions() == 3);
  CHECK(loaded.gamma() == original.gamma());
  CHECK(loaded.num_transitions() == original.num_transitions());
  for (StateId i = 0; i < 9; ++i)
    for (ActionId a = 0; a < 3; ++a) {
      const auto lhs = original.row(i, a), rhs = loaded.row(i, a);
      REQUIRE(lhs.size() == rhs.size());
      for (std::size_t k = 0; k < lhs.size(); ++k) {
        CHECK(lhs[k].next == rhs[k].next);
        CHECK(lhs[k].prob == rhs[k].prob);      // %.17g is lossless for doubles
        CHECK(lhs[k].reward == rhs[k].reward);
      }
    }
}

TEST_CASE("model parser accepts comments and blank lines") {
  const TempFile file("asyncq_io_comments.mdp");
  file.fill(
      "# tiny deterministic chain\n"
      "2 1 0.5\n"
      "\n"
      "0 0 1 1.0 0.0  # advance\n"
      "1 0 1 1.0 1.0\n");
  const TabularMdp mdp = read_mdp_file(file.path);
  CHECK(mdp.num_states() == 2);
  CHECK(mdp.row(0, 0)[0].next == 1);
}

TEST_CASE("model parser reports the offending line") {
  const TempFile file("asyncq_io_bad.mdp");

  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_mdp_file("/definitely/not/here.mdp"), ValidationError);
  }
  SUBCASE("empty file") {
    file.fill("");
    CHECK_THROWS_AS(read_mdp_file(file.path), ValidationError);
  }
  SUBCASE("malformed header") {
    file.fill("2 one 0.5\n");
    CHECK_THROWS_AS(read_mdp_file(file.path), ValidationError);
  }
  SUBCASE("gamma out of range") {
    file.fill("2 1 1.0\n0 0 1 1.0 0.0\n1 0 1 1.0 1.0\n");
    CHECK_THROWS_AS(read_mdp_file(file.path), ValidationError);
  }
  SUBCASE("successor out of range, line number named") {
    file.fill("2 1 0.5\n0 0 1 1.0 0.0\n1 0 5 1.0 1.0\n");
    try {
      read_mdp_file(file.path);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
  }
  SUBCASE("unnormalized row caught by validation") {
    file.fill("2 1 0.5\n0 0 1 0.7 0.0\n1 0 1 1.0 1.0\n");
    CHECK_THROWS_AS(read_mdp_file(file.path), ValidationError);
  }
}

TEST_CASE("model writer surfaces unwritable paths") {
  const TabularMdp mdp = make_random_mdp(2, 1, 1.0, 0.5, 1);
  CHECK_THROWS_AS(write_mdp_file(mdp, "/nonexistent-dir/out.mdp"), std::runtime_error);
}

TEST_CASE("policy files round-trip and validate their shape") {
  const TempFile file("asyncq_io_policy.txt");
  const Policy policy{2, 0, 1, 1};
  write_policy_file(policy, file.path);
  CHECK(read_policy_file(file.path, 4, 3) == policy);
  CHECK(read_policy_file(file.path, 4) == policy);  // length check only

  SUBCASE("wrong length is rejected with both counts") {
    try {
      read_policy_file(file.path, 5, 3);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      const std::string what = e.what();
      CHECK(what.find('5') != std::string::npos);
      CHECK(what.find('4') != std::string::npos);
    }
    CHECK_THROWS_AS(read_policy_file(file.path, 3, 3), ValidationError);
  }
  SUBCASE("action range is enforced when given") {
    CHECK_THROWS_AS(read_policy_file(file.path, 4, 2), ValidationError);  // entry 2 too big
  }
  SUBCASE("negative and malformed entries are rejected") {
    file.fill("0\n-1\n0\n0\n");
    CHECK_THROWS_AS(read_policy_file(file.path, 4, 3), ValidationError);
    file.fill("0\nnope\n0\n0\n");
    CHECK_THROWS_AS(read_policy_file(file.path, 4, 3), ValidationError);
  }
}
