#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "store_support.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(IMPRINT_CTL) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const fs::path& path, const std::string& content) { std::ofstream(path, std::ios::binary) << content; }

}  // namespace

TEST_CASE("command line export is gated and fail-closed") {
  const fs::path dir = test_support::scratch_dir("cli");
  const auto store = (dir / "store").string();
  const std::string fx = IMPRINT_FIXTURE_DIR;
  REQUIRE(run("--store " + store + " init --publisher " + fx + "/xynapse/publisher.json --imprint " + fx +
              "/xynapse/imprint.json --approve-token s3cret") == 0);

  auto good = test_support::small_title();
  auto bad = test_support::small_title("9798886450026", 2);
  write(dir / "good.json", good.config);
  write(dir / "good_q.json", good.quotations);
  write(dir / "good_c.json", good.corpus);
  write(dir / "bad.json", bad.config);
  write(dir / "bad_q.json", bad.quotations);
  write(dir / "bad_c.json", bad.corpus);
  const auto s = "--store " + store + " ";
  REQUIRE(run(s + "title add good --config " + (dir / "good.json").string() + " --quotations " +
              (dir / "good_q.json").string() + " --corpus " + (dir / "good_c.json").string()) == 0);
  REQUIRE(run(s + "title add bad --config " + (dir / "bad.json").string() + " --quotations " +
              (dir / "bad_q.json").string() + " --corpus " + (dir / "bad_c.json").string()) == 0);

  CHECK(run(s + "qa verify good") == 0);
  CHECK(run(s + "qa verify bad") == 1);
  CHECK(run(s + "qa readiness bad") == 1);

  CHECK(run(s + "export csv good --actor editor") == 3);
  CHECK(run(s + "export csv good --approve-token wrong --actor editor") == 3);
  CHECK(run(s + "export csv bad --approve-token s3cret --actor editor") == 1);
  CHECK(fs::is_empty(dir / "store" / "exports"));
  CHECK(run(s + "export csv good --approve-token s3cret --actor editor") == 0);
  CHECK(fs::exists(dir / "store" / "exports" / "EXP-0001.csv"));

  CHECK(run(s + "cycle run --seed 3") == 0);
  std::string flagged, archived;
  {
    std::ifstream in(dir / "store" / "snapshot.json");
    auto snap = nlohmann::json::parse(in);
    for (const auto& p : snap["archive"]["proposals"]) {
      if (p["status"] == "flagged" && flagged.empty()) flagged = p["id"];
      if (p["status"] == "archived" && archived.empty()) archived = p["id"];
    }
  }
  REQUIRE_FALSE(flagged.empty());
  REQUIRE_FALSE(archived.empty());
  CHECK(run(s + "decide " + flagged + " --action reject --actor editor") == 2);
  CHECK(run(s + "decide " + archived + " --action approve --actor editor") == 5);
  CHECK(run(s + "decide " + flagged + " --action approve --actor editor") == 0);
  CHECK(run(s + "decide " + flagged + " --action approve --actor editor") == 5);
  CHECK(run(s + "decide NOPE --action approve --actor editor") == 4);
  CHECK(run(s + "codex build good") == 0);
  CHECK(fs::exists(dir / "store" / "titles" / "good" / "build" / "interior.tex"));
  CHECK(run(s + "status") == 0);
}

TEST_CASE("config validate exit status") {
  const std::string fx = IMPRINT_FIXTURE_DIR;
  const fs::path dir = test_support::scratch_dir("cli_config");
  CHECK(run("config validate " + fx + "/xynapse/publisher.json " + fx + "/xynapse/imprint.json " + fx +
            "/xynapse/title.json") == 0);
  auto title = nlohmann::json::parse(test_support::fixture("xynapse/title.json"));
  title["pricing"]["wholesale_discount_pct"] = 140;
  write(dir / "title.json", title.dump());
  CHECK(run("config validate " + fx + "/xynapse/publisher.json " + fx + "/xynapse/imprint.json " +
            (dir / "title.json").string()) == 1);
}
