#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef _WIN32
#include <sys/wait.h>
#endif

#include <json.hpp>

#ifndef SOMIX_BIN
#error "SOMIX_BIN must point at the built cli binary"
#endif

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(SOMIX_BIN) + " " + args + " > cli_out.log 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
#ifdef _WIN32
  return status;
#else
  return WEXITSTATUS(status);
#endif
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* tiny_config_text =
    "[train]\n"
    "mode = smt\n"
    "seed = 4\n"
    "total_steps = 8\n"
    "warmup_steps = 2\n"
    "batch_size = 32\n"
    "score_subiters = 2\n"
    "checkpoint_path = cli_ckpt.somx\n"
    "metrics_path = cli_metrics.jsonl\n"
    "\n"
    "[generator]\n"
    "hidden = 16,16\n"
    "\n"
    "[score]\n"
    "hidden = 16,16\n"
    "alpha_embed_dim = 8\n"
    "noise_embed_dim = 8\n"
    "disc_hidden = 8\n"
    "\n"
    "[data]\n"
    "name = swiss_roll\n"
    "n = 600\n"
    "noise_std = 0.05\n"
    "holdout_fraction = 0.2\n"
    "seed = 3\n";

struct Workspace {
  Workspace() {
    std::ofstream("cli_config.txt") << tiny_config_text;
  }
  ~Workspace() {
    for (const char* f : {"cli_config.txt", "cli_ckpt.somx", "cli_metrics.jsonl",
                          "cli_samples.csv", "cli_eval.json", "cli_plot.svg", "cli_out.log",
                          "cli_teacher.somx", "cli_teacher_config.txt"})
      fs::remove(f);
  }
};

}  // namespace

TEST_CASE("cli: usage errors exit 2, missing files exit 3") {
  Workspace ws;
  CHECK(run("") == 2);
  CHECK(run("bogus-subcommand") == 2);
  CHECK(run("train") == 2);                            // missing --config
  CHECK(run("train --config no_such_file.txt") == 3);  // unreadable config
  CHECK(run("sample --checkpoint missing.somx --out cli_samples.csv") == 3);
  CHECK(run("--help") == 0);
}

TEST_CASE("cli: train, sample, eval, and plot chain together") {
  Workspace ws;
  REQUIRE(run("train --config cli_config.txt") == 0);
  CHECK(fs::exists("cli_ckpt.somx"));
  CHECK(fs::exists("cli_metrics.jsonl"));

  SUBCASE("sampling zero rows writes only the header") {
    REQUIRE(run("sample --checkpoint cli_ckpt.somx --n 0 --out cli_samples.csv") == 0);
    CHECK(slurp("cli_samples.csv") == "x0,x1\n");
  }

  SUBCASE("sampling, evaluating, and plotting") {
    REQUIRE(run("sample --checkpoint cli_ckpt.somx --n 50 --out cli_samples.csv --seed 1") == 0);
    std::ifstream in("cli_samples.csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 51);

    REQUIRE(run("eval --checkpoint cli_ckpt.somx --dataset-spec cli_config.txt "
                "--out cli_eval.json --n 200") == 0);
    const auto j = nlohmann::json::parse(slurp("cli_eval.json"));
    CHECK(j.contains("energy_distance"));
    CHECK(j.contains("coverage"));

    REQUIRE(run("plot --samples cli_samples.csv --out cli_plot.svg") == 0);
    const auto svg = slurp("cli_plot.svg");
    CHECK(svg.find("<svg") != std::string::npos);
  }
}

TEST_CASE("cli: teacher pretraining feeds distillation") {
  Workspace ws;
  {
    std::string teacher_cfg(tiny_config_text);
    const auto pos = teacher_cfg.find("cli_ckpt.somx");
    teacher_cfg.replace(pos, std::string("cli_ckpt.somx").size(), "cli_teacher.somx");
    std::ofstream("cli_teacher_config.txt") << teacher_cfg;
  }
  REQUIRE(run("pretrain-teacher --config cli_teacher_config.txt") == 0);
  CHECK(fs::exists("cli_teacher.somx"));
  REQUIRE(run("distill --config cli_config.txt --teacher cli_teacher.somx") == 0);
  CHECK(fs::exists("cli_ckpt.somx"));
}
