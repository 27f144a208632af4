// Acceptance gate: runs the criterion checks and prints one PASS/FAIL line
// per criterion. Exit 0 only if every selected criterion passes.
//
//   acceptance [--only id...] [--work-dir dir]

#include <cstdlib>
#include <cstring>
#include <iostream>

#include "somix/verify.hpp"

int main(int argc, char** argv) {
  somix::verify::Options opts;
  opts.progress = &std::cout;
  opts.work_dir = "acceptance_work";
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--only")) {
      while (i + 1 < argc && argv[i + 1][0] != '-') opts.only.push_back(std::atoi(argv[++i]));
    } else if (!std::strcmp(argv[i], "--work-dir") && i + 1 < argc) {
      opts.work_dir = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--only id...] [--work-dir dir]\n";
      return 2;
    }
  }
  const auto results = somix::verify::run_checks(opts);
  bool all = true;
  for (const auto& r : results) all = all && r.pass;
  return all ? 0 : 1;
}
