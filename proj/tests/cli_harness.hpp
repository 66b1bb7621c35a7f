#pragma once

#include <filesystem>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "zosd/eval.hpp"
#include "zosd/store.hpp"

namespace zosd::test_support {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

inline CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("zosd_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Writes `splits` as JSON files into `dir`; returns "--split PATH" argument pairs.
inline std::vector<std::string> write_splits(const std::vector<SplitSpec>& splits, const std::filesystem::path& dir) {
  std::vector<std::string> args;
  for (const auto& s : splits) {
    const auto path = dir / (s.name + ".json");
    write_split(s, path);
    args.push_back("--split");
    args.push_back(path.string());
  }
  return args;
}

inline std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace zosd::test_support
