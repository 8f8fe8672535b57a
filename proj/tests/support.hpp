#pragma once
// Shared fixtures for the unit tests.

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "axdse/axdse.hpp"

namespace axdse::testing {

inline const OperatorCatalog& shipped_catalog() {
  static const OperatorCatalog cat = load_catalog_file(default_catalog_path());
  return cat;
}

inline const OperatorCatalog& catalog8() {
  static const OperatorCatalog cat = shipped_catalog().for_widths(8, 8);
  return cat;
}

inline const OperatorSpec& find_spec(const OperatorCatalog& cat, const std::string& name) {
  for (const auto* list : {&cat.adders, &cat.multipliers})
    for (const auto& s : *list)
      if (s.name == name) return s;
  throw std::runtime_error("no operator " + name);
}

// Calibrated 8-bit models, computed once per test binary.
inline const std::vector<FunctionalModel>& adder_models8() {
  static const std::vector<FunctionalModel> m = [] {
    std::vector<FunctionalModel> out;
    for (const auto& s : catalog8().adders) out.push_back(calibrate(s));
    return out;
  }();
  return m;
}

inline const std::vector<FunctionalModel>& mul_models8() {
  static const std::vector<FunctionalModel> m = [] {
    std::vector<FunctionalModel> out;
    for (const auto& s : catalog8().multipliers) out.push_back(calibrate(s));
    return out;
  }();
  return m;
}

inline Environment make_env(BenchmarkProgram program, EnvOptions opts = {}) {
  return Environment::with_baseline(std::move(program), catalog8(), adder_models8(),
                                    mul_models8(), opts);
}

// Toy benchmark setting: 3 adders and 3 multipliers, precise first.
inline const OperatorCatalog& toy_catalog() {
  static const OperatorCatalog cat =
      catalog8().subset({"1HG", "6R6", "02Y"}, {"1JJQ", "L93", "17MJ"});
  return cat;
}

inline Environment make_toy_env() {
  static const auto models = [] {
    std::pair<std::vector<FunctionalModel>, std::vector<FunctionalModel>> m;
    for (const auto& s : toy_catalog().adders) m.first.push_back(calibrate(s));
    for (const auto& s : toy_catalog().multipliers) m.second.push_back(calibrate(s));
    return m;
  }();
  return Environment::with_baseline(BenchmarkProgram::toy(), toy_catalog(), models.first,
                                    models.second);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("axdse-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

}  // namespace axdse::testing
