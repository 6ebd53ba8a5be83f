// End-to-end acceptance run: one line per criterion, nonzero exit if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qcert/suites.hpp"

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs `qcert run` on every shipped config twice, with different thread caps, and compares every
// output file except timing.json byte for byte.
bool reproducibility(std::vector<std::string>& notes) {
  const fs::path work = fs::temp_directory_path() / "qcert_acceptance_repro";
  fs::remove_all(work);
  bool ok = true;
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(QCERT_CONFIG_DIR))
    if (e.path().extension() == ".json" && e.path().filename() != "schema.json") configs.push_back(e.path());
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) {
    notes.push_back("no configs found in " + std::string(QCERT_CONFIG_DIR));
    return false;
  }
  for (const auto& cfg : configs) {
    const std::string name = cfg.stem().string();
    std::vector<fs::path> outs;
    for (int threads : {1, 3}) {
      const fs::path out = work / name / ("t" + std::to_string(threads));
      const std::string cmd = std::string("\"") + QCERT_TOOL + "\" run \"" + cfg.string() + "\" --out \"" + out.string() +
                              "\" --threads " + std::to_string(threads) + " --save-records \"" +
                              (out / "records.jsonl").string() + "\"";
      if (std::system(cmd.c_str()) != 0) {
        notes.push_back(name + ": run failed (" + cmd + ")");
        ok = false;
      }
      outs.push_back(out);
    }
    std::set<std::string> files;
    for (const auto& o : outs)
      if (fs::exists(o))
        for (const auto& e : fs::directory_iterator(o)) files.insert(e.path().filename().string());
    files.erase("timing.json");
    if (!files.count("result.json")) {
      notes.push_back(name + ": no result.json");
      ok = false;
    }
    for (const auto& f : files) {
      if (!fs::exists(outs[0] / f) || !fs::exists(outs[1] / f) || slurp(outs[0] / f) != slurp(outs[1] / f)) {
        notes.push_back(name + "/" + f + " differs between --threads 1 and --threads 3");
        ok = false;
      }
    }
    notes.push_back(name + ": " + std::to_string(files.size()) + " files compared");
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  const auto& ids = qcert::suites::suite_ids();
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  auto selected = [&](int c) { return wanted.empty() || wanted.count(c) > 0; };

  int failures = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int criterion = static_cast<int>(i) + 1;
    if (!selected(criterion)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = qcert::suites::run_suite(ids[i], kSeed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& c : report.checks)
      std::printf("    %-4s %-60s measured %-12.6g expected %-12.6g %s\n", c.pass ? "ok" : "FAIL", c.name.c_str(),
                  c.measured, c.expected, c.rule.c_str());
    std::printf("criterion %2d (%s): %s  [%.1fs]\n", criterion, ids[i].c_str(), report.passed() ? "PASS" : "FAIL", secs);
    std::fflush(stdout);
    if (!report.passed()) ++failures;
  }

  if (selected(13)) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> notes;
    const bool ok = reproducibility(notes);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& n : notes) std::printf("    %s\n", n.c_str());
    std::printf("criterion 13 (reproducibility): %s  [%.1fs]\n", ok ? "PASS" : "FAIL", secs);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
