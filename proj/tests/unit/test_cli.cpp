#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "qcert/cli.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qcert_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& cfg) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << cfg.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json dfe_config() {
  return json::parse(R"({
    "protocol": "dfe", "seed": 7,
    "spec": {"epsilon": 0.05, "delta": 0.05},
    "device": {"n_qubits": 3, "target": {"stabilizer": ["+XXX", "+ZZI", "+IZZ"]}, "seed": 11},
    "params": {"mode": "well_conditioned"}
  })");
}

struct CaptureStderr {
  std::stringstream buf;
  std::streambuf* old = std::cerr.rdbuf(buf.rdbuf());
  ~CaptureStderr() { std::cerr.rdbuf(old); }
};

}  // namespace

TEST_CASE("noiseless dfe run") {
  const auto dir = scratch("dfe");
  qcert::cli::RunOptions o;
  o.config_path = write_config(dir, dfe_config()).string();
  o.out_dir = (dir / "out").string();
  REQUIRE(qcert::cli::run(o) == qcert::cli::kExitOk);
  const json r = json::parse(slurp(dir / "out" / "result.json"));
  CHECK(r["estimate"]["value"].get<double>() == 1.0);
  CHECK(r["seed"] == 7);
  CHECK(r["planned_n"] == 2952);
  CHECK(r["config_hash"].get<std::string>().size() == 16);
  CHECK_FALSE(r.contains("wall_time"));
  CHECK(json::parse(slurp(dir / "out" / "timing.json")).contains("wall_time"));
}

TEST_CASE("rb run writes a fitted decay table") {
  const auto dir = scratch("rb");
  json cfg = json::parse(R"({
    "protocol": "rb", "seed": 3,
    "spec": {"epsilon": 0.01, "delta": 0.05},
    "device": {"n_qubits": 2, "target": {"stabilizer": ["+ZI", "+IZ"]},
               "noise": {"gate": {"type": "depolarizing", "p": 0.95}}, "seed": 5},
    "params": {"lengths": [1, 2, 4, 8, 16, 32, 64, 128], "sequences": 30, "shots": 200}
  })");
  qcert::cli::RunOptions o;
  o.config_path = write_config(dir, cfg).string();
  o.out_dir = dir.string();
  REQUIRE(qcert::cli::run(o) == qcert::cli::kExitOk);
  std::ifstream csv(dir / "rb_curve.csv");
  std::string header, row;
  std::getline(csv, header);
  CHECK(header == "m,survival,stderr,shots,fit,fit_p,fit_A,fit_B");
  int rows = 0;
  while (std::getline(csv, row)) {
    ++rows;
    std::vector<std::string> cols;
    std::stringstream ss(row);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    REQUIRE(cols.size() == 8);
    CHECK(std::abs(std::stod(cols[5]) - 0.95) <= 0.01);
  }
  CHECK(rows == 8);
}

TEST_CASE("validation errors exit with 2 and name the field") {
  const auto dir = scratch("bad");
  json cfg = dfe_config();
  cfg["spec"].erase("delta");
  qcert::cli::RunOptions o;
  o.config_path = write_config(dir, cfg).string();
  o.out_dir = dir.string();
  CaptureStderr err;
  CHECK(qcert::cli::run(o) == qcert::cli::kExitInvalid);
  CHECK(err.buf.str().find("spec.delta") != std::string::npos);

  cfg = dfe_config();
  cfg["device"]["noise"] = json::parse(R"({"gate": {"type": "depolarizing", "p": 7}})");
  o.config_path = write_config(dir, cfg).string();
  CHECK(qcert::cli::run(o) == qcert::cli::kExitInvalid);

  std::ofstream(dir / "broken.json") << "{\n  \"protocol\": \"dfe\",\n  oops\n}";
  o.config_path = (dir / "broken.json").string();
  err.buf.str("");
  CHECK(qcert::cli::run(o) == qcert::cli::kExitInvalid);
  CHECK(err.buf.str().find(":3:") != std::string::npos);

  o.config_path = (dir / "missing.json").string();
  CHECK(qcert::cli::run(o) == qcert::cli::kExitInvalid);
}

TEST_CASE("too few sequence lengths is a config error") {
  const auto dir = scratch("few_lengths");
  json cfg = json::parse(R"({
    "protocol": "rb", "seed": 1, "spec": {"epsilon": 0.01, "delta": 0.05},
    "device": {"n_qubits": 1, "noise": {"gate": {"type": "depolarizing", "p": 0.9}}},
    "params": {"lengths": [4], "sequences": 2, "shots": 10}
  })");
  qcert::cli::RunOptions o;
  o.config_path = write_config(dir, cfg).string();
  o.out_dir = dir.string();
  CaptureStderr err;
  CHECK(qcert::cli::run(o) == qcert::cli::kExitInvalid);
  CHECK(err.buf.str().find("sequence lengths") != std::string::npos);
}

TEST_CASE("fit failure exits with 3") {
  // Survival that drops in one step and then stays flat: A and p are not identifiable.
  const auto dir = scratch("fail");
  json cfg = json::parse(R"({
    "protocol": "rb", "seed": 1, "spec": {"epsilon": 0.01, "delta": 0.05},
    "device": {"n_qubits": 1, "noise": {"gate": {"type": "depolarizing", "p": 0.9}}},
    "params": {"lengths": [1, 2, 4, 8, 16], "sequences": 1, "shots": 10}
  })");
  qcert::cli::RunOptions o;
  o.config_path = write_config(dir, cfg).string();
  o.out_dir = (dir / "sim").string();
  o.save_records_path = (dir / "records.jsonl").string();
  REQUIRE(qcert::cli::run(o) == qcert::cli::kExitOk);

  std::ifstream in(dir / "records.jsonl");
  std::ofstream out(dir / "step.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    json r = json::parse(line);
    const bool first = r["setting_id"].get<std::string>().find(":m1:") != std::string::npos;
    r["counts"] = first ? json{{"0", 10}, {"1", 0}} : json{{"0", 6}, {"1", 4}};
    out << r.dump() << "\n";
    ++n;
  }
  out.close();
  REQUIRE(n == 5);

  qcert::cli::RunOptions replay = o;
  replay.out_dir = (dir / "replay").string();
  replay.save_records_path.reset();
  replay.records_path = (dir / "step.jsonl").string();
  CaptureStderr err;
  CHECK(qcert::cli::run(replay) == qcert::cli::kExitProtocolFailure);
  CHECK(err.buf.str().find("did not converge") != std::string::npos);
}

TEST_CASE("records replay reproduces the result") {
  const auto dir = scratch("records");
  qcert::cli::RunOptions o;
  o.config_path = write_config(dir, dfe_config()).string();
  o.out_dir = (dir / "a").string();
  o.save_records_path = (dir / "records.jsonl").string();
  REQUIRE(qcert::cli::run(o) == 0);
  qcert::cli::RunOptions replay;
  replay.config_path = o.config_path;
  replay.out_dir = (dir / "b").string();
  replay.records_path = o.save_records_path;
  REQUIRE(qcert::cli::run(replay) == 0);
  json a = json::parse(slurp(dir / "a" / "result.json")), b = json::parse(slurp(dir / "b" / "result.json"));
  CHECK(b["source"] == "records");
  a.erase("source");
  b.erase("source");
  CHECK(a == b);
}

TEST_CASE("same seed gives byte-identical results; thread cap does not matter") {
  const auto dir = scratch("repro");
  qcert::cli::RunOptions o;
  o.config_path = write_config(dir, dfe_config()).string();
  o.out_dir = (dir / "one").string();
  o.threads = 1;
  REQUIRE(qcert::cli::run(o) == 0);
  o.out_dir = (dir / "three").string();
  o.threads = 3;
  REQUIRE(qcert::cli::run(o) == 0);
  CHECK(slurp(dir / "one" / "result.json") == slurp(dir / "three" / "result.json"));
  o.seed = 8;
  o.out_dir = (dir / "other").string();
  REQUIRE(qcert::cli::run(o) == 0);
  CHECK(json::parse(slurp(dir / "other" / "result.json"))["seed"] == 8);
}

TEST_CASE("verify") {
  const auto dir = scratch("verify");
  CaptureStderr err;
  CHECK(qcert::cli::verify("no_such_suite", 1, dir.string(), 0) == qcert::cli::kExitInvalid);
  std::stringstream out;
  auto* old = std::cout.rdbuf(out.rdbuf());
  const int rc = qcert::cli::verify("designs", 1, dir.string(), 0);
  std::cout.rdbuf(old);
  CHECK(rc == 0);
  const json r = json::parse(slurp(dir / "designs.json"));
  CHECK(r["pass"] == true);
  CHECK(r["checks"].size() == 4);
}
