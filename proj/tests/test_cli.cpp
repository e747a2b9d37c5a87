#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#ifndef CHAINLAB_CLI
#error "CHAINLAB_CLI must name the CLI binary"
#endif

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

struct ScratchDir {
  fs::path path = fs::temp_directory_path() / ("chainlab_cli_test_" + std::to_string(::getpid()));
  ScratchDir() { fs::create_directories(path); }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

fs::path workdir() {
  static const ScratchDir dir;
  return dir.path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_file(const std::string& name, const std::string& content) {
  const fs::path p = workdir() / name;
  std::ofstream(p, std::ios::binary) << content;
  return p;
}

Run run(const std::string& args) {
  const fs::path out = workdir() / "stdout.txt", err = workdir() / "stderr.txt";
  const std::string cmd = std::string("\"") + CHAINLAB_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string triangle() {
  return write_file("tri.json", R"({"labels": ["a", "b", "c"], "rates": [[-2, 1, 1], [1, -2, 1], [1, 1, -2]]})")
      .string();
}

std::string normalized_triangle() {
  const fs::path p = workdir() / "tri_norm.json";
  REQUIRE(run("normalize " + triangle() + " --out " + p.string()).code == 0);
  return p.string();
}

}  // namespace

TEST_CASE("parsing chain files") {
  const Run ok = run("validate " + triangle());
  CHECK(ok.code == 0);
  CHECK(ok.out.find("states,3") != std::string::npos);
  CHECK(ok.out.find("pi(b),") != std::string::npos);

  const Run ragged = run("validate " + write_file("ragged.json", R"({"labels":["a","b"],"rates":[[-1,1],[1]]})").string());
  CHECK(ragged.code == 2);
  CHECK(ragged.err.find("ParseError") != std::string::npos);
  CHECK(ragged.err.find("row 1") != std::string::npos);

  const Run malformed = run("validate " + write_file("malformed.json", "{\"rates\": [[-1, 1],\n [1, -1]").string());
  CHECK(malformed.code == 2);
  CHECK(malformed.err.find("line 2") != std::string::npos);

  const Run rowsum = run("validate " + write_file("rowsum.json", R"({"rates":[[-1,1],[2,-1]]})").string());
  CHECK(rowsum.code == 1);
  CHECK(rowsum.err.find("RowSumViolation") != std::string::npos);
  CHECK(rowsum.err.find("row 1") != std::string::npos);

  CHECK(run("validate " + (workdir() / "missing.json").string()).code == 2);
}

TEST_CASE("exit codes") {
  const std::string norm = normalized_triangle();
  const Run axioms = run("axioms " + norm);
  CHECK(axioms.code == 0);
  CHECK(axioms.out.find("FAIL") == std::string::npos);
  CHECK(axioms.out.find("PASS") != std::string::npos);

  const Run two = run("normalize " + write_file("two.json", R"({"rates":[[-1,1],[1,-1]]})").string());
  CHECK(two.code == 1);
  CHECK(two.err.find("Degenerate") != std::string::npos);
  CHECK(two.err.find('\n') == two.err.size() - 1);

  CHECK(run("frobnicate").code == 2);
  CHECK(run("").code == 2);
  CHECK(run("mixing " + norm + " --times abc").code == 2);
  CHECK(run("family torus").code == 1);
  CHECK(run("--help").code == 0);
}

TEST_CASE("artifact headers and atomic output") {
  const std::string norm = normalized_triangle();
  const fs::path out = workdir() / "mixing.csv";
  CHECK(run("mixing " + norm + " --times 0.5,1 --out " + out.string()).code == 0);
  const std::string csv = slurp(out);
  CHECK(csv.rfind("# tool: chainlab ", 0) == 0);
  CHECK(csv.find("# subcommand: mixing\n") != std::string::npos);
  CHECK(csv.find("# param times: 0.5,1\n") != std::string::npos);
  CHECK(csv.find("# seed: 0\n") != std::string::npos);
  CHECK(csv.find("\nt,G\n") != std::string::npos);
  CHECK(csv.find("\n1,2") != std::string::npos);
  for (const auto& entry : fs::directory_iterator(workdir()))
    CHECK(entry.path().filename().string().find(".tmp.") == std::string::npos);

  const std::string chain_json = slurp(norm);
  CHECK(chain_json.find("\"meta\"") != std::string::npos);
  CHECK(run("validate " + norm).code == 0);
}

TEST_CASE("randomized commands are byte identical for a fixed seed") {
  const std::string norm = normalized_triangle();
  const char* commands[] = {
      "sample {} --k 3 --times 0.5,1 --replicates 20 --seed 11",
      "compare {} {} --k 2 --replicates 200 --seed 5",
      "reconstruct {} --n 60 --seed 9",
      "roundtrip {} --n 50,100 --seeds 2 --seed 4",
  };
  for (std::string cmd : commands) {
    for (auto pos = cmd.find("{}"); pos != std::string::npos; pos = cmd.find("{}")) cmd.replace(pos, 2, norm);
    const fs::path a = workdir() / "a.out", b = workdir() / "b.out";
    CHECK(run(cmd + " --out " + a.string()).code == 0);
    CHECK(run(cmd + " --out " + b.string()).code == 0);
    CHECK_MESSAGE(slurp(a) == slurp(b), cmd);
    CHECK(!slurp(a).empty());
  }
  const Run r1 = run("roundtrip " + norm + " --n 200 --seed 7");
  const Run r2 = run("roundtrip " + norm + " --n 200 --seed 7");
  CHECK(r1.code == 0);
  CHECK(r1.out == r2.out);
  CHECK(r1.out.find("# seed: 7\n") != std::string::npos);
  CHECK(run("sample " + norm + " --seed 1").out != run("sample " + norm + " --seed 2").out);
}

TEST_CASE("analysis subcommands") {
  const std::string norm = normalized_triangle();
  CHECK(run("spectrum " + norm).out.find("index,eigenvalue") != std::string::npos);
  CHECK(run("spectrum " + norm + " --types").code == 0);
  CHECK(run("kernel " + norm).out.find("t,x,y,p") != std::string::npos);
  CHECK(run("twins " + norm).out.find("block,state,label") != std::string::npos);

  const Run fam = run("family two_point --n 1,10 --times 1");
  CHECK(fam.code == 0);
  CHECK(fam.out.find("1.8187307530779") != std::string::npos);
  const Run cutoff = run("family hypercube --mode cutoff --n 4,5,6,7,8");
  CHECK(cutoff.code == 0);
  CHECK(cutoff.out.find("cutoff_evidence: yes") != std::string::npos);
  CHECK(run("family four_point --mode cutoff").code == 1);
  const Run fp = run("family four_point --mode cutoff --normalize");
  CHECK(fp.code == 0);
  CHECK(fp.out.find("cutoff_evidence: no") != std::string::npos);
  CHECK(run("family two_point --mode bounded").out.find("anomalous: yes") != std::string::npos);
  CHECK(run("family four_point --mode tail --k 1 --times 1").code == 0);
}
