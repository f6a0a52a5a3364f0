#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fracheat/gridfile.hpp"
#include "fracheat/harness.hpp"
#include "fracheat/rng.hpp"

using namespace fracheat;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

fs::path temp_dir(const char *tag) {
  fs::path p = fs::temp_directory_path() / (std::string("fracheat_test_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

} // namespace

TEST_CASE("config parsing") {
  SUBCASE("sections, comments and overridable top-level keys") {
    ExperimentConfig cfg = parse_config_text("# comment\n"
                                             "kind = sample\n"
                                             "seed = 99\n"
                                             "[sample]\n"
                                             "H1 = 0.5\n"
                                             "H2 = 0.8 \n");
    CHECK(cfg.kind == "sample");
    CHECK(cfg.seed == 99);
    CHECK(cfg.require_double("sample.H1") == 0.5);
    CHECK(cfg.get_double("sample.n", 4) == 4);
  }
  SUBCASE("missing kind rejected") { CHECK_THROWS_AS(parse_config_text("seed = 1\n"), Error); }
  SUBCASE("malformed line rejected") {
    CHECK_THROWS_AS(parse_config_text("kind = sample\nnonsense\n"), Error);
  }
  SUBCASE("duplicate keys rejected") {
    CHECK_THROWS_AS(parse_config_text("kind = s\n[a]\nx = 1\nx = 2\n"), Error);
  }
  SUBCASE("unknown top-level key rejected") {
    CHECK_THROWS_AS(parse_config_text("kind = sample\nbogus = 1\n"), Error);
  }
}

TEST_CASE("grid file") {
  fs::path dir = temp_dir("gridfile");

  SUBCASE("random field round-trips bit for bit") {
    SpaceTimeGrid g(0, 1, 17, -1, 1, 9);
    GriddedField f(g);
    for (size_t i = 0; i < g.nt(); ++i)
      for (size_t j = 0; j < g.nx(); ++j)
        f.at(i, j) = standard_gaussian(1, uint32_t(i), uint32_t(j), 0, 0);
    std::string path = (dir / "field.fhgrid").string();
    write_field(path, f);
    GriddedField back = read_field(path);
    CHECK(back.grid() == f.grid());
    CHECK(back.values() == f.values());
  }
  SUBCASE("minimal 2 x 2 grid") {
    SpaceTimeGrid g(0, 1, 2, 0, 1, 2);
    GriddedField f(g, {1.0, 2.0, 3.0, 4.0});
    std::string path = (dir / "tiny.fhgrid").string();
    write_field(path, f);
    CHECK(read_field(path).values() == f.values());
  }
  SUBCASE("truncation is caught by the checksum, no crash") {
    SpaceTimeGrid g(0, 1, 4, 0, 1, 4);
    GriddedField f(g);
    std::string path = (dir / "trunc.fhgrid").string();
    write_field(path, f);
    std::string bytes = slurp(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(bytes.size() - 9));
    out.close();
    CHECK_THROWS_AS(read_field(path), Error);
  }
  SUBCASE("corrupted payload is caught by the checksum") {
    SpaceTimeGrid g(0, 1, 4, 0, 1, 4);
    GriddedField f(g);
    f.at(1, 1) = 7.0;
    std::string path = (dir / "corrupt.fhgrid").string();
    write_field(path, f);
    std::string bytes = slurp(path);
    bytes[bytes.size() / 2] ^= 0x40;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.close();
    CHECK_THROWS_WITH_AS(read_field(path), doctest::Contains("checksum"), Error);
  }
  SUBCASE("foreign file rejected") {
    std::string path = (dir / "foreign.bin").string();
    std::ofstream out(path, std::ios::binary);
    out << "NOTAGRIDFILE and some more bytes to pass the size check ......";
    out.close();
    CHECK_THROWS_AS(read_grid_file(path), Error);
  }
}

TEST_CASE("experiment runs") {
  SUBCASE("byte-identical reruns under a fixed seed") {
    auto make_cfg = [&](const std::string &out) {
      ExperimentConfig cfg = parse_config_text("kind = sample\n"
                                               "seed = 12\n"
                                               "[sample]\n"
                                               "H1 = 0.5\n"
                                               "H2 = 0.8\n"
                                               "n = 2\n"
                                               "density = area\n"
                                               "field = noise\n"
                                               "nt = 17\n"
                                               "nx = 17\n");
      cfg.out_dir = out;
      return cfg;
    };
    fs::path d1 = temp_dir("run_a"), d2 = temp_dir("run_b");
    run(make_cfg(d1.string()));
    run(make_cfg(d2.string()));
    CHECK(slurp((d1 / "field.fhgrid").string()) == slurp((d2 / "field.fhgrid").string()));
    CHECK(slurp((d1 / "summary.csv").string()) == slurp((d2 / "summary.csv").string()));
  }
  SUBCASE("missing required key rejected with no partial outputs") {
    fs::path dir = temp_dir("run_invalid");
    ExperimentConfig cfg = parse_config_text("kind = sample\n[sample]\nH1 = 0.5\n");
    cfg.out_dir = dir.string();
    CHECK_THROWS_WITH_AS(run(cfg), doctest::Contains("H2"), Error);
    CHECK(!fs::exists(dir / "manifest.txt"));
    CHECK(!fs::exists(dir / "field.fhgrid"));
    CHECK(!fs::exists(dir / "summary.csv"));
  }
  SUBCASE("unknown section key rejected") {
    ExperimentConfig cfg =
        parse_config_text("kind = sample\n[sample]\nH1 = 0.5\nH2 = 0.8\nwhatever = 3\n");
    cfg.out_dir = temp_dir("run_unknown").string();
    CHECK_THROWS_WITH_AS(run(cfg), doctest::Contains("unknown key"), Error);
  }
  SUBCASE("manifest echoes the resolved configuration") {
    fs::path dir = temp_dir("run_manifest");
    ExperimentConfig cfg = parse_config_text("kind = sample\n"
                                             "seed = 3\n"
                                             "[sample]\n"
                                             "H1 = 0.6\n"
                                             "H2 = 0.7\n"
                                             "n = 1\n"
                                             "density = area\n"
                                             "nt = 9\n"
                                             "nx = 9\n");
    cfg.out_dir = dir.string();
    run(cfg);
    std::string manifest = slurp((dir / "manifest.txt").string());
    CHECK(manifest.find("kind = sample") != std::string::npos);
    CHECK(manifest.find("seed = 3") != std::string::npos);
    CHECK(manifest.find("H1 = 0.6") != std::string::npos);
    // the manifest itself parses back to the same configuration
    ExperimentConfig echo = parse_config_text(manifest);
    CHECK(echo.kind == cfg.kind);
    CHECK(echo.seed == cfg.seed);
    CHECK(echo.keys == cfg.keys);
  }
}
