#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "chainlik/error.hpp"
#include "chainlik_cli/config.hpp"
#include "chainlik_cli/report.hpp"

namespace chainlik::cli {
namespace {

using nlohmann::json;

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Io;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

RunConfig sample_config() {
  RunConfig c;
  c.model = {Family::Kimura4, 0, std::nullopt};
  c.theta = (Vector(4) << 0.027, 0.041, 0.123, 0.128).finished();
  c.method = Method::ql(3);
  c.fit.n_starts = 7;
  c.fit.start_points.push_back((Vector(4) << 0.05, 0.05, 0.1, 0.1).finished());
  c.seed = 42;
  c.n = 1234;
  c.reps = 17;
  c.input = "in.txt";
  c.output = "out.txt";
  return c;
}

TEST(Config, JsonRoundTrip) {
  const RunConfig c = sample_config();
  EXPECT_EQ(config_from_json(to_json(c)), c);
  RunConfig k;
  k.model = {Family::Equicorrelation, 3, (Vector(3) << 0.3, 0.6, 0.1).finished()};
  k.theta = (Vector(1) << 0.4).finished();
  k.allow_periodic = true;
  EXPECT_EQ(config_from_json(to_json(k)), k);
}

TEST(Config, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "chainlik_test_config";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "run.json").string();
  save_config(sample_config(), path);
  EXPECT_EQ(load_config(path), sample_config());
  EXPECT_THROW(load_config((dir / "missing.json").string()), Error);
  write_text(dir / "broken.json", "{\"model\": ");
  EXPECT_EQ(code_of([&] { load_config((dir / "broken.json").string()); }), Errc::Config);
  std::filesystem::remove_all(dir);
}

TEST(Config, MinimalConfigUsesDefaults) {
  const RunConfig c = config_from_json(json::parse(R"({"model": {"family": "ising-1d"}})"));
  EXPECT_EQ(c.model.family, Family::Ising1D);
  EXPECT_FALSE(c.theta.has_value());
  EXPECT_EQ(c.method, Method::ml());
  EXPECT_EQ(c.fit.n_starts, FitOptions{}.n_starts);
}

TEST(Config, RejectsBadInput) {
  const auto bad = [](const char* text) { return code_of([&] { config_from_json(json::parse(text)); }); };
  EXPECT_EQ(bad(R"({})"), Errc::Config);
  EXPECT_EQ(bad(R"({"model": {}})"), Errc::Config);
  EXPECT_EQ(bad(R"({"model": {"family": "kimura5"}})"), Errc::Config);
  EXPECT_EQ(bad(R"({"model": {"family": "kimura4"}, "thetta": [1]})"), Errc::Config);
  EXPECT_EQ(bad(R"({"model": {"family": "kimura4", "size": 3}})"), Errc::Config);
  EXPECT_EQ(bad(R"({"model": {"family": "kimura4"}, "fit": {"n_start": 3}})"), Errc::Config);
  EXPECT_EQ(bad(R"({"model": {"family": "kimura4"}, "seed": "one"})"), Errc::Config);
  EXPECT_EQ(bad(R"({"model": {"family": "kimura4"}, "method": "reml"})"), Errc::Config);
  EXPECT_EQ(bad(R"({"model": {"family": "kimura4"}, "theta": [0.1, "x"]})"), Errc::Config);
}

TEST(Config, ValidateChecksThetaAndModel) {
  RunConfig c = sample_config();
  EXPECT_NO_THROW(c.validate());
  c.theta = (Vector(2) << 0.1, 0.1).finished();
  EXPECT_EQ(code_of([&] { c.validate(); }), Errc::Config);
  c.theta = (Vector(4) << 0.3, 0.04, 0.5, 0.1).finished();
  EXPECT_EQ(code_of([&] { c.validate(); }), Errc::Config);
  c = sample_config();
  c.model = {Family::ReflectingWalk, 2, std::nullopt};
  c.theta.reset();
  EXPECT_EQ(code_of([&] { c.validate(); }), Errc::Config);
  c = sample_config();
  c.fit.start_points[0] = (Vector(4) << 0.3, 0.04, 0.5, 0.1).finished();
  EXPECT_EQ(code_of([&] { c.validate(); }), Errc::Config);
}

TEST(Config, ParseVector) {
  EXPECT_EQ(parse_vector("0.1, 0.2,0.3"), (Vector(3) << 0.1, 0.2, 0.3).finished());
  EXPECT_EQ(parse_vector("-1e-3"), (Vector(1) << -1e-3).finished());
  EXPECT_EQ(code_of([] { parse_vector("0.1,,0.2"); }), Errc::Config);
  EXPECT_EQ(code_of([] { parse_vector("abc"); }), Errc::Config);
}

TEST(Report, MachineNumbersRoundTrip) {
  for (const double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, std::numeric_limits<double>::max()}) {
    EXPECT_EQ(std::stod(fmt_machine(v)), v);
  }
  EXPECT_EQ(fmt_human(0.123456), "0.1235");
  EXPECT_EQ(fmt_human(12345.678, 6), "12345.7");
}

TEST(Report, CsvRoundTrip) {
  CsvTable t({"name", "value", "note"});
  t.add_row({"a", fmt_machine(0.1), ""});
  t.add_row({"b,c", fmt_machine(-3.0), "says \"hi\""});
  const CsvTable back = CsvTable::parse(t.to_csv());
  EXPECT_EQ(back.header(), t.header());
  EXPECT_EQ(back.rows(), t.rows());
  EXPECT_EQ(back.column("note"), 2u);
  EXPECT_EQ(code_of([&] { back.column("missing"); }), Errc::InvalidArgument);
  EXPECT_EQ(code_of([&] { t.add_row({"short"}); }), Errc::InvalidArgument);
}

TEST(Report, HumanTableAligns) {
  CsvTable t({"p", "sd"});
  t.add_row({"alpha", fmt_machine(0.15371234)});
  t.add_row({"b", "-"});
  const std::string h = t.to_human();
  EXPECT_NE(h.find("alpha  0.1537"), std::string::npos) << h;
  EXPECT_NE(h.find("b      -"), std::string::npos) << h;
}

TEST(Report, KeyValueRoundTrip) {
  KeyValueDoc d;
  d.add("model", "kimura4");
  d.add("theta.alpha", 0.027);
  d.add("message", "converged after 12 iterations");
  const KeyValueDoc back = KeyValueDoc::parse(d.to_string());
  EXPECT_EQ(back.items(), d.items());
  EXPECT_EQ(std::stod(back.get("theta.alpha")), 0.027);
  EXPECT_EQ(code_of([&] { back.get("nope"); }), Errc::InvalidArgument);
}

}  // namespace
}  // namespace chainlik::cli
