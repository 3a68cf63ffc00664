#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include <smoothctl/awg.hpp>
#include <smoothctl/builtin.hpp>
#include <smoothctl/cli.hpp>
#include <smoothctl/io.hpp>
#include <smoothctl/manifest.hpp>
#include <smoothctl/plot.hpp>

using namespace smoothctl;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("smoothctl_" + std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  struct Run {
    int code;
    std::string out, err;
  };
  static Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli_dispatch(args, out, err);
    return {code, out.str(), err.str()};
  }

  fs::path dir_;
};

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

std::string fixture(const char* name) { return std::string(SMOOTHCTL_FIXTURES) + "/" + name; }

FourierEnvelope random_envelope(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3e6, 3e6);
  std::vector<double> x(7), y(7);
  for (auto& v : x) v = u(rng);
  for (auto& v : y) v = u(rng);
  return FourierEnvelope::with_default_fundamental(400e-9, x, y);
}

}  // namespace

using PulseJson = TempDir;

TEST_F(PulseJson, RoundTripIsByteIdentical) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const std::string first = io::pulse_to_json("p", random_envelope(seed));
    const auto loaded = io::pulse_from_json(first);
    EXPECT_EQ(io::pulse_to_json(loaded.name, loaded.envelope), first);
  }
  for (const auto& name : builtin::names()) {
    io::save_pulse(path("a.json"), name, builtin::envelope(name));
    const auto p = io::load_pulse(path("a.json"));
    io::save_pulse(path("b.json"), p.name, p.envelope);
    EXPECT_EQ(io::read_file(path("a.json")), io::read_file(path("b.json"))) << name;
    EXPECT_EQ(p.envelope.coeffs_x_hz, builtin::envelope(name).coeffs_x_hz);
  }
}

TEST_F(PulseJson, FixturesMatchBuiltins) {
  for (const char* name : {"pi", "pi2_y", "pi_x"}) {
    const std::string text = io::read_file(fixture(("pulse_" + std::string(name) + ".json").c_str()));
    EXPECT_EQ(text, io::pulse_to_json(name, builtin::envelope(name))) << name;
  }
}

TEST(PulseJsonErrors, MalformedInputIsFormatError) {
  EXPECT_THROW(io::pulse_from_json("{"), FormatError);
  EXPECT_THROW(io::pulse_from_json(R"({"name":"x"})"), FormatError);
  EXPECT_THROW(io::pulse_from_json(
                   R"({"name":"x","duration_s":-1,"fundamental_hz":1,"coeffs_x_hz":[1],"coeffs_y_hz":[1]})"),
               FormatError);
  EXPECT_THROW(io::chi_from_json(R"({"basis":["I","X","Y","Z"],"re":[],"im":[]})"), FormatError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(io::format_double(-2.354e6), "-2354000");
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e7, 1e7);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(std::stod(io::format_double(v)), v);
  }
}

TEST(Quantities, UnitSuffixes) {
  using io::Dimension;
  EXPECT_DOUBLE_EQ(io::parse_quantity("10MHz", Dimension::frequency), 10e6);
  EXPECT_DOUBLE_EQ(io::parse_quantity("500ns", Dimension::time), 500e-9);
  EXPECT_DOUBLE_EQ(io::parse_quantity("1.2us", Dimension::time), 1.2e-6);
  EXPECT_DOUBLE_EQ(io::parse_quantity("2mT", Dimension::field), 2e-3);
  EXPECT_DOUBLE_EQ(io::parse_quantity("-4e6", Dimension::frequency), -4e6);
  EXPECT_THROW(io::parse_quantity("10ns", Dimension::frequency), DomainError);
  EXPECT_THROW(io::parse_quantity("10parsecs", Dimension::time), DomainError);
  EXPECT_THROW(io::parse_quantity("abc", Dimension::time), DomainError);
}

TEST(Quantities, Ranges) {
  using io::Dimension;
  const auto r = io::parse_range("-10MHz:10MHz:81", Dimension::frequency);
  ASSERT_EQ(r.size(), 81u);
  EXPECT_DOUBLE_EQ(r.front(), -10e6);
  EXPECT_DOUBLE_EQ(r.back(), 10e6);
  EXPECT_DOUBLE_EQ(r[40], 0.0);
  EXPECT_EQ(io::parse_list("0.8,1,1.2", Dimension::dimensionless), (std::vector<double>{0.8, 1.0, 1.2}));
  EXPECT_THROW(io::parse_range("1:2", Dimension::dimensionless), DomainError);
  EXPECT_THROW(io::parse_range("1:2:0", Dimension::dimensionless), DomainError);
}

using Csv = TempDir;

TEST_F(Csv, HeadersAndRowCounts) {
  const ControlProgram prog(builtin::pi());
  const auto traj = bloch_trajectory(prog, {}, ket::zero(), 11);
  const std::string t = io::trajectory_csv(traj);
  EXPECT_EQ(t.substr(0, t.find('\n')), "time_s,sx,sy,sz");
  EXPECT_EQ(count_lines(t), 12u);

  const auto land = landscape(prog, TargetSpec::flip(), {-1e6, 0.0, 1e6}, {0.9, 1.1});
  const std::string l = io::landscape_csv(land);
  EXPECT_EQ(l.substr(0, l.find('\n')), "detuning_hz,amplitude_scale,fidelity");
  EXPECT_EQ(count_lines(l), 7u);
  io::write_atomic(path("l.csv"), l);
  const auto rows = io::read_numeric_csv(path("l.csv"), io::kLandscapeHeader);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_DOUBLE_EQ(rows[1][0], -1e6);  // detuning outer, scale inner
  EXPECT_DOUBLE_EQ(rows[1][1], 1.1);
  EXPECT_DOUBLE_EQ(rows[1][2], land.at(0, 1));
  EXPECT_THROW(io::read_numeric_csv(path("l.csv"), io::kTrajectoryHeader), FormatError);
}

TEST_F(Csv, WriteAtomicLeavesNoTemporaries) {
  io::write_atomic(path("x.txt"), "one");
  io::write_atomic(path("x.txt"), "two");
  EXPECT_EQ(io::read_file(path("x.txt")), "two");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_)) ++files;
  EXPECT_EQ(files, 1);
}

TEST(Awg, PiPulseSampleCount) {
  const auto t = export_awg(ControlProgram(builtin::pi()), {});
  EXPECT_EQ(t.size(), 100u);
  EXPECT_EQ(t.q_code.size(), 100u);
}

TEST(Awg, PiPulseStartsAndEndsAtZero) {
  const auto t = export_awg(ControlProgram(builtin::pi()), {});
  EXPECT_EQ(t.i_code.front(), 0);
  EXPECT_EQ(t.q_code.front(), 0);
  EXPECT_EQ(t.i_code.back(), 0);
  EXPECT_EQ(t.q_code.back(), 0);
}

TEST(Awg, ZeroPulseGivesZeroCodes) {
  const auto env = FourierEnvelope::with_default_fundamental(300e-9, {0.0, 0.0}, {0.0, 0.0});
  const auto t = export_awg(ControlProgram(env), {});
  EXPECT_EQ(t.size(), 60u);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(t.i_code[i], 0);
    EXPECT_EQ(t.q_code[i], 0);
  }
}

TEST(Awg, FullScaleAtPeakReachesTopCode) {
  // a single harmonic peaks at t = T / 2, which lies on the odd-count grid
  const auto env = FourierEnvelope::with_default_fundamental(505e-9, {3e6}, {0.0});
  const ControlProgram prog(env);
  AwgExportConfig cfg;
  cfg.full_scale = max_rabi(prog);
  const auto t = export_awg(prog, cfg);
  int peak = 0;
  for (auto c : t.i_code) peak = std::max(peak, std::abs(static_cast<int>(c)));
  EXPECT_EQ(peak, (1 << 13) - 1);

  cfg.bit_depth = 8;
  const auto t8 = export_awg(prog, cfg);
  EXPECT_EQ(*std::max_element(t8.i_code.begin(), t8.i_code.end()), 127);
}

TEST(Awg, BuiltinPiAtSampledPeak) {
  const ControlProgram prog(builtin::pi());
  AwgExportConfig cfg;
  cfg.full_scale = max_rabi(prog);
  auto peak_code = [](const AwgTable& t) {
    int peak = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
      peak = std::max({peak, std::abs(static_cast<int>(t.i_code[i])), std::abs(static_cast<int>(t.q_code[i]))});
    return peak;
  };
  // a 0.1 ns grid resolves the peak to well under one code
  cfg.sample_rate = 10e9;
  EXPECT_EQ(peak_code(export_awg(prog, cfg)), (1 << 13) - 1);
  // the 5 ns grid misses it; its largest code is the rounded sampled maximum
  cfg.sample_rate = 200e6;
  double sampled = 0.0;
  for (double t : awg_times(prog, cfg.sample_rate)) {
    const auto q = quadratures_at(prog, t);
    sampled = std::max({sampled, std::abs(q.f1), std::abs(q.f2)});
  }
  EXPECT_EQ(peak_code(export_awg(prog, cfg)), std::lround(sampled / cfg.full_scale * 8191));
}

TEST(Awg, ClipsOnlyBeyondHalfCode) {
  const auto env = FourierEnvelope::with_default_fundamental(505e-9, {3e6}, {0.0});
  const ControlProgram prog(env);
  AwgExportConfig cfg;
  cfg.bit_depth = 8;
  cfg.full_scale = 3e6 / (1.0 + 0.4 / 127);
  const auto t = export_awg(prog, cfg);
  EXPECT_EQ(*std::max_element(t.i_code.begin(), t.i_code.end()), 127);
  cfg.full_scale = 3e6 / (1.0 + 0.6 / 127);
  EXPECT_THROW(export_awg(prog, cfg), ClippingError);
}

TEST(Awg, CodesFollowRoundingRule) {
  const auto env = builtin::pi_x();
  const ControlProgram prog(env);
  AwgExportConfig cfg;
  cfg.full_scale = 25e6;
  const auto t = export_awg(prog, cfg);
  const auto times = awg_times(prog, cfg.sample_rate);
  for (std::size_t i = 0; i < t.size(); i += 7) {
    const auto q = eval_envelope(env, times[i]);
    EXPECT_EQ(t.i_code[i], std::lround(q.f1 / 25e6 * 8191)) << i;
    EXPECT_EQ(t.q_code[i], std::lround(q.f2 / 25e6 * 8191)) << i;
  }
}

TEST(Awg, ClippingReportsFirstSample) {
  AwgExportConfig cfg;
  cfg.full_scale = 1e6;
  try {
    export_awg(ControlProgram(builtin::pi()), cfg);
    FAIL() << "expected ClippingError";
  } catch (const ClippingError& e) {
    EXPECT_NE(std::string(e.what()).find("sample"), std::string::npos);
  }
}

TEST(Awg, RawIsLittleEndianInterleaved) {
  AwgTable t;
  t.i_code = {1, -2};
  t.q_code = {256, 0};
  const std::string raw = awg_raw(t);
  ASSERT_EQ(raw.size(), 8u);
  const std::string want{'\x01', '\x00', '\x00', '\x01', '\xfe', '\xff', '\x00', '\x00'};
  EXPECT_EQ(raw, want);
  EXPECT_EQ(awg_csv(t), "index,i_code,q_code\n0,1,256\n1,-2,0\n");
}

TEST(Awg, ConfigValidation) {
  AwgExportConfig cfg;
  cfg.bit_depth = 17;
  EXPECT_THROW(export_awg(ControlProgram(builtin::pi()), cfg), DomainError);
  cfg.bit_depth = 14;
  cfg.sample_rate = 1e6;  // 0.5 samples
  EXPECT_THROW(export_awg(ControlProgram(builtin::pi()), cfg), DomainError);
}

using Plot = TempDir;

TEST_F(Plot, ScriptsForEachKind) {
  const ControlProgram prog(builtin::pi());
  io::write_atomic(path("t.csv"), io::trajectory_csv(bloch_trajectory(prog, {}, ket::zero(), 5)));
  io::write_atomic(path("l.csv"), io::landscape_csv(landscape(prog, TargetSpec::flip(), {0.0, 1e6}, {1.0})));
  io::write_atomic(path("s.csv"), std::string(io::kSensitivityHeader) + "\n0,1,1e-6,rect\n");

  const std::string t = emit_plot_script(path("t.csv"), PlotKind::trajectory);
  EXPECT_NE(t.find("import matplotlib"), std::string::npos);
  EXPECT_NE(t.find("t.csv"), std::string::npos);

  const std::string l = emit_plot_script(path("l.csv"), PlotKind::landscape);
  EXPECT_NE(l.find("levels=[0.9]"), std::string::npos);

  const std::string s = emit_plot_script(path("s.csv"), PlotKind::sensitivity);
  EXPECT_NE(s.find("LogNorm"), std::string::npos);
}

TEST_F(Plot, HeaderMismatchIsFormatError) {
  io::write_atomic(path("t.csv"), "time_s,sx,sy,sz\n0,0,0,1\n");
  EXPECT_THROW(emit_plot_script(path("t.csv"), PlotKind::landscape), FormatError);
  EXPECT_THROW(emit_plot_script(path("missing.csv"), PlotKind::trajectory), FormatError);
}

TEST(Manifest, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

using Cli = TempDir;

TEST_F(Cli, UnknownSubcommandIsUsageError) {
  const auto r = run({"frobnicate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("pulse"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"pulse", "landscape", "--builtin", "pi"}).code, 2);  // missing required options
}

TEST_F(Cli, BuiltinWritesTableCoefficients) {
  const auto r = run({"pulse", "builtin", "--name", "pi", "--out", path("pi.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto p = io::load_pulse(path("pi.json"));
  EXPECT_EQ(p.name, "pi");
  EXPECT_DOUBLE_EQ(p.envelope.duration_s, 500e-9);
  // first and last printed entries of each quadrature, table unit 2 MHz
  EXPECT_DOUBLE_EQ(p.envelope.coeffs_x_hz.front(), -1.177 * 2e6);
  EXPECT_DOUBLE_EQ(p.envelope.coeffs_x_hz.back(), 1.311 * 2e6);
  EXPECT_DOUBLE_EQ(p.envelope.coeffs_y_hz.front(), -0.150 * 2e6);
  EXPECT_DOUBLE_EQ(p.envelope.coeffs_y_hz.back(), -0.657 * 2e6);
  EXPECT_TRUE(fs::exists(path("pi.json.manifest.json")));

  const auto list = run({"pulse", "builtin", "--list"});
  EXPECT_EQ(list.out, "pi\npi2_y\npi_x\n");
}

TEST_F(Cli, LandscapeGridAndManifest) {
  ASSERT_EQ(run({"pulse", "builtin", "--name", "pi", "--out", path("pi.json")}).code, 0);
  const auto r = run({"pulse", "landscape", "--pulse", path("pi.json"), "--target", "flip", "--det", "-10e6:10e6:81",
                      "--scale", "0.5:1.5:41", "--out", path("l.csv"), "--plot", path("l.py")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = io::read_numeric_csv(path("l.csv"), io::kLandscapeHeader);
  EXPECT_EQ(rows.size(), 81u * 41u);
  EXPECT_TRUE(fs::exists(path("l.py")));

  const auto m = nlohmann::json::parse(io::read_file(path("l.csv.manifest.json")));
  EXPECT_EQ(m["command"], "pulse landscape");
  EXPECT_EQ(m["tool_version"], kToolVersion);
  EXPECT_TRUE(m["seed"].is_null());
  ASSERT_EQ(m["inputs"].size(), 1u);
  EXPECT_EQ(m["inputs"][0]["sha256"], sha256_hex(io::read_file(path("pi.json"))));
  ASSERT_EQ(m["outputs"].size(), 2u);
  EXPECT_EQ(m["outputs"][0]["sha256"], sha256_hex(io::read_file(path("l.csv"))));
}

TEST_F(Cli, PhysicalityPrintsMetrics) {
  const auto r = run({"qpt", "physicality", "--chi", fixture("chi_a.json"), "--out", path("rep.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("d_trace "), std::string::npos);
  EXPECT_NE(r.out.find("frobenius "), std::string::npos);
  const auto rep = nlohmann::json::parse(io::read_file(path("rep.json")));
  const auto direct = project_physical(io::load_chi(fixture("chi_a.json")));
  EXPECT_DOUBLE_EQ(rep["d_trace"].get<double>(), direct.d_trace);
  EXPECT_DOUBLE_EQ(rep["frobenius"].get<double>(), direct.frobenius);
  EXPECT_TRUE(fs::exists(path("rep.json.manifest.json")));
}

TEST_F(Cli, ExportAwgCsvAndRaw) {
  auto r = run({"pulse", "export-awg", "--builtin", "pi", "--rate", "200MHz", "--out", path("pi.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(io::read_file(path("pi.csv"))), 101u);
  r = run({"pulse", "export-awg", "--builtin", "pi", "--raw", "--out", path("pi.bin")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(io::read_file(path("pi.bin")).size(), 400u);
  r = run({"pulse", "export-awg", "--builtin", "pi", "--full-scale", "1MHz", "--out", path("clip.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(path("clip.csv")));
}

TEST_F(Cli, BadValuesAreArgumentErrors) {
  EXPECT_EQ(run({"pulse", "simulate", "--builtin", "nope", "--out", path("t.csv")}).code, 2);
  EXPECT_EQ(run({"pulse", "simulate", "--builtin", "pi", "--det", "3ns", "--out", path("t.csv")}).code, 2);
  EXPECT_EQ(run({"qpt", "physicality", "--chi", path("missing.json")}).code, 2);
}

TEST_F(Cli, SimulateReportsFidelity) {
  const auto r = run({"pulse", "simulate", "--builtin", "pi", "--samples", "21", "--out", path("t.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(io::read_file(path("t.csv"))), 22u);
  std::istringstream in(r.out);
  std::string key;
  double f = 0.0;
  in >> key >> f;
  EXPECT_EQ(key, "fidelity");
  EXPECT_GE(f, 0.99);
}

TEST_F(Cli, SeededOptimizeIsReproducible) {
  const std::vector<std::string> base{"pulse", "optimize", "--harmonics", "4", "--duration", "300ns",
                                      "--fwhm", "2MHz", "--det-points", "3", "--scales", "1",
                                      "--seed", "11", "--max-iters", "15", "--slices", "100"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", path("a.json"), "--trace", path("a.csv")});
  b.insert(b.end(), {"--out", path("b.json"), "--trace", path("b.csv")});
  const auto ra = run(a), rb = run(b);
  EXPECT_EQ(ra.code, rb.code);
  EXPECT_EQ(ra.code, 3);  // budget too small to converge
  EXPECT_EQ(io::read_file(path("a.json")), io::read_file(path("b.json")));
  EXPECT_EQ(io::read_file(path("a.csv")), io::read_file(path("b.csv")));
  const auto m = nlohmann::json::parse(io::read_file(path("a.json.manifest.json")));
  EXPECT_EQ(m["seed"], 11);
}

TEST_F(Cli, SeededTomographyIsReproducible) {
  const std::vector<std::string> base{"qpt", "run", "--builtin", "pi_x", "--shots", "2000", "--seed", "9"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", path("a.json")});
  b.insert(b.end(), {"--out", path("b.json")});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  EXPECT_EQ(io::read_file(path("a.json")), io::read_file(path("b.json")));
}

TEST_F(Cli, MagSweepWritesBothSets) {
  const auto r = run({"mag", "sweep", "--det", "-2MHz:2MHz:3", "--scale", "0.9:1.1:2", "--tau", "1.2us",
                      "--out", path("s.csv"), "--plot", path("s.py")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = io::read_file(path("s.csv"));
  EXPECT_EQ(count_lines(csv), 13u);
  EXPECT_NE(csv.find(",rect\n"), std::string::npos);
  EXPECT_NE(csv.find(",smooth\n"), std::string::npos);
  EXPECT_NE(io::read_file(path("s.py")).find("LogNorm"), std::string::npos);
}
