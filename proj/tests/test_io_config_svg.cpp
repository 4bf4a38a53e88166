#include <gtest/gtest.h>

#include <sstream>

#include "sivmag/config.hpp"
#include "sivmag/io.hpp"
#include "sivmag/svg_plot.hpp"

using namespace sivmag;

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 98.148e6, 6.958e-4, -2.5e-300, 1e300}) {
    const std::string s = format_double(v);
    EXPECT_EQ(parse_double(s), v) << s;
  }
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(ParseNumbers, Strict) {
  EXPECT_EQ(parse_double(" 2.5 "), 2.5);
  EXPECT_THROW(parse_double("2.5x"), DataError);
  EXPECT_THROW(parse_double(""), DataError);
  EXPECT_THROW(parse_double("inf"), DataError);
  EXPECT_EQ(parse_uint("18446744073709551615"), 18446744073709551615ull);
  EXPECT_THROW(parse_uint("-3"), DataError);
  try {
    parse_double("abc", 12);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 12u);
    EXPECT_NE(std::string(e.what()).find("line 12"), std::string::npos);
  }
}

TEST(SpectrumCsv, RoundTripIsExact) {
  AcquisitionConfig cfg;
  cfg.seed = 18446744073709551557ull;
  const OdmrSpectrum s = synthesize_spectrum(cfg, FieldVector::from_gauss_degrees(60.0, 20.0), PhysicalConstants{});
  std::stringstream ss;
  write_spectrum_csv(ss, s);
  const std::string text = ss.str();
  EXPECT_EQ(text.rfind("# odmr-csv v1\nfrequency_hz,signal\n", 0), 0u);

  const OdmrSpectrum back = read_spectrum_csv(ss);
  EXPECT_EQ(back.freq_hz, s.freq_hz);
  EXPECT_EQ(back.signal, s.signal);
  EXPECT_EQ(back.meta.field, s.meta.field);
  EXPECT_EQ(back.meta.constants, s.meta.constants);
  EXPECT_EQ(back.meta.acquisition.seed, cfg.seed);
  EXPECT_EQ(back.meta.noise_sigma, s.meta.noise_sigma);
  EXPECT_EQ(back.meta.transitions.nu1_hz, s.meta.transitions.nu1_hz);

  std::stringstream again;
  write_spectrum_csv(again, back);
  EXPECT_EQ(again.str(), text);
}

TEST(SpectrumCsv, MalformedInputNamesTheLine) {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream is(text);
    try {
      read_spectrum_csv(is);
    } catch (const DataError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("frequency_hz,signal\n1,2\n"), 1u);
  EXPECT_EQ(line_of("# odmr-csv v1\nf,s\n1,2\n"), 2u);
  EXPECT_EQ(line_of("# odmr-csv v1\nfrequency_hz,signal\n1,2\n2,3\n3,oops\n"), 5u);
  EXPECT_EQ(line_of("# odmr-csv v1\nfrequency_hz,signal\n1,2\n2,3,4\n"), 4u);
  EXPECT_EQ(line_of("# odmr-csv v1\nfrequency_hz,signal\n2,2\n1,3\n"), 4u);
  EXPECT_EQ(line_of("# odmr-csv v1\nfrequency_hz,signal\n# b0_t=x\n1,2\n2,3\n"), 3u);
}

TEST(SpectrumCsv, KeepsUnknownMetadata) {
  std::istringstream is("# odmr-csv v1\r\nfrequency_hz,signal\r\n# operator=lab3\r\n1,0.5\r\n2,0.25\r\n");
  std::map<std::string, std::string> extra;
  const OdmrSpectrum s = read_spectrum_csv(is, &extra);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(extra.at("operator"), "lab3");
}

TEST(SweepCsv, RoundTrip) {
  SweepTable t;
  t.kind = "laser";
  t.columns = {"laser_mw", "rate_cps", "eta_t_per_sqrt_hz"};
  t.rows = {{1, 3.1e6, 1e-4}, {85, 2.064e8, 1.38e-5}};
  t.meta = {{"contrast", "0.0018"}};
  std::stringstream ss;
  write_sweep_csv(ss, t);
  const SweepTable back = read_sweep_csv(ss);
  EXPECT_EQ(back.kind, "laser");
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.meta, t.meta);
  EXPECT_EQ(back.values("rate_cps"), (std::vector<double>{3.1e6, 2.064e8}));
  EXPECT_THROW(back.values("nope"), DataError);

  std::istringstream bad("# sweep-csv v1\na,b\n1,2\n3\n");
  EXPECT_THROW(read_sweep_csv(bad), DataError);
}

TEST(Config, ParsesAndValidates) {
  std::istringstream is(
      "# lab defaults\n"
      "d_mhz = 36.55\n"
      "g_factor=2.0\n"
      "laser_mw = 85   # max power\n"
      "points = 1001\n"
      "b_max_gauss = 150\n");
  const RunConfig c = parse_config(is);
  EXPECT_EQ(c.constants.d_hz(), 36.55e6);
  EXPECT_EQ(c.constants.g_factor(), 2.0);
  EXPECT_EQ(c.acquisition.laser_mw, 85.0);
  EXPECT_EQ(c.acquisition.n_points, 1001u);
  EXPECT_DOUBLE_EQ(c.b_max_t, 150e-4);
  EXPECT_EQ(c.saturation.i_s_cps, 935e6);  // untouched default
}

TEST(Config, RejectsBadInput) {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream is(text);
    try {
      parse_config(is);
    } catch (const DataError& e) {
      return e.line() == 0 ? 999 : e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("d_mhz = 35\nbogus = 1\n"), 2u);
  EXPECT_EQ(line_of("d_mhz = 35\nd_mhz = 36\n"), 2u);
  EXPECT_EQ(line_of("\n\nlaser_mw\n"), 3u);
  EXPECT_EQ(line_of("laser_mw = fast\n"), 1u);
  EXPECT_EQ(line_of("d_mhz = -1\n"), 999u);  // domain error, whole file
  EXPECT_EQ(line_of("fmin_mhz = 300\n"), 999u);
  EXPECT_THROW(load_config("/nonexistent/odmr.cfg"), DataError);
}

TEST(Svg, NiceTicks) {
  EXPECT_EQ(svg::nice_ticks(0, 120), (std::vector<double>{0, 20, 40, 60, 80, 100, 120}));
  const auto unit = svg::nice_ticks(0, 1, 5);
  ASSERT_EQ(unit.size(), 6u);
  for (std::size_t i = 0; i < unit.size(); ++i) EXPECT_NEAR(unit[i], 0.2 * i, 1e-12);
  const auto t = svg::nice_ticks(-3.3, 7.9);
  EXPECT_EQ(t.front(), -2.0);
  EXPECT_EQ(t.back(), 6.0);
}

TEST(Svg, RendersSeriesAndEscapesText) {
  svg::LinePlot p("A & B <test>", "x", "y");
  p.add({"first", {0, 1, 2}, {0, 1, 4}});
  p.add({"second", {0, 1, 2}, {4, 1, 0}});
  const std::string s = p.render();
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
  EXPECT_NE(s.find("A &amp; B &lt;test&gt;"), std::string::npos);
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = s.find("<polyline", pos)) != std::string::npos; ++pos) ++lines;
  EXPECT_EQ(lines, 2u);
  EXPECT_THROW(p.add({"bad", {0, 1}, {0}}), InvalidArgument);
}
