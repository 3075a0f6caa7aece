#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blockade/pnr.hpp"
#include "test_support.hpp"

using namespace blockade;
using blockade::test_support::code_of;

TEST(SpectrumCsv, SingleSpectrumRoundtrip) {
  const PnrSpectrum s({5.31, 5.311, 5.3125}, {0.1, 0.9, -0.25});
  std::ostringstream out;
  write_spectrum_csv(out, s);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "freq_ghz,response");
  std::istringstream in(out.str());
  const auto back = read_spectrum_csv(in);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].freq(), s.freq());
  EXPECT_EQ(back[0].response(), s.response());
  EXPECT_TRUE(std::isnan(back[0].meta().drive_amp_v));
  EXPECT_EQ(back[0].meta().source, SpectrumSource::Measured);
}

TEST(SpectrumCsv, LongFormatGroupsByAmplitude) {
  std::istringstream in(
      "# exported sweep\n"
      "freq_ghz, drive_amp_v, response\r\n"
      "5.3,0.5,1\n"
      "5.2,0.5,2\n"
      "\n"
      "5.2,0.25,3\n"
      "5.4,0.5,4\n"
      "5.3,0.25,5\n"
      "5.4,0.25,6\n");
  const auto spectra = read_spectrum_csv(in, SpectrumSource::Simulated);
  ASSERT_EQ(spectra.size(), 2u);
  EXPECT_DOUBLE_EQ(spectra[0].meta().drive_amp_v, 0.5);
  EXPECT_EQ(spectra[0].freq(), (std::vector<double>{5.2, 5.3, 5.4}));
  EXPECT_EQ(spectra[0].response(), (std::vector<double>{2, 1, 4}));
  EXPECT_DOUBLE_EQ(spectra[1].meta().drive_amp_v, 0.25);
  EXPECT_EQ(spectra[1].response(), (std::vector<double>{3, 5, 6}));
  EXPECT_EQ(spectra[1].meta().source, SpectrumSource::Simulated);

  std::ostringstream out;
  write_spectrum_csv(out, std::span<const PnrSpectrum>(spectra));
  std::istringstream again(out.str());
  const auto back = read_spectrum_csv(again);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].response(), spectra[1].response());
}

TEST(SpectrumCsv, MalformedInput) {
  auto read = [](const std::string& text) {
    std::istringstream in(text);
    return read_spectrum_csv(in);
  };
  EXPECT_EQ(code_of([&] { read(""); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([&] { read("freq_ghz,response\n"); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([&] { read("freq,response\n1,2\n2,3\n3,4\n"); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([&] { read("freq_ghz,response\n1,2\n2\n3,4\n"); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([&] { read("freq_ghz,response\n1,2\n2,x\n3,4\n"); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([&] { read("freq_ghz,response\n1,2\n2,\n3,4\n"); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([&] { read("freq_ghz,response\n1,2\n1,3\n3,4\n"); }), ErrorCode::InvalidState);
  EXPECT_EQ(code_of([] { read_spectrum_csv_file("/nonexistent/spectrum.csv"); }), ErrorCode::IoError);
}

TEST(TracesCsv, Roundtrip) {
  std::vector<RabiTrace> traces(2);
  traces[0].drive_amp_v = 0.5;
  traces[1].drive_amp_v = 1.25;
  for (int i = 0; i < 4; ++i) {
    traces[0].times_us.push_back(0.1 * i);
    traces[0].population.push_back(0.01 * i);
    traces[1].times_us.push_back(0.1 * i);
    traces[1].population.push_back(1.0 / 3.0 * i);
  }
  std::ostringstream out;
  write_traces_csv(out, traces);
  std::istringstream in(out.str());
  const auto back = read_traces_csv(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_DOUBLE_EQ(back[1].drive_amp_v, 1.25);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(back[1].population[i], traces[1].population[i], 1e-11);
  std::istringstream missing("drive_amp_v,time_us\n1,2\n");
  EXPECT_EQ(code_of([&] { read_traces_csv(missing); }), ErrorCode::IoError);
}

TEST(AnalysisJson, Shape) {
  AnalysisReport r;
  r.peaks.baseline = 0.01;
  r.peaks.peaks.push_back(Peak{5.3, 0.6, 0.6, 0.001, 10, 0, false});
  r.peaks.peaks.push_back(Peak{5.4, 0.1, 0.1, 0.0002, 40, -1, true});
  r.distribution = PhotonDistribution({0.75, 0.25});
  r.g2 = 0.0;
  r.gm = {0.0, std::nullopt};
  r.spurious_count = 1;
  const auto doc = nlohmann::json::parse(analysis_to_json(r));
  for (const char* key : {"peaks", "P", "g2", "gm", "diagnostics"}) EXPECT_TRUE(doc.contains(key)) << key;
  EXPECT_EQ(doc["peaks"].size(), 2u);
  EXPECT_TRUE(doc["peaks"][1]["assigned_n"].is_null());
  EXPECT_EQ(doc["peaks"][0]["assigned_n"], 0);
  EXPECT_EQ(doc["P"][1], 0.25);
  EXPECT_EQ(doc["gm"][1]["m"], 3);
  EXPECT_TRUE(doc["gm"][1]["value"].is_null());
  EXPECT_EQ(doc["diagnostics"]["spurious_count"], 1);

  AnalysisReport vac;
  EXPECT_TRUE(nlohmann::json::parse(analysis_to_json(vac, -1))["g2"].is_null());
}
