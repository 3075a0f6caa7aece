#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blockade/errors.hpp"
#include "blockade/pnr.hpp"
#include "csv_format.hpp"
#include "csv_reader.hpp"

namespace blockade {
namespace {

using detail::format_number;

struct Group {
  double amp = 0.0;
  std::vector<std::pair<double, double>> rows;
};

// Groups (key, x, y) rows by key in order of first appearance, sorting each group by x.
std::vector<Group> group_rows(const std::vector<std::array<double, 3>>& rows) {
  std::vector<Group> groups;
  std::map<double, std::size_t> slot;
  for (const auto& r : rows) {
    auto [it, inserted] = slot.try_emplace(r[0], groups.size());
    if (inserted) groups.push_back(Group{r[0], {}});
    groups[it->second].rows.emplace_back(r[1], r[2]);
  }
  for (Group& g : groups) {
    std::stable_sort(g.rows.begin(), g.rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return groups;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return in;
}

}  // namespace

std::vector<PnrSpectrum> read_spectrum_csv(std::istream& in, SpectrumSource source) {
  detail::CsvTable table = detail::read_csv(in);
  const bool long_format = table.has("drive_amp_v");
  const std::size_t f_col = table.column("freq_ghz");
  const std::size_t r_col = table.column("response");

  SpectrumMeta meta;
  meta.source = source;
  std::vector<PnrSpectrum> out;
  if (!long_format) {
    std::vector<double> f, r;
    for (const auto& row : table.rows) {
      f.push_back(row[f_col]);
      r.push_back(row[r_col]);
    }
    out.emplace_back(std::move(f), std::move(r), meta);
    return out;
  }
  const std::size_t a_col = table.column("drive_amp_v");
  std::vector<std::array<double, 3>> rows;
  rows.reserve(table.rows.size());
  for (const auto& row : table.rows) rows.push_back({row[a_col], row[f_col], row[r_col]});
  for (const Group& g : group_rows(rows)) {
    std::vector<double> f, r;
    for (const auto& [x, y] : g.rows) {
      f.push_back(x);
      r.push_back(y);
    }
    SpectrumMeta m = meta;
    m.drive_amp_v = g.amp;
    out.emplace_back(std::move(f), std::move(r), m);
  }
  return out;
}

std::vector<PnrSpectrum> read_spectrum_csv_file(const std::string& path, SpectrumSource source) {
  std::ifstream in = open_input(path);
  try {
    return read_spectrum_csv(in, source);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void write_spectrum_csv(std::ostream& out, const PnrSpectrum& spectrum) {
  out << "freq_ghz,response\n";
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    out << format_number(spectrum.freq()[i]) << ',' << format_number(spectrum.response()[i]) << '\n';
  }
}

void write_spectrum_csv(std::ostream& out, std::span<const PnrSpectrum> spectra) {
  out << "freq_ghz,drive_amp_v,response\n";
  for (const PnrSpectrum& s : spectra) {
    const std::string amp = format_number(s.meta().drive_amp_v);
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << format_number(s.freq()[i]) << ',' << amp << ',' << format_number(s.response()[i]) << '\n';
    }
  }
}

std::vector<RabiTrace> read_traces_csv(std::istream& in) {
  detail::CsvTable table = detail::read_csv(in);
  const std::size_t a_col = table.column("drive_amp_v");
  const std::size_t t_col = table.column("time_us");
  const std::size_t p_col = table.column("population");
  std::vector<std::array<double, 3>> rows;
  rows.reserve(table.rows.size());
  for (const auto& row : table.rows) rows.push_back({row[a_col], row[t_col], row[p_col]});
  std::vector<RabiTrace> out;
  for (const Group& g : group_rows(rows)) {
    RabiTrace trace;
    trace.drive_amp_v = g.amp;
    for (const auto& [t, p] : g.rows) {
      trace.times_us.push_back(t);
      trace.population.push_back(p);
    }
    out.push_back(std::move(trace));
  }
  return out;
}

std::vector<RabiTrace> read_traces_csv_file(const std::string& path) {
  std::ifstream in = open_input(path);
  try {
    return read_traces_csv(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void write_traces_csv(std::ostream& out, std::span<const RabiTrace> traces) {
  out << "drive_amp_v,time_us,population\n";
  for (const RabiTrace& tr : traces) {
    const std::string amp = format_number(tr.drive_amp_v);
    for (std::size_t i = 0; i < tr.times_us.size(); ++i) {
      out << amp << ',' << format_number(tr.times_us[i]) << ',' << format_number(tr.population[i]) << '\n';
    }
  }
}

std::string analysis_to_json(const AnalysisReport& report, int indent) {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };

  ordered_json doc;
  ordered_json peaks = ordered_json::array();
  for (const Peak& p : report.peaks.peaks) {
    ordered_json item;
    item["position_ghz"] = p.position;
    item["prominence"] = p.prominence;
    item["height"] = p.height;
    item["area"] = p.area;
    item["assigned_n"] = p.spurious ? ordered_json(nullptr) : ordered_json(p.assigned_n);
    item["spurious"] = p.spurious;
    peaks.push_back(std::move(item));
  }
  doc["peaks"] = std::move(peaks);
  doc["P"] = report.distribution.probabilities();
  doc["g2"] = opt(report.g2);
  ordered_json gm = ordered_json::array();
  for (std::size_t i = 0; i < report.gm.size(); ++i) {
    gm.push_back({{"m", static_cast<int>(i) + 2}, {"value", opt(report.gm[i])}});
  }
  doc["gm"] = std::move(gm);
  doc["diagnostics"] = {
      {"baseline", report.peaks.baseline},
      {"prominence_threshold", report.peaks.threshold},
      {"mean_photon_number", report.mean_photon_number},
      {"spurious_count", report.spurious_count},
      {"max_assignment_error_chi", report.max_assignment_error_chi},
      {"orientation_flipped", report.orientation_flipped},
      {"notes", report.notes},
  };
  return doc.dump(indent);
}

}  // namespace blockade
