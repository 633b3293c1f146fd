// Copyright 2026 The rgbt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rgbt/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rgbt/error.hpp"

namespace rgbt {

namespace {

const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};

std::string color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string fmt(double v, int precision = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

// Scenario names in first-appearance order across all files.
std::vector<std::string> scenario_order(std::span<const MetricsFile> files) {
  std::vector<std::string> order;
  for (const auto& f : files)
    for (const auto& e : f.entries)
      if (std::find(order.begin(), order.end(), e.scenario) == order.end())
        order.push_back(e.scenario);
  return order;
}

std::string bar_chart_svg(std::span<const MetricsFile> files,
                          const std::vector<std::string>& scenarios) {
  const double width = 120.0 + 110.0 * static_cast<double>(scenarios.size());
  const double height = 320.0, left = 60.0, top = 30.0, plot_h = 220.0;
  double max_mr = 1.0;
  for (const auto& f : files)
    for (const auto& e : f.entries)
      if (e.split == "all" && e.mr) max_mr = std::max(max_mr, *e.mr);
  max_mr = std::ceil(max_mr / 10.0) * 10.0;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">MR (All) by scenario, lower is better</text>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = max_mr * t / 5.0;
    const double y = top + plot_h - plot_h * v / max_mr;
    s << "<line x1=\"" << left << "\" x2=\"" << width - 20 << "\" y1=\"" << y << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fmt(v, 0)
      << "</text>\n";
  }
  const double group_w = 110.0;
  const double bar_w = std::min(24.0, 90.0 / static_cast<double>(std::max<std::size_t>(files.size(), 1)));
  for (std::size_t g = 0; g < scenarios.size(); ++g) {
    const double gx = left + 10.0 + group_w * static_cast<double>(g);
    for (std::size_t f = 0; f < files.size(); ++f) {
      const MetricsEntry* e = files[f].find(scenarios[g], "all");
      if (!e || !e->mr) continue;
      const double h = plot_h * *e->mr / max_mr;
      s << "<rect x=\"" << gx + bar_w * static_cast<double>(f) << "\" y=\"" << top + plot_h - h
        << "\" width=\"" << bar_w - 2 << "\" height=\"" << h << "\" fill=\"" << color(f)
        << "\"><title>" << escape_xml(files[f].label) << ": " << fmt(*e->mr) << "</title></rect>\n";
    }
    s << "<text x=\"" << gx + 45 << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">"
      << escape_xml(scenarios[g]) << "</text>\n";
  }
  for (std::size_t f = 0; f < files.size(); ++f) {
    const double y = top + plot_h + 36 + 14.0 * static_cast<double>(f);
    s << "<rect x=\"" << left << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
      << color(f) << "\"/><text x=\"" << left + 16 << "\" y=\"" << y << "\">"
      << escape_xml(files[f].label) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string curves_svg(std::span<const MetricsFile> files,
                       const std::vector<std::string>& scenarios) {
  // Log-log axes: FPPI in [1e-3, 1e1], miss rate in [0.01, 1].
  const double left = 60, top = 30, pw = 320, ph = 240, panel_w = 400;
  const double width = 20 + panel_w * static_cast<double>(std::max<std::size_t>(scenarios.size(), 1));
  const double height = top + ph + 50 + 14.0 * static_cast<double>(files.size());
  auto px = [&](double fppi, double x0) {
    const double lx = std::clamp(std::log10(std::max(fppi, 1e-3)), -3.0, 1.0);
    return x0 + pw * (lx + 3.0) / 4.0;
  };
  auto py = [&](double mr) {
    const double ly = std::clamp(std::log10(std::max(mr, 1e-2)), -2.0, 0.0);
    return top + ph * (-ly) / 2.0;
  };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t g = 0; g < scenarios.size(); ++g) {
    const double x0 = left + panel_w * static_cast<double>(g);
    s << "<text x=\"" << x0 << "\" y=\"18\" font-size=\"13\">" << escape_xml(scenarios[g])
      << " (All)</text>\n";
    s << "<rect x=\"" << x0 << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#999\"/>\n";
    for (int e = -3; e <= 1; ++e) {
      const double x = px(std::pow(10.0, e), x0);
      s << "<text x=\"" << x << "\" y=\"" << top + ph + 14 << "\" text-anchor=\"middle\">1e" << e
        << "</text>\n";
    }
    for (double mr : {0.01, 0.1, 1.0}) {
      s << "<text x=\"" << x0 - 6 << "\" y=\"" << py(mr) + 4 << "\" text-anchor=\"end\">" << mr
        << "</text>\n";
    }
    s << "<text x=\"" << x0 + pw / 2 << "\" y=\"" << top + ph + 28
      << "\" text-anchor=\"middle\">false positives per image</text>\n";
    for (std::size_t f = 0; f < files.size(); ++f) {
      const MetricsEntry* e = files[f].find(scenarios[g], "all");
      if (!e || e->fppi.empty()) continue;
      s << "<polyline fill=\"none\" stroke=\"" << color(f) << "\" stroke-width=\"1.5\" points=\"";
      // Step curve: miss rate holds until the next operating point.
      double prev_mr = 1.0;
      s << px(1e-3, x0) << ',' << py(prev_mr) << ' ';
      for (std::size_t i = 0; i < e->fppi.size(); ++i) {
        s << px(e->fppi[i], x0) << ',' << py(prev_mr) << ' ' << px(e->fppi[i], x0) << ','
          << py(e->miss_rate[i]) << ' ';
        prev_mr = e->miss_rate[i];
      }
      s << px(1e1, x0) << ',' << py(prev_mr) << "\"/>\n";
    }
  }
  for (std::size_t f = 0; f < files.size(); ++f) {
    const double y = top + ph + 48 + 14.0 * static_cast<double>(f);
    s << "<rect x=\"" << left << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
      << color(f) << "\"/><text x=\"" << left + 16 << "\" y=\"" << y << "\">"
      << escape_xml(files[f].label) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace

const MetricsEntry* MetricsFile::find(const std::string& scenario, const std::string& split) const {
  for (const auto& e : entries)
    if (e.scenario == scenario && e.split == split) return &e;
  return nullptr;
}

nlohmann::json metrics_file_json(const std::string& label, const MRTable& table) {
  nlohmann::json metrics = nlohmann::json::array();
  for (const auto& c : table.cells) metrics.push_back(metrics_json(to_string(c.scenario), c.result));
  return {{"label", label}, {"metrics", metrics}};
}

MetricsFile metrics_from_table(const std::string& label, const MRTable& table) {
  return parse_metrics_file(metrics_file_json(label, table));
}

MetricsFile parse_metrics_file(const nlohmann::json& j) {
  RGBT_REQUIRE(j.is_object() && j.contains("metrics") && j.at("metrics").is_array(),
               "metrics file must be an object with a 'metrics' array");
  MetricsFile f;
  f.label = j.value("label", std::string("model"));
  for (const auto& m : j.at("metrics")) {
    MetricsEntry e;
    e.scenario = m.at("scenario").get<std::string>();
    e.split = m.at("split").get<std::string>();
    if (!m.at("mr").is_null()) e.mr = m.at("mr").get<double>();
    if (m.contains("curve")) {
      e.fppi = m.at("curve").value("fppi", std::vector<double>{});
      e.miss_rate = m.at("curve").value("miss_rate", std::vector<double>{});
      RGBT_REQUIRE(e.fppi.size() == e.miss_rate.size(), "curve arrays differ in length");
    }
    f.entries.push_back(std::move(e));
  }
  return f;
}

MetricsFile read_metrics_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open metrics file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  return parse_metrics_file(j);
}

std::string format_mr_table(const MetricsFile& metrics) {
  const std::vector<MetricsFile> one{metrics};
  const auto scenarios = scenario_order(one);
  std::size_t name_w = 8;
  for (const auto& s : scenarios) name_w = std::max(name_w, s.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_w)) << "scenario" << std::right;
  for (const char* split : {"MR(All)", "MR(Day)", "MR(Night)"}) os << std::setw(11) << split;
  os << '\n';
  for (const auto& s : scenarios) {
    os << std::left << std::setw(static_cast<int>(name_w)) << s << std::right;
    for (const char* split : {"all", "day", "night"}) {
      const MetricsEntry* e = metrics.find(s, split);
      os << std::setw(11) << (e && e->mr ? fmt(*e->mr) : std::string("-"));
    }
    os << '\n';
  }
  return os.str();
}

std::optional<double> average_difference(const MetricsFile& method, const MetricsFile& baseline) {
  double sum = 0.0;
  int n = 0;
  for (const auto& e : method.entries) {
    const MetricsEntry* b = baseline.find(e.scenario, e.split);
    if (!e.mr || !b || !b->mr) continue;
    sum += *e.mr - *b->mr;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

ReportPaths write_report(std::span<const MetricsFile> files, const std::filesystem::path& out_dir) {
  RGBT_REQUIRE(!files.empty(), "report needs at least one metrics file");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir.string(), ec.message());
  ReportPaths paths{out_dir / "mr_by_scenario.svg", out_dir / "mr_by_scenario.csv",
                    out_dir / "fppi_miss_rate.svg", out_dir / "fppi_miss_rate.csv",
                    out_dir / "summary.md"};
  const auto scenarios = scenario_order(files);
  const char* splits[] = {"all", "day", "night"};

  std::ostringstream bar_csv;
  bar_csv << "scenario,split";
  for (const auto& f : files) bar_csv << ',' << f.label;
  bar_csv << '\n';
  for (const auto& s : scenarios) {
    for (const char* split : splits) {
      bar_csv << s << ',' << split;
      for (const auto& f : files) {
        const MetricsEntry* e = f.find(s, split);
        bar_csv << ',';
        if (e && e->mr) bar_csv << fmt(*e->mr, 4);
      }
      bar_csv << '\n';
    }
  }
  write_text(paths.bar_csv, bar_csv.str());
  write_text(paths.bar_svg, bar_chart_svg(files, scenarios));

  std::ostringstream curve_csv;
  curve_csv << "label,scenario,split,fppi,miss_rate\n";
  curve_csv.precision(10);
  for (const auto& f : files)
    for (const auto& e : f.entries)
      for (std::size_t i = 0; i < e.fppi.size(); ++i)
        curve_csv << f.label << ',' << e.scenario << ',' << e.split << ',' << e.fppi[i] << ','
                  << e.miss_rate[i] << '\n';
  write_text(paths.curves_csv, curve_csv.str());
  write_text(paths.curves_svg, curves_svg(files, scenarios));

  std::ostringstream md;
  md << "# Miss-rate summary\n\nLog-average miss rate (%), lower is better.\n\n| Scenario | Split |";
  for (const auto& f : files) md << ' ' << f.label << " |";
  md << "\n|---|---|";
  for (std::size_t i = 0; i < files.size(); ++i) md << "---:|";
  md << '\n';
  for (const auto& s : scenarios) {
    for (const char* split : splits) {
      md << "| " << s << " | " << split << " |";
      for (const auto& f : files) {
        const MetricsEntry* e = f.find(s, split);
        md << ' ' << (e && e->mr ? fmt(*e->mr) : std::string("-")) << " |";
      }
      md << '\n';
    }
  }
  if (files.size() > 1) {
    md << "| Average difference vs " << files[0].label << " | |";
    for (const auto& f : files) {
      const auto d = average_difference(f, files[0]);
      md << ' ' << (d ? (*d > 0 ? "+" : "") + fmt(*d) : std::string("-")) << " |";
    }
    md << '\n';
  }
  write_text(paths.summary_md, md.str());
  return paths;
}

}  // namespace rgbt
