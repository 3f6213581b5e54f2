#include "retseg/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include "retseg/error.hpp"

namespace retseg {
namespace {

int approach_rank(const std::string& a) {
  if (a == "gaussian") return 0;
  if (a == "gabor") return 1;
  if (a == "sobel") return 2;
  return 3;
}

std::string approach_title(const std::string& a) {
  if (a == "gaussian") return "Gaussian Blur";
  if (a == "gabor") return "Gabor Filtering";
  if (a == "sobel") return "Sobel and Pruning";
  return a;
}

void sort_rows(std::vector<ReportRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    const int ra = approach_rank(a.approach), rb = approach_rank(b.approach);
    if (ra != rb) return ra < rb;
    if (a.approach != b.approach) return a.approach < b.approach;
    return a.model < b.model;
  });
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double parse_number(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  require(end != s.c_str() && *end == '\0', ErrorCode::UnsupportedFormat, "bad number '" + s + "' in report CSV");
  return v;
}

}  // namespace

std::string format_sig6(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

std::string emit_report(std::vector<ReportRow> rows, ReportFormat format) {
  require(!rows.empty(), ErrorCode::NoRows, "no report rows");
  sort_rows(rows);
  std::ostringstream out;
  auto cells = [](const MetricsReport& m) {
    return std::vector<std::string>{format_sig6(m.is), format_sig6(m.acc), format_sig6(m.rec), format_sig6(m.dl),
                                    format_sig6(m.dc), format_sig6(m.tt), format_sig6(m.er)};
  };

  if (format == ReportFormat::Csv) {
    out << "model,approach,IS,Acc,Rec,DL,DC,TT_s,ER\n";
    for (const auto& r : rows) {
      out << r.model << ',' << r.approach;
      for (const auto& c : cells(r.metrics)) out << ',' << c;
      out << '\n';
    }
    return out.str();
  }

  std::string current;
  bool first = true;
  for (const auto& r : rows) {
    if (first || r.approach != current) {
      if (!first) out << '\n';
      current = r.approach;
      first = false;
      out << "### " << approach_title(r.approach) << "\n\n";
      out << "| Model | IS | Acc | Rec | DL | DC | TT (s) | ER |\n";
      out << "|---|---|---|---|---|---|---|---|\n";
    }
    out << "| " << r.model;
    for (const auto& c : cells(r.metrics)) out << " | " << c;
    out << " |\n";
  }
  return out.str();
}

std::vector<ReportRow> parse_report_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::UnsupportedFormat, "empty report CSV");
  require(line == "model,approach,IS,Acc,Rec,DL,DC,TT_s,ER", ErrorCode::UnsupportedFormat,
          "unexpected report CSV header");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    require(c.size() == 9, ErrorCode::UnsupportedFormat, "report CSV row needs 9 cells: " + line);
    ReportRow r{c[0], c[1], {}};
    r.metrics.is = parse_number(c[2]);
    r.metrics.acc = parse_number(c[3]);
    r.metrics.rec = parse_number(c[4]);
    r.metrics.dl = parse_number(c[5]);
    r.metrics.dc = parse_number(c[6]);
    r.metrics.tt = parse_number(c[7]);
    r.metrics.er = parse_number(c[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ReportRow> reference_rows() {
  //            model        approach     IS      Acc     Rec     DL      DC      TT      ER
  return {
      {"reti-unet1", "gaussian", {0.7708, 0.9671, 0.7547, 0.3903, 0.7263, 3968, 1.9748}},
      {"reti-unet2", "gaussian", {0.7668, 0.9659, 0.7461, 0.3895, 0.7570, 4039, 1.9686}},
      {"reti-unet1", "gabor", {0.7637, 0.9652, 0.7334, 0.3969, 0.7506, 3603, 1.9241}},
      {"reti-unet2", "gabor", {0.7660, 0.9659, 0.7378, 0.3902, 0.7544, 3620, 1.9630}},
      {"reti-unet1", "sobel", {0.7519, 0.9622, 0.7170, 0.4273, 0.7287, 3514, 1.7596}},
      {"reti-unet2", "sobel", {0.7465, 0.9617, 0.7047, 0.4365, 0.7296, 3597, 1.7101}},
  };
}

ReproductionVerdict check_reproduction(const std::vector<ReportRow>& rows, const std::vector<ReportRow>& reference,
                                       ReproductionTolerance tol) {
  ReproductionVerdict v;
  auto note = [&v](std::string s) {
    v.ok = false;
    v.findings.push_back(std::move(s));
  };
  std::map<std::pair<std::string, std::string>, MetricsReport> got;
  for (const auto& r : rows) got[{r.model, r.approach}] = r.metrics;

  for (const auto& ref : reference) {
    auto it = got.find({ref.model, ref.approach});
    if (it == got.end()) {
      note("missing row " + ref.model + "/" + ref.approach);
      continue;
    }
    const MetricsReport& m = it->second;
    if (std::fabs(m.acc - ref.metrics.acc) > tol.accuracy)
      note(ref.model + "/" + ref.approach + ": Acc " + format_sig6(m.acc) + " vs " + format_sig6(ref.metrics.acc));
    if (std::fabs(m.is - ref.metrics.is) > tol.iou)
      note(ref.model + "/" + ref.approach + ": IS " + format_sig6(m.is) + " vs " + format_sig6(ref.metrics.is));
  }

  std::map<std::string, std::map<std::string, double>> er;
  for (const auto& r : rows) er[r.model][r.approach] = r.metrics.er;
  for (const auto& [model, by_approach] : er) {
    if (!by_approach.count("gaussian") || !by_approach.count("gabor") || !by_approach.count("sobel")) continue;
    const double g = by_approach.at("gaussian"), b = by_approach.at("gabor"), s = by_approach.at("sobel");
    if (!(g >= b && b >= s))
      note(model + ": ER ordering gaussian >= gabor >= sobel violated (" + format_sig6(g) + ", " + format_sig6(b) +
           ", " + format_sig6(s) + ")");
  }
  return v;
}

}  // namespace retseg
