#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "retseg/metrics.hpp"

namespace retseg {

struct ReportRow {
  std::string model;     // e.g. reti-unet1
  std::string approach;  // gaussian | gabor | sobel
  MetricsReport metrics;
};

enum class ReportFormat { Csv, Markdown };

/// %.6g; infinities print as "inf".
std::string format_sig6(double value);

/// One table per approach (gaussian, gabor, sobel, then others alphabetically),
/// rows ordered by model name, columns Model,IS,Acc,Rec,DL,DC,TT,ER.
/// CSV is a single header `model,approach,IS,Acc,Rec,DL,DC,TT_s,ER` with rows grouped the same way.
/// Throws NoRows.
std::string emit_report(std::vector<ReportRow> rows, ReportFormat format);

/// Parses text produced by emit_report(..., Csv).
std::vector<ReportRow> parse_report_csv(std::string_view text);

/// Full-width DRIVE results the grid reproduction is compared against (IS, Acc,
/// Rec, DL, DC, TT, ER for each model and approach).
std::vector<ReportRow> reference_rows();

struct ReproductionTolerance {
  double accuracy = 0.02;
  double iou = 0.05;
};

struct ReproductionVerdict {
  bool ok = true;
  std::vector<std::string> findings;  // one line per failed check
};

/// Loose comparison of a full grid against reference_rows(): per row |Acc - ref| and
/// |IS - ref| within tolerance, and per model ER(gaussian) >= ER(gabor) >= ER(sobel).
ReproductionVerdict check_reproduction(const std::vector<ReportRow>& rows,
                                       const std::vector<ReportRow>& reference = reference_rows(),
                                       ReproductionTolerance tol = {});

}  // namespace retseg
