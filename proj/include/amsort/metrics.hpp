#pragma once

#include <map>
#include <string>
#include <vector>

#include "amsort/sequence.hpp"

namespace amsort::metrics {

struct EvalReport {
  double mota = 0.0;
  double idf1 = 0.0;
  int id_switches = 0;
  int fp = 0;
  int fn = 0;
  int gt_count = 0;
  int idtp = 0;
  int idfp = 0;
  int idfn = 0;
};

struct EvalDetail {
  EvalReport report;
  /// frame -> (gt id -> hypothesis id) for every CLEAR-MOT correspondence.
  std::map<int, std::map<int, int>> matches;
};

/// CLEAR-MOT with correspondence carry-over plus IDF1 from an exact global
/// identity matching. A pair counts only when IoU >= match_iou. With no
/// ground truth, MOTA is 1 when there are no false positives and
/// 1 - fp otherwise; IDF1 is 1 when both sides are empty.
EvalDetail evaluate_detailed(const Sequence& gt, const Sequence& hyp, double match_iou = 0.5);
EvalReport evaluate(const Sequence& gt, const Sequence& hyp, double match_iou = 0.5);

struct ThresholdRow {
  double threshold = 0.0;
  EvalReport report;
};

/// Thresholds must be strictly increasing inside (0, 1).
std::vector<ThresholdRow> iou_threshold_sweep(const Sequence& gt, const Sequence& hyp,
                                              const std::vector<double>& thresholds);

struct NamedReport {
  std::string sequence;
  EvalReport report;
};

/// Sums counts over sequences and recomputes MOTA and IDF1 from the totals.
EvalReport combine(const std::vector<NamedReport>& reports);

/// "sequence,mota,idf1,idsw,fp,fn,gt".
std::string report_csv(const std::vector<NamedReport>& reports);
std::string report_text(const std::vector<NamedReport>& reports);

}  // namespace amsort::metrics
