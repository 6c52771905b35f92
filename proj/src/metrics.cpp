#include "amsort/metrics.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "amsort/association.hpp"
#include "amsort/error.hpp"

namespace amsort::metrics {

namespace {

constexpr double kInvalid = 1e6;

void finish(EvalReport& r) {
  if (r.gt_count > 0) {
    r.mota = 1.0 - static_cast<double>(r.fp + r.fn + r.id_switches) / r.gt_count;
  } else {
    r.mota = 1.0 - r.fp;
  }
  const int denom = 2 * r.idtp + r.idfp + r.idfn;
  r.idf1 = denom == 0 ? 1.0 : 2.0 * r.idtp / denom;
}

}  // namespace

EvalDetail evaluate_detailed(const Sequence& gt, const Sequence& hyp, double match_iou) {
  if (!(match_iou > 0.0 && match_iou < 1.0)) throw UsageError("evaluate: match_iou must lie in (0, 1)");
  const auto gt_frames = by_frame(gt);
  const auto hyp_frames = by_frame(hyp);
  std::set<int> frames;
  for (const auto& [f, _] : gt_frames) frames.insert(f);
  for (const auto& [f, _] : hyp_frames) frames.insert(f);

  EvalDetail out;
  EvalReport& r = out.report;
  std::map<int, int> carried;      // gt id -> hyp id of the previous frame
  std::map<int, int> last_match;   // gt id -> hyp id at its last matched frame
  std::map<std::pair<int, int>, int> overlap;
  std::map<int, int> gt_total, hyp_total;
  static const std::vector<Observation> kNone;

  for (int f : frames) {
    const auto gi = gt_frames.find(f);
    const auto hi = hyp_frames.find(f);
    const auto& g = gi == gt_frames.end() ? kNone : gi->second;
    const auto& h = hi == hyp_frames.end() ? kNone : hi->second;
    r.gt_count += static_cast<int>(g.size());
    for (const auto& o : g) ++gt_total[o.id];
    for (const auto& o : h) ++hyp_total[o.id];

    // Identity overlap counts every gated pair, independent of CLEAR-MOT.
    for (const auto& a : g) {
      for (const auto& b : h) {
        if (iou(a.box, b.box) >= match_iou) ++overlap[{a.id, b.id}];
      }
    }

    std::vector<int> gmatch(g.size(), -1);
    std::vector<bool> htaken(h.size(), false);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto c = carried.find(g[i].id);
      if (c == carried.end()) continue;
      for (std::size_t j = 0; j < h.size(); ++j) {
        if (!htaken[j] && h[j].id == c->second && iou(g[i].box, h[j].box) >= match_iou) {
          gmatch[i] = static_cast<int>(j);
          htaken[j] = true;
          break;
        }
      }
    }
    std::vector<std::size_t> gi_free, hj_free;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (gmatch[i] < 0) gi_free.push_back(i);
    }
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (!htaken[j]) hj_free.push_back(j);
    }
    if (!gi_free.empty() && !hj_free.empty()) {
      assoc::CostMatrix c(gi_free.size(), hj_free.size());
      for (std::size_t a = 0; a < gi_free.size(); ++a) {
        for (std::size_t b = 0; b < hj_free.size(); ++b) {
          const double v = iou(g[gi_free[a]].box, h[hj_free[b]].box);
          c(a, b) = v >= match_iou ? 1.0 - v : kInvalid;
        }
      }
      for (const auto& [a, b] : assoc::hungarian(c).matches) {
        if (c(a, b) >= kInvalid) continue;
        gmatch[gi_free[a]] = static_cast<int>(hj_free[b]);
        htaken[hj_free[b]] = true;
      }
    }

    carried.clear();
    int matched = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (gmatch[i] < 0) continue;
      ++matched;
      const int gid = g[i].id, hid = h[static_cast<std::size_t>(gmatch[i])].id;
      const auto lm = last_match.find(gid);
      if (lm != last_match.end() && lm->second != hid) ++r.id_switches;
      last_match[gid] = hid;
      carried[gid] = hid;
      out.matches[f][gid] = hid;
    }
    r.fn += static_cast<int>(g.size()) - matched;
    r.fp += static_cast<int>(h.size()) - matched;
  }

  // Global identity matching maximizing the total overlap.
  std::vector<int> gids, hids;
  for (const auto& [id, _] : gt_total) gids.push_back(id);
  for (const auto& [id, _] : hyp_total) hids.push_back(id);
  int n_gt = 0, n_hyp = 0;
  for (const auto& [_, n] : gt_total) n_gt += n;
  for (const auto& [_, n] : hyp_total) n_hyp += n;
  if (!gids.empty() && !hids.empty()) {
    int max_overlap = 0;
    for (const auto& [_, n] : overlap) max_overlap = std::max(max_overlap, n);
    assoc::CostMatrix c(gids.size(), hids.size(), static_cast<double>(max_overlap));
    for (std::size_t a = 0; a < gids.size(); ++a) {
      for (std::size_t b = 0; b < hids.size(); ++b) {
        const auto it = overlap.find({gids[a], hids[b]});
        if (it != overlap.end()) c(a, b) = max_overlap - it->second;
      }
    }
    for (const auto& [a, b] : assoc::hungarian(c).matches) r.idtp += max_overlap - static_cast<int>(c(a, b));
  }
  r.idfn = n_gt - r.idtp;
  r.idfp = n_hyp - r.idtp;
  finish(r);
  return out;
}

EvalReport evaluate(const Sequence& gt, const Sequence& hyp, double match_iou) {
  return evaluate_detailed(gt, hyp, match_iou).report;
}

std::vector<ThresholdRow> iou_threshold_sweep(const Sequence& gt, const Sequence& hyp,
                                              const std::vector<double>& thresholds) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0) || (i > 0 && thresholds[i] <= thresholds[i - 1])) {
      throw UsageError("iou_threshold_sweep: thresholds must be strictly increasing in (0, 1)");
    }
  }
  std::vector<ThresholdRow> rows;
  for (double t : thresholds) rows.push_back({t, evaluate(gt, hyp, t)});
  return rows;
}

EvalReport combine(const std::vector<NamedReport>& reports) {
  EvalReport r;
  for (const auto& n : reports) {
    r.id_switches += n.report.id_switches;
    r.fp += n.report.fp;
    r.fn += n.report.fn;
    r.gt_count += n.report.gt_count;
    r.idtp += n.report.idtp;
    r.idfp += n.report.idfp;
    r.idfn += n.report.idfn;
  }
  finish(r);
  return r;
}

std::string report_csv(const std::vector<NamedReport>& reports) {
  std::ostringstream os;
  os << "sequence,mota,idf1,idsw,fp,fn,gt\n";
  char buf[256];
  for (const auto& n : reports) {
    const auto& r = n.report;
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%d,%d,%d,%d\n", r.mota, r.idf1, r.id_switches, r.fp, r.fn, r.gt_count);
    os << n.sequence << buf;
  }
  return os.str();
}

std::string report_text(const std::vector<NamedReport>& reports) {
  std::ostringstream os;
  std::size_t w = 8;
  for (const auto& n : reports) w = std::max(w, n.sequence.size());
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %8s %8s %6s %7s %7s %7s\n", static_cast<int>(w), "sequence", "MOTA", "IDF1",
                "IDSW", "FP", "FN", "GT");
  os << buf;
  for (const auto& n : reports) {
    const auto& r = n.report;
    std::snprintf(buf, sizeof buf, "%-*s %8.4f %8.4f %6d %7d %7d %7d\n", static_cast<int>(w), n.sequence.c_str(),
                  r.mota, r.idf1, r.id_switches, r.fp, r.fn, r.gt_count);
    os << buf;
  }
  return os.str();
}

}  // namespace amsort::metrics
