#include "sz3d/report.hpp"

#include <cstdio>
#include <sstream>

#include "text_format.hpp"

namespace sz3d {

std::string percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * rate);
  return buf;
}

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string row(const std::string& label, const Metrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-24s %-8s %-8s %-8s %s\n", label.c_str(), percent(m.accuracy).c_str(),
                percent(m.specificity).c_str(), percent(m.sensitivity).c_str(), fixed3(m.auc).c_str());
  return buf;
}

std::string header(const std::string& first) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-24s %-8s %-8s %-8s %s\n", first.c_str(), "acc", "sp", "se", "AUC");
  return buf;
}

std::string counts(const Metrics& m) {
  return "TP=" + std::to_string(m.tp) + " TN=" + std::to_string(m.tn) + " FP=" + std::to_string(m.fp) +
         " FN=" + std::to_string(m.fn);
}

}  // namespace

std::string format_cv_report(const RepeatResult& r, const ReportContext& c) {
  std::ostringstream out;
  out << "family: " << r.family << '\n'
      << "repeats: " << r.table.size() << "  outer folds: " << c.outer_k << "  inner folds: " << c.inner_k
      << "  seed: " << c.seed << '\n'
      << "best repeat: " << r.best << " (accuracy " << percent(r.table[r.best].mean.accuracy) << ")\n";
  bool clean = true;
  for (const auto& t : r.table) clean = clean && t.leakage_free;
  out << "leakage audit: " << (clean ? "clean" : "VIOLATION") << "\n\n";

  out << header("repeat");
  for (const auto& t : r.table) out << row(std::to_string(t.repeat), t.mean);
  out << '\n';

  const RepeatRow& best = r.table[r.best];
  out << header("fold (best repeat)");
  for (std::size_t f = 0; f < best.folds.size(); ++f)
    out << row(std::to_string(f) + (best.selected[f].empty() ? "" : " " + best.selected[f]), best.folds[f]);
  out << '\n';

  out << header("Model");
  out << row(r.family, r.mean);
  std::vector<Metrics> per_repeat;
  for (const auto& t : r.table) per_repeat.push_back(t.pooled);
  const Metrics pooled = pooled_metrics(per_repeat);
  out << row(r.family + " (pooled)", pooled);
  out << "pooled counts: " << counts(pooled) << '\n';
  return out.str();
}

std::string cv_csv(const RepeatResult& r) {
  std::ostringstream out;
  out << "repeat,fold,accuracy,specificity,sensitivity,auc,tp,tn,fp,fn,selected\n";
  for (const auto& t : r.table)
    for (std::size_t f = 0; f < t.folds.size(); ++f) {
      const Metrics& m = t.folds[f];
      out << t.repeat << ',' << f << ',' << text::format_double(m.accuracy) << ','
          << text::format_double(m.specificity) << ',' << text::format_double(m.sensitivity) << ','
          << text::format_double(m.auc) << ',' << m.tp << ',' << m.tn << ',' << m.fp << ',' << m.fn << ','
          << t.selected[f] << '\n';
    }
  return out.str();
}

std::string predictions_csv(const CvResult& run, const Dataset& data) {
  std::ostringstream out;
  out << "index,id,fold,label,score,predicted\n";
  for (const auto& p : run.predictions)
    out << p.index << ',' << data[p.index].id << ',' << p.fold << ',' << p.label << ','
        << text::format_double(p.score) << ',' << p.predicted << '\n';
  return out.str();
}

std::string format_test_report(const std::string& model, const TestResult& t) {
  std::ostringstream out;
  out << "subjects: " << t.rows.size() << '\n' << header("Model") << row(model + " (ensemble)", t.metrics);
  out << "counts: " << counts(t.metrics) << '\n';
  out << "AUC from mean member score: " << fixed3(t.mean_score_auc) << '\n';
  return out.str();
}

std::string test_csv(const TestResult& t) {
  std::ostringstream out;
  out << "id,label,vote_fraction,class,vote_fraction_class1\n";
  for (const auto& r : t.rows)
    out << r.id << ',' << r.label << ',' << text::format_double(r.vote.fraction) << ',' << r.vote.cls << ','
        << text::format_double(r.vote.fraction_class1) << '\n';
  return out.str();
}

}  // namespace sz3d
