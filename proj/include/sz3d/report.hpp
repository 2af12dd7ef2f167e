#pragma once

#include <string>

#include "sz3d/evaluation.hpp"

namespace sz3d {

struct ReportContext {
  std::size_t outer_k = 5;
  std::size_t inner_k = 4;
  std::uint64_t seed = 0;
};

/// Plain-text report: per-repeat table, per-fold table of the best repeat and
/// a final row in acc, sp, se, AUC order.
std::string format_cv_report(const RepeatResult& result, const ReportContext& context);

/// repeat,fold,accuracy,specificity,sensitivity,auc,tp,tn,fp,fn,selected
std::string cv_csv(const RepeatResult& result);

/// index,id,fold,label,score,predicted for the best repeat.
std::string predictions_csv(const CvResult& run, const Dataset& data);

std::string format_test_report(const std::string& model, const TestResult& result);

/// id,label,vote_fraction,class,vote_fraction_class1
std::string test_csv(const TestResult& result);

std::string percent(double rate);  // 0.7927 -> "79.27%"

}  // namespace sz3d
