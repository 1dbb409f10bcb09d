#pragma once

#include <string>
#include <vector>

namespace lte {

/// Confusion-count based classification metrics. Rates with empty
/// denominators are 0 by convention, so absent classes count as 0 in the
/// macro averages.
struct MetricsReport {
    double accuracy = 0.0;
    std::vector<double> precision; // per class
    std::vector<double> recall;
    std::vector<double> f1;
    double macro_precision = 0.0;
    double macro_f1 = 0.0;
    std::vector<std::vector<long>> confusion; // counts[true][pred]
};

/// Labels must lie in 1..num_classes; vectors must be nonempty and of
/// equal length.
MetricsReport compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                              int num_classes);

/// JSON document with the report fields plus class names.
void save_metrics(const MetricsReport& report, const std::vector<std::string>& label_names,
                  const std::string& path);

/// Fixed-precision table: one row per class with precision and F1-score,
/// then the macro row and the overall accuracy.
std::string metrics_table(const MetricsReport& report,
                          const std::vector<std::string>& label_names);

} // namespace lte
