#include "lte/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "lte/error.hpp"
#include "serde_util.hpp"

namespace lte {

MetricsReport compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                              int num_classes) {
    require(num_classes >= 1, "compute_metrics: need at least 1 class");
    require(!y_true.empty(), "compute_metrics: empty label vectors");
    require(y_true.size() == y_pred.size(), "compute_metrics: length mismatch");

    MetricsReport report;
    report.confusion.assign(num_classes, std::vector<long>(num_classes, 0));
    for (std::size_t t = 0; t < y_true.size(); ++t) {
        require(y_true[t] >= 1 && y_true[t] <= num_classes,
                "compute_metrics: true label out of range");
        require(y_pred[t] >= 1 && y_pred[t] <= num_classes,
                "compute_metrics: predicted label out of range");
        ++report.confusion[y_true[t] - 1][y_pred[t] - 1];
    }

    long trace = 0;
    for (int c = 0; c < num_classes; ++c) trace += report.confusion[c][c];
    report.accuracy = static_cast<double>(trace) / static_cast<double>(y_true.size());

    for (int c = 0; c < num_classes; ++c) {
        long row_sum = 0, col_sum = 0;
        for (int o = 0; o < num_classes; ++o) {
            row_sum += report.confusion[c][o];
            col_sum += report.confusion[o][c];
        }
        const long diag = report.confusion[c][c];
        const double precision =
            col_sum > 0 ? static_cast<double>(diag) / static_cast<double>(col_sum) : 0.0;
        const double recall =
            row_sum > 0 ? static_cast<double>(diag) / static_cast<double>(row_sum) : 0.0;
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        report.precision.push_back(precision);
        report.recall.push_back(recall);
        report.f1.push_back(f1);
        report.macro_precision += precision;
        report.macro_f1 += f1;
    }
    report.macro_precision /= static_cast<double>(num_classes);
    report.macro_f1 /= static_cast<double>(num_classes);
    return report;
}

void save_metrics(const MetricsReport& report, const std::vector<std::string>& label_names,
                  const std::string& path) {
    require(label_names.size() == report.precision.size(),
            "save_metrics: label name count does not match the report");
    nlohmann::json doc;
    doc["schema_version"] = serde::kSchemaVersion;
    doc["kind"] = "metrics";
    doc["accuracy"] = report.accuracy;
    doc["classes"] = label_names;
    doc["precision"] = report.precision;
    doc["recall"] = report.recall;
    doc["f1"] = report.f1;
    doc["macro_precision"] = report.macro_precision;
    doc["macro_f1"] = report.macro_f1;
    doc["confusion"] = report.confusion;
    serde::write_json_file(path, doc);
}

std::string metrics_table(const MetricsReport& report,
                          const std::vector<std::string>& label_names) {
    require(label_names.size() == report.precision.size(),
            "metrics_table: label name count does not match the report");
    std::size_t width = 5; // fits "macro"
    for (const std::string& name : label_names) width = std::max(width, name.size());

    std::ostringstream out;
    auto pad = [&](const std::string& s) {
        out << s;
        for (std::size_t i = s.size(); i < width; ++i) out << ' ';
    };
    char buf[32];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return std::string(buf);
    };

    pad("class");
    out << "  Prec.  F1-score\n";
    for (std::size_t c = 0; c < label_names.size(); ++c) {
        pad(label_names[c]);
        out << "  " << num(report.precision[c]) << "  " << num(report.f1[c]) << "\n";
    }
    pad("macro");
    out << "  " << num(report.macro_precision) << "  " << num(report.macro_f1) << "\n";
    out << "Acc. " << num(report.accuracy) << "\n";
    return out.str();
}

} // namespace lte
