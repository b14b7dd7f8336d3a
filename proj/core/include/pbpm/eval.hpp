#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pbpm {

struct ConfusionMatrix {
    std::size_t n_classes = 0;
    std::vector<std::size_t> counts;  // row-major; (true, predicted)

    std::size_t at(std::size_t true_class, std::size_t predicted) const {
        return counts[true_class * n_classes + predicted];
    }
    std::size_t& at(std::size_t true_class, std::size_t predicted) {
        return counts[true_class * n_classes + predicted];
    }
    std::size_t total() const;
};

ConfusionMatrix confusion_matrix(const std::vector<std::int32_t>& y_true,
                                 const std::vector<std::int32_t>& y_pred, int n_classes);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    bool zero_division = false;  // any of the above had an empty denominator
};

struct ClassificationReport {
    std::vector<ClassMetrics> per_class;
    double accuracy = 0.0;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
    std::size_t total = 0;
};

/// precision_c = cm[c,c] / column sum, recall_c = cm[c,c] / row sum, F1 the
/// harmonic mean; zero denominators score 0 and set the flag.
ClassificationReport classification_report(const ConfusionMatrix& cm);

/// Table layout: one row per class (precision, recall, F1, support) and an
/// accuracy / macro / weighted footer.
std::string render_report(const ClassificationReport& report,
                          const std::vector<std::string>& class_labels = {});

/// Machine-readable structured export and its loader.
void save_report(const ClassificationReport& report, const std::string& path,
                 const std::vector<std::string>& class_labels = {},
                 const std::string& model_name = "");
ClassificationReport load_report(const std::string& path, std::vector<std::string>* labels_out,
                                 std::string* model_name_out);

}  // namespace pbpm
