#include "pbpm/eval.hpp"

#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pbpm {

using json = nlohmann::json;

std::size_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

ConfusionMatrix confusion_matrix(const std::vector<std::int32_t>& y_true,
                                 const std::vector<std::int32_t>& y_pred, int n_classes) {
    if (y_true.size() != y_pred.size())
        throw std::invalid_argument("confusion_matrix: length mismatch (" +
                                    std::to_string(y_true.size()) + " vs " +
                                    std::to_string(y_pred.size()) + ")");
    ConfusionMatrix cm;
    cm.n_classes = static_cast<std::size_t>(n_classes);
    cm.counts.assign(cm.n_classes * cm.n_classes, 0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        std::int32_t t = y_true[i], p = y_pred[i];
        if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
            throw std::out_of_range("confusion_matrix: label out of range at index " +
                                    std::to_string(i));
        ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
    }
    return cm;
}

ClassificationReport classification_report(const ConfusionMatrix& cm) {
    const std::size_t k = cm.n_classes;
    ClassificationReport rep;
    rep.per_class.resize(k);
    rep.total = cm.total();

    std::size_t trace = 0;
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t tp = cm.at(c, c);
        trace += tp;
        std::size_t row_sum = 0, col_sum = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row_sum += cm.at(c, j);
            col_sum += cm.at(j, c);
        }
        ClassMetrics& m = rep.per_class[c];
        m.support = row_sum;
        if (col_sum == 0) {
            m.precision = 0.0;
            m.zero_division = true;
        } else {
            m.precision = static_cast<double>(tp) / static_cast<double>(col_sum);
        }
        if (row_sum == 0) {
            m.recall = 0.0;
            m.zero_division = true;
        } else {
            m.recall = static_cast<double>(tp) / static_cast<double>(row_sum);
        }
        if (m.precision + m.recall == 0.0) {
            m.f1 = 0.0;
            if (row_sum == 0 || col_sum == 0) m.zero_division = true;
        } else {
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        }
    }

    rep.accuracy = rep.total == 0
                       ? 0.0
                       : static_cast<double>(trace) / static_cast<double>(rep.total);
    double support_sum = static_cast<double>(rep.total);
    for (std::size_t c = 0; c < k; ++c) {
        const ClassMetrics& m = rep.per_class[c];
        rep.macro_precision += m.precision / static_cast<double>(k);
        rep.macro_recall += m.recall / static_cast<double>(k);
        rep.macro_f1 += m.f1 / static_cast<double>(k);
        if (support_sum > 0) {
            double w = static_cast<double>(m.support) / support_sum;
            rep.weighted_precision += w * m.precision;
            rep.weighted_recall += w * m.recall;
            rep.weighted_f1 += w * m.f1;
        }
    }
    return rep;
}

std::string render_report(const ClassificationReport& report,
                          const std::vector<std::string>& class_labels) {
    std::ostringstream out;
    out << std::left << std::setw(16) << "class" << std::right << std::setw(11) << "precision"
        << std::setw(9) << "recall" << std::setw(11) << "f1-score" << std::setw(10) << "support"
        << "\n\n";
    out << std::fixed << std::setprecision(4);
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const ClassMetrics& m = report.per_class[c];
        std::string label = c < class_labels.size() ? class_labels[c] : std::to_string(c);
        out << std::left << std::setw(16) << label << std::right << std::setw(11) << m.precision
            << std::setw(9) << m.recall << std::setw(11) << m.f1 << std::setw(10) << m.support;
        if (m.zero_division) out << "  *";
        out << "\n";
    }
    out << "\n";
    out << std::left << std::setw(16) << "accuracy" << std::right << std::setw(31)
        << report.accuracy << std::setw(10) << report.total << "\n";
    out << std::left << std::setw(16) << "macro avg" << std::right << std::setw(11)
        << report.macro_precision << std::setw(9) << report.macro_recall << std::setw(11)
        << report.macro_f1 << std::setw(10) << report.total << "\n";
    out << std::left << std::setw(16) << "weighted avg" << std::right << std::setw(11)
        << report.weighted_precision << std::setw(9) << report.weighted_recall << std::setw(11)
        << report.weighted_f1 << std::setw(10) << report.total << "\n";
    bool flagged = false;
    for (const auto& m : report.per_class) flagged = flagged || m.zero_division;
    if (flagged) out << "\n* zero-denominator metric reported as 0\n";
    return out.str();
}

void save_report(const ClassificationReport& report, const std::string& path,
                 const std::vector<std::string>& class_labels, const std::string& model_name) {
    json j;
    j["model"] = model_name;
    j["accuracy"] = report.accuracy;
    j["total"] = report.total;
    j["macro"] = {{"precision", report.macro_precision},
                  {"recall", report.macro_recall},
                  {"f1", report.macro_f1}};
    j["weighted"] = {{"precision", report.weighted_precision},
                     {"recall", report.weighted_recall},
                     {"f1", report.weighted_f1}};
    json classes = json::array();
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const ClassMetrics& m = report.per_class[c];
        classes.push_back({{"label", c < class_labels.size() ? class_labels[c]
                                                             : std::to_string(c)},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"support", m.support},
                           {"zero_division", m.zero_division}});
    }
    j["classes"] = classes;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report '" + path + "'");
    out << j.dump(2) << "\n";
}

ClassificationReport load_report(const std::string& path, std::vector<std::string>* labels_out,
                                 std::string* model_name_out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report '" + path + "'");
    json j = json::parse(in);
    ClassificationReport rep;
    rep.accuracy = j.at("accuracy").get<double>();
    rep.total = j.at("total").get<std::size_t>();
    rep.macro_precision = j.at("macro").at("precision").get<double>();
    rep.macro_recall = j.at("macro").at("recall").get<double>();
    rep.macro_f1 = j.at("macro").at("f1").get<double>();
    rep.weighted_precision = j.at("weighted").at("precision").get<double>();
    rep.weighted_recall = j.at("weighted").at("recall").get<double>();
    rep.weighted_f1 = j.at("weighted").at("f1").get<double>();
    if (labels_out) labels_out->clear();
    for (const auto& c : j.at("classes")) {
        ClassMetrics m;
        m.precision = c.at("precision").get<double>();
        m.recall = c.at("recall").get<double>();
        m.f1 = c.at("f1").get<double>();
        m.support = c.at("support").get<std::size_t>();
        m.zero_division = c.at("zero_division").get<bool>();
        rep.per_class.push_back(m);
        if (labels_out) labels_out->push_back(c.at("label").get<std::string>());
    }
    if (model_name_out) *model_name_out = j.value("model", "");
    return rep;
}

}  // namespace pbpm
