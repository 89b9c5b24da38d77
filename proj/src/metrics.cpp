#include "canguard/metrics.hpp"

#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "canguard/error.hpp"

namespace canguard {
namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

std::string four(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

}  // namespace

ConfusionMatrix confusion_matrix(const ClassVector& y_true, const ClassVector& y_pred, const ClassVector& classes) {
  if (y_true.size() != y_pred.size())
    throw ShapeError("confusion matrix: " + std::to_string(y_true.size()) + " true labels vs " +
                     std::to_string(y_pred.size()) + " predictions");
  std::map<std::string, Eigen::Index> lookup;
  for (std::size_t i = 0; i < classes.size(); ++i) lookup[classes[i]] = static_cast<Eigen::Index>(i);
  const auto k = static_cast<Eigen::Index>(classes.size());
  ConfusionMatrix cm = ConfusionMatrix::Zero(k, k);
  auto find = [&](const std::string& label) {
    auto it = lookup.find(label);
    if (it == lookup.end()) throw LabelError("label '" + label + "' is not in the class list");
    return it->second;
  };
  for (std::size_t i = 0; i < y_true.size(); ++i) ++cm(find(y_true[i]), find(y_pred[i]));
  return cm;
}

EvalReport classification_report(const ClassVector& y_true, const ClassVector& y_pred, const ClassVector& classes) {
  EvalReport r;
  r.classes = classes;
  r.confusion = confusion_matrix(y_true, y_pred, classes);
  const auto k = static_cast<Eigen::Index>(classes.size());
  const auto total = static_cast<double>(y_true.size());
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto tp = static_cast<double>(r.confusion(c, c));
    const auto predicted = static_cast<double>(r.confusion.col(c).sum());
    const auto actual = static_cast<double>(r.confusion.row(c).sum());
    ClassMetrics m;
    m.name = classes[static_cast<std::size_t>(c)];
    m.precision = ratio(tp, predicted);
    m.recall = ratio(tp, actual);
    m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    m.support = static_cast<std::size_t>(actual);
    r.per_class.push_back(m);
  }
  r.accuracy = ratio(static_cast<double>(r.confusion.trace()), total);
  for (const auto& m : r.per_class) {
    r.macro.precision += m.precision;
    r.macro.recall += m.recall;
    r.macro.f1 += m.f1;
    const double w = ratio(static_cast<double>(m.support), total);
    r.weighted.precision += w * m.precision;
    r.weighted.recall += w * m.recall;
    r.weighted.f1 += w * m.f1;
  }
  if (k > 0) {
    r.macro.precision /= static_cast<double>(k);
    r.macro.recall /= static_cast<double>(k);
    r.macro.f1 /= static_cast<double>(k);
  }
  r.macro.support = r.weighted.support = y_true.size();
  return r;
}

double f1_macro(const ClassVector& y_true, const ClassVector& y_pred, const ClassVector& classes) {
  return classification_report(y_true, y_pred, classes).macro.f1;
}

nlohmann::json to_json(const EvalReport& report, bool include_timing) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& m : report.per_class)
    per_class.push_back(
        {{"class", m.name}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}});
  auto avg = [](const AverageMetrics& a) {
    return nlohmann::json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}, {"support", a.support}};
  };
  nlohmann::json cm = nlohmann::json::array();
  for (Eigen::Index i = 0; i < report.confusion.rows(); ++i) {
    std::vector<std::int64_t> row(static_cast<std::size_t>(report.confusion.cols()));
    for (Eigen::Index j = 0; j < report.confusion.cols(); ++j) row[static_cast<std::size_t>(j)] = report.confusion(i, j);
    cm.push_back(row);
  }
  nlohmann::json doc = {{"classes", report.classes},
                        {"confusion_matrix", cm},
                        {"per_class", per_class},
                        {"accuracy", report.accuracy},
                        {"macro_avg", avg(report.macro)},
                        {"weighted_avg", avg(report.weighted)}};
  if (include_timing)
    doc["timing"] = {{"train_seconds", report.train_seconds}, {"predict_seconds", report.predict_seconds}};
  return doc;
}

std::string format_report(const EvalReport& report, const std::string& title) {
  std::size_t width = 14;
  for (const auto& m : report.per_class) width = std::max(width, m.name.size() + 2);
  std::ostringstream os;
  os << title << '\n';
  os << std::left << std::setw(static_cast<int>(width)) << "Class" << std::right << std::setw(11) << "Precision"
     << std::setw(11) << "Recall" << std::setw(11) << "F1-Score" << std::setw(10) << "Support" << '\n';
  auto line = [&](const std::string& name, double p, double r, double f, std::size_t s) {
    os << std::left << std::setw(static_cast<int>(width)) << name << std::right << std::setw(11) << four(p)
       << std::setw(11) << four(r) << std::setw(11) << four(f) << std::setw(10) << s << '\n';
  };
  for (const auto& m : report.per_class) line(m.name, m.precision, m.recall, m.f1, m.support);
  line("Macro Avg", report.macro.precision, report.macro.recall, report.macro.f1, report.macro.support);
  line("Weighted Avg", report.weighted.precision, report.weighted.recall, report.weighted.f1, report.weighted.support);
  os << std::left << std::setw(static_cast<int>(width)) << "Accuracy" << std::right << std::setw(11)
     << four(report.accuracy) << '\n';
  os << std::left << std::setw(static_cast<int>(width)) << "F1-Macro" << std::right << std::setw(11)
     << four(report.macro.f1) << '\n';
  return os.str();
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows, std::uint64_t seed) {
  out << "feature_set,model,accuracy,f1_macro,seed\n";
  for (const auto& r : rows)
    out << r.feature_set << ',' << r.model << ',' << four(r.accuracy) << ',' << four(r.f1_macro) << ',' << seed << '\n';
}

}  // namespace canguard
