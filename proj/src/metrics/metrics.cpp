#include "melanet/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "melanet/errors.hpp"

namespace melanet::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_binary(int v, const char* what) {
    if (v != 0 && v != 1)
        throw EvalError(std::string(what) + " value " + std::to_string(v) + " is not binary");
}

nlohmann::json threshold_to_json(double t) {
    if (t == kInf) return "inf";
    if (t == -kInf) return "-inf";
    return t;
}

double threshold_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        throw DataError("eval report: bad threshold '" + s + "'");
    }
    return j.get<double>();
}

std::string format_threshold(double t) {
    if (t == kInf) return "inf";
    if (t == -kInf) return "-inf";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", t);
    return buf;
}

}  // namespace

ConfusionCounts confusion(const std::vector<int>& labels,
                          const std::vector<int>& predictions) {
    if (labels.size() != predictions.size())
        throw EvalError("confusion: " + std::to_string(labels.size()) + " labels vs " +
                        std::to_string(predictions.size()) + " predictions");
    ConfusionCounts c;
    for (size_t i = 0; i < labels.size(); ++i) {
        require_binary(labels[i], "label");
        require_binary(predictions[i], "prediction");
        if (labels[i] == 1)
            (predictions[i] == 1 ? c.tp : c.fn) += 1;
        else
            (predictions[i] == 1 ? c.fp : c.tn) += 1;
    }
    return c;
}

double sensitivity(const ConfusionCounts& counts) {
    if (counts.tp + counts.fn == 0)
        throw EvalError("sensitivity undefined: no positive samples");
    return static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn);
}

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw EvalError("roc_curve: " + std::to_string(scores.size()) + " scores vs " +
                        std::to_string(labels.size()) + " labels");
    long long n_pos = 0, n_neg = 0;
    for (int l : labels) {
        require_binary(l, "label");
        (l == 1 ? n_pos : n_neg) += 1;
    }
    if (n_pos == 0 || n_neg == 0)
        throw EvalError("roc_curve requires both classes, got " + std::to_string(n_pos) +
                        " positive and " + std::to_string(n_neg) + " negative");

    std::vector<size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, kInf});
    long long tp = 0, fp = 0;
    size_t i = 0;
    while (i < idx.size()) {
        double s = scores[idx[i]];
        // advance through the whole tied block in one step
        while (i < idx.size() && scores[idx[i]] == s) {
            (labels[idx[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        curve.points.push_back({static_cast<double>(fp) / n_neg,
                                static_cast<double>(tp) / n_pos, s});
    }
    curve.points.push_back({1.0, 1.0, -kInf});
    return curve;
}

double auc(const RocCurve& curve) {
    double area = 0.0;
    for (size_t i = 1; i < curve.points.size(); ++i) {
        const RocPoint& a = curve.points[i - 1];
        const RocPoint& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    return area;
}

EvalReport evaluate(const std::vector<PerSampleScore>& scored, double threshold,
                    const std::string& config_fingerprint) {
    if (scored.empty()) throw EvalError("evaluate: no scored samples");
    std::vector<int> labels, preds;
    std::vector<double> scores;
    for (const auto& s : scored) {
        labels.push_back(s.label);
        scores.push_back(s.p_malignant);
        preds.push_back(s.p_malignant >= threshold ? 1 : 0);
    }
    EvalReport report;
    report.counts = confusion(labels, preds);
    report.sensitivity = sensitivity(report.counts);
    report.roc = roc_curve(scores, labels);
    report.auc = auc(report.roc);
    report.per_sample_scores = scored;
    report.config_fingerprint = config_fingerprint;
    return report;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["counts"] = {{"tp", counts.tp}, {"fp", counts.fp}, {"tn", counts.tn}, {"fn", counts.fn}};
    j["sensitivity"] = sensitivity;
    j["auc"] = auc;
    j["roc"] = nlohmann::json::array();
    for (const auto& p : roc.points)
        j["roc"].push_back({p.fpr, p.tpr, threshold_to_json(p.threshold)});
    j["per_sample_scores"] = nlohmann::json::array();
    for (const auto& s : per_sample_scores)
        j["per_sample_scores"].push_back(
            {{"id", s.id}, {"p_malignant", s.p_malignant}, {"label", s.label}});
    j["config_fingerprint"] = config_fingerprint;
    return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
    EvalReport r;
    r.counts.tp = j.at("counts").at("tp").get<long long>();
    r.counts.fp = j.at("counts").at("fp").get<long long>();
    r.counts.tn = j.at("counts").at("tn").get<long long>();
    r.counts.fn = j.at("counts").at("fn").get<long long>();
    r.sensitivity = j.at("sensitivity").get<double>();
    r.auc = j.at("auc").get<double>();
    for (const auto& p : j.at("roc"))
        r.roc.points.push_back(
            {p.at(0).get<double>(), p.at(1).get<double>(), threshold_from_json(p.at(2))});
    for (const auto& s : j.at("per_sample_scores"))
        r.per_sample_scores.push_back({s.at("id").get<std::string>(),
                                       s.at("p_malignant").get<double>(),
                                       s.at("label").get<int>()});
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    return r;
}

void EvalReport::write(const std::filesystem::path& report_dir) const {
    std::filesystem::create_directories(report_dir);
    std::ofstream os(report_dir / "eval_report.json", std::ios::trunc);
    if (!os) throw EvalError("cannot write eval report to '" + report_dir.string() + "'");
    os << to_json().dump(2) << "\n";
    write_roc_csv(roc, report_dir / "roc.csv");
}

EvalReport EvalReport::read(const std::filesystem::path& report_dir) {
    std::ifstream is(report_dir / "eval_report.json");
    if (!is)
        throw DataError("missing eval report '" + (report_dir / "eval_report.json").string() +
                        "'");
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded())
        throw DataError("corrupt eval report in '" + report_dir.string() + "'");
    return from_json(j);
}

std::vector<ComparisonRow> published_reference_rows() {
    return {
        {"Gutman et al.", 80.40, 50.70, -1},
        {"Yu et al. (without segmentation)", 78.20, 42.70, -1},
        {"Yu et al. (with segmentation)", 78.30, 54.70, -1},
        {"VGG-GAP", 79.08, 84.46, 55},
        {"VGG-GAP + Augment-5x", 78.81, 85.34, 51},
        {"VGG-GAP + Augment-10x", 79.56, 86.09, 47},
        {"MelaNet", 81.18, 91.76, 22},
    };
}

std::vector<ComparisonRow> compare_report(
    const std::vector<std::pair<std::string, EvalReport>>& reports) {
    std::vector<ComparisonRow> rows = published_reference_rows();
    for (const auto& [name, r] : reports)
        rows.push_back({name, 100.0 * r.auc, 100.0 * r.sensitivity, r.counts.fn});
    return rows;
}

std::string render_comparison(const std::vector<ComparisonRow>& rows) {
    size_t width = 6;
    for (const auto& r : rows) width = std::max(width, r.method.size());
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-*s  %8s  %15s  %6s\n", static_cast<int>(width), "Method",
                  "AUC (%)", "Sensitivity (%)", "FN");
    os << buf;
    for (const auto& r : rows) {
        std::string fn = r.fn < 0 ? "--" : std::to_string(r.fn);
        std::snprintf(buf, sizeof(buf), "%-*s  %8.2f  %15.2f  %6s\n", static_cast<int>(width),
                      r.method.c_str(), r.auc_pct, r.sensitivity_pct, fn.c_str());
        os << buf;
    }
    return os.str();
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                          const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw EvalError("cannot open '" + path.string() + "' for writing");
    os << "method,auc_pct,sensitivity_pct,fn\n";
    char buf[160];
    for (const auto& r : rows) {
        std::string fn = r.fn < 0 ? "" : std::to_string(r.fn);
        std::snprintf(buf, sizeof(buf), "\"%s\",%.2f,%.2f,%s\n", r.method.c_str(), r.auc_pct,
                      r.sensitivity_pct, fn.c_str());
        os << buf;
    }
}

void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw EvalError("cannot open '" + path.string() + "' for writing");
    os << "fpr,tpr,threshold\n";
    char buf[120];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%s\n", p.fpr, p.tpr,
                      format_threshold(p.threshold).c_str());
        os << buf;
    }
}

}  // namespace melanet::metrics
