#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace melanet::metrics {

struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;

    long long total() const { return tp + fp + tn + fn; }
};

// labels and predictions are 0 (benign) / 1 (malignant); malignant is the
// positive class
ConfusionCounts confusion(const std::vector<int>& labels, const std::vector<int>& predictions);

// Eq.-(8) recall: tp / (tp + fn); undefined without positives
double sensitivity(const ConfusionCounts& counts);

struct RocPoint {
    double fpr;
    double tpr;
    double threshold;
};

struct RocCurve {
    std::vector<RocPoint> points;  // sorted from (0,0) to (1,1)
};

// Threshold sweep over the distinct scores (descending) plus +inf / -inf
// sentinels; tied scores advance the curve in a single step.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);

// Trapezoidal area under the (fpr, tpr) polyline.
double auc(const RocCurve& curve);

struct PerSampleScore {
    std::string id;
    double p_malignant;
    int label;
};

struct EvalReport {
    ConfusionCounts counts;
    double sensitivity = 0.0;
    double auc = 0.0;
    RocCurve roc;
    std::vector<PerSampleScore> per_sample_scores;
    std::string config_fingerprint;

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
    void write(const std::filesystem::path& report_dir) const;  // eval_report.json + roc.csv
    static EvalReport read(const std::filesystem::path& report_dir);
};

EvalReport evaluate(const std::vector<PerSampleScore>& scored, double threshold,
                    const std::string& config_fingerprint);

struct ComparisonRow {
    std::string method;
    double auc_pct;
    double sensitivity_pct;
    long long fn;
};

// Published ISIC-2016 reference results the comparison table is benchmarked
// against.
std::vector<ComparisonRow> published_reference_rows();

// One row per (name, report), prefixed by the published reference rows.
std::vector<ComparisonRow> compare_report(
    const std::vector<std::pair<std::string, EvalReport>>& reports);

std::string render_comparison(const std::vector<ComparisonRow>& rows);
void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                          const std::filesystem::path& path);
void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path);

}  // namespace melanet::metrics
