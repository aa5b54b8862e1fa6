#pragma once

#include <string>
#include <vector>

#include "rwsl/common.hpp"
#include "rwsl/graph.hpp"

namespace rwsl {

struct MetricReport {
    double accuracy = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    double macro_f1 = 0.0;
    double modularity = 0.0;
    double conductance = 0.0;

    static constexpr const char* kFieldNames[6] = {"accuracy", "nmi", "ari", "macro_f1", "modularity",
                                                   "conductance"};
    std::vector<double> values() const { return {accuracy, nmi, ari, macro_f1, modularity, conductance}; }
    static MetricReport from_values(const std::vector<double>& v);

    std::string to_json() const;
    static std::string csv_header();
    std::string csv_row() const;
};

/// Maximum-weight perfect matching on a square matrix (Hungarian method).
/// Returns, for each row, the matched column.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weight);

/// Rows: predicted clusters, columns: truth classes.
std::vector<std::vector<double>> confusion_matrix(const LabelVector& pred, const LabelVector& truth);

/// Cluster -> class map maximizing matched nodes; clusters left without a
/// class (more clusters than classes) map to -1.
std::vector<int> best_cluster_mapping(const LabelVector& pred, const LabelVector& truth);

double accuracy(const LabelVector& pred, const LabelVector& truth);

/// Mutual information normalized by the arithmetic mean of the two entropies.
double nmi(const LabelVector& pred, const LabelVector& truth);

/// Adjusted Rand index.
double ari(const LabelVector& pred, const LabelVector& truth);

/// Macro F1 over truth classes after optimal relabeling of pred.
double macro_f1(const LabelVector& pred, const LabelVector& truth);

/// Newman modularity on a graph without self-loops.
double modularity(const CsrGraph& g, const LabelVector& assignment);

/// Mean over non-empty clusters of cut(S) / min(vol(S), vol(V \ S)).
double conductance(const CsrGraph& g, const LabelVector& assignment);

MetricReport evaluate(const CsrGraph& g, const LabelVector& pred, const LabelVector& truth);

}  // namespace rwsl
