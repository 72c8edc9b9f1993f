#ifndef OTTER_IO_H_
#define OTTER_IO_H_

// File formats. Class labels are 1-based on disk and 0-based in memory.
// Probabilities are written with 17 significant digits so reads round-trip.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "otter/adapter.h"
#include "otter/core.h"
#include "otter/reweight.h"
#include "otter/synthlab.h"

namespace otter {

// Numeric CSV. A single leading header row is skipped when any of its cells
// is non-numeric. Throws Error{kParseError} naming the row and column, or
// Error{kIoError} when the file cannot be opened.
Matrix read_csv_matrix(const std::string& path);
Matrix parse_csv_matrix(std::istream& in, const std::string& source);

ScoreMatrix read_scores(const std::string& path);
void write_scores(const ScoreMatrix& s, const std::string& path);

// One CSV row of K probabilities or a JSON object {"probs": [...]}.
LabelDistribution read_distribution(const std::string& path);
void write_distribution(const LabelDistribution& nu, std::ostream& out);
void write_distribution(const LabelDistribution& nu, const std::string& path);

// "index,label" with 1-based indices and labels.
void write_predictions(const Predictions& p, std::ostream& out);
void write_predictions(const Predictions& p, const std::string& path);

// Reads labels written by write_predictions, or a single column of 1-based
// labels with an optional header. `k` of 0 infers K from the largest label.
Predictions read_labels(const std::string& path, std::size_t k = 0);

// {"k": K, "r": [...]} plus "temperature" when it differs from 1.
struct StoredReweight {
  ReweightVector r = ReweightVector::Ones(1);
  double temperature = 1.0;
};
StoredReweight read_reweight(const std::string& path);
void write_reweight(const ReweightVector& r, double temperature, std::ostream& out);
void write_reweight(const ReweightVector& r, double temperature, const std::string& path);

// {"groups": [[1, 2], [3]]} with 1-based subclass indices.
Hierarchy read_hierarchy(const std::string& path, std::size_t k);

// Columns: tv_distance, method, noise_kind, noise_level, seed, accuracy.
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace otter

#endif  // OTTER_IO_H_
