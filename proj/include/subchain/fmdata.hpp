#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "subchain/types.hpp"

namespace subchain {

// One sparse labeled sample. Indices are 0-based in memory and strictly
// increasing; values are nonzero (explicit zeros are rejected on parse).
struct SparseSample {
  std::vector<std::size_t> indices;
  std::vector<double> values;
  double y = 0.0;

  void validate(std::size_t d0) const;  // SchemaError on violation
  double value_at(std::size_t index) const;  // 0.0 when outside the support
};

struct QualificationViolation {
  std::size_t sample_a = 0;  // positions in the sample list
  std::size_t sample_b = 0;
  std::vector<std::size_t> shared_indices;  // overlap, size >= 2
};

struct QualificationReport {
  bool ok = true;
  std::vector<QualificationViolation> violations;
};

// Every two samples may share at most one support index.
QualificationReport check_qualification(const std::vector<SparseSample>& samples,
                                        std::size_t d0);

// A dataset that passed qualification, with the pair-index machinery the
// training subdifferential oracle runs on: the union pair set (lexicographic),
// the per-sample pair lists (mutually disjoint), and per-pair coefficients
// x_i * x_j from the unique sample contributing each pair.
struct QualifiedDataset {
  std::vector<SparseSample> samples;
  std::size_t d0 = 0;
  PairIndexer indexer;  // restricted to the union pair set
  std::vector<std::vector<std::size_t>> sample_pairs;  // flat ids per sample
  std::vector<double> coeffs;        // per flat pair
  std::vector<std::size_t> pair_owner;  // per flat pair: contributing sample
};

QualifiedDataset build_qualified(std::vector<SparseSample> samples,
                                 std::size_t d0);

// sum_{j>i, i,j in supp(x)} (p_i^T p_j) x_i x_j  (homogeneous second-order part)
double fm_predict(const SparseSample& x, const DenseMatrix& p);

// JSON-lines: header {"d0": n}, then one {"y": ..., "x": {"1-based": value}}
// per line. Indices are 1-based strings on disk. Errors cite line numbers.
std::vector<SparseSample> parse_jsonl_dataset(const std::string& text,
                                              std::size_t& d0_out);
std::string serialize_jsonl_dataset(const std::vector<SparseSample>& samples,
                                    std::size_t d0);

}  // namespace subchain
