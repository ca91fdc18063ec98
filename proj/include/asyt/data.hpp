#pragma once

// Dataset ingestion and preparation: IDX and Iris loaders, PCA compression,
// min-max scaling, class subsetting, one-hot targets and seeded batching.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "asyt/netcore.hpp"

namespace asyt {

using Real = float;

enum class Split { train, test };

struct Dataset {
  Matrix<Real> features;  // samples x dims
  std::vector<int> labels;
  int class_count = 0;
  Split split = Split::train;
  std::string name;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dims() const { return features.cols(); }
  void validate() const;
};

struct TrainTest {
  Dataset train;
  Dataset test;
};

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 Split split = Split::train);

/// Iris CSV: four numeric features and a label per line. Labels may be
/// integers or class names; names are numbered in order of first appearance.
Dataset load_iris(const std::filesystem::path& path);

/// Per-feature min-max scaling fitted on one split.
struct MinMaxScaler {
  Vector<double> lo;
  Vector<double> hi;

  static MinMaxScaler fit(const Matrix<Real>& features);
  /// Maps the fitted range onto [0, 1]; values outside it are clamped.
  Matrix<Real> apply(const Matrix<Real>& features) const;
};

struct PcaModel {
  Vector<double> mean;
  Matrix<double> components;  // k x dims, orthonormal rows
  Vector<double> explained_variance;
  Vector<double> range_lo;  // per-component range of the fitting data
  Vector<double> range_hi;

  int rank() const { return static_cast<int>(components.rows()); }
};

PcaModel pca_fit(const Matrix<Real>& train_features, int k);
/// Centered projection onto the components, before rescaling.
Matrix<double> pca_project(const PcaModel& model, const Matrix<Real>& features);
/// Projection rescaled to [0, 1] per component using the fitted range.
Matrix<Real> pca_apply(const PcaModel& model, const Matrix<Real>& features);

/// Keeps the listed classes and relabels them 0..k-1 in the order given.
Dataset subset_classes(const Dataset& dataset, const std::vector<int>& classes);

/// Stratified split with a fixed seed; the train share is rounded per class.
TrainTest stratified_split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

/// Seeded sample of at most `per_class` examples from each class.
Dataset sample_per_class(const Dataset& dataset, int per_class, std::uint64_t seed);

Matrix<Real> one_hot(const std::vector<int>& labels, int class_count);

struct Batch {
  Matrix<Real> features;
  Matrix<Real> targets;
  std::vector<int> labels;
  std::vector<int> indices;
};

/// Deterministic per-(seed, epoch) batch order. The last batch may be short.
class BatchIterator {
 public:
  BatchIterator(const Dataset& dataset, int batch_size, std::uint64_t seed, int epoch,
                bool shuffle);

  std::size_t batch_count() const;
  Batch batch(std::size_t index) const;
  const std::vector<int>& order() const { return order_; }

  /// Hash of the visiting order and batch size.
  std::uint64_t schedule_hash() const;

 private:
  const Dataset* dataset_;
  int batch_size_;
  std::vector<int> order_;
};

std::vector<int> epoch_permutation(std::size_t n, std::uint64_t seed, int epoch, bool shuffle);

Batch gather(const Dataset& dataset, const std::vector<int>& indices);

}  // namespace asyt
