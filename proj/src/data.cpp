#include "asyt/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "asyt/hash.hpp"
#include "asyt/rng.hpp"

namespace asyt {

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw ConsistencyError("feature rows and labels differ in count");
  for (int y : labels)
    if (y < 0 || y >= class_count) throw ParameterError("label outside class range");
  if (!features.allFinite()) throw NumericError("non-finite feature");
}

// ---------------------------------------------------------------------------
// IDX

namespace {

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4))
    throw IoError("truncated IDX header in " + path.string());
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

struct IdxFile {
  std::vector<std::uint32_t> dims;
  std::vector<unsigned char> payload;
};

IdxFile read_idx(const std::filesystem::path& path, std::uint32_t expected_magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::uint32_t magic = read_be32(in, path);
  if (magic != expected_magic) {
    std::ostringstream msg;
    msg << "bad IDX magic 0x" << std::hex << magic << " in " << path.string() << " (expected 0x"
        << expected_magic << ')';
    throw FormatError(msg.str());
  }
  IdxFile file;
  const int rank = static_cast<int>(magic & 0xff);
  std::size_t total = 1;
  for (int i = 0; i < rank; ++i) {
    file.dims.push_back(read_be32(in, path));
    total *= file.dims.back();
  }
  file.payload.resize(total);
  if (!in.read(reinterpret_cast<char*>(file.payload.data()), static_cast<std::streamsize>(total)))
    throw IoError("truncated IDX payload in " + path.string());
  return file;
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 Split split) {
  const IdxFile img = read_idx(images, 0x00000803);
  const IdxFile lab = read_idx(labels, 0x00000801);
  const std::size_t count = img.dims[0];
  if (lab.dims[0] != count)
    throw ConsistencyError("image count " + std::to_string(count) + " != label count " +
                           std::to_string(lab.dims[0]));
  const std::size_t width = count ? img.payload.size() / count : 0;

  Dataset ds;
  ds.split = split;
  ds.name = images.stem().string();
  ds.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < width; ++j)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<Real>(img.payload[i * width + j]) / Real(255);
  ds.labels.assign(lab.payload.begin(), lab.payload.end());
  ds.class_count = 1 + *std::max_element(ds.labels.begin(), ds.labels.end());
  return ds;
}

// ---------------------------------------------------------------------------
// Iris

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r\"");
    const auto e = field.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

Dataset load_iris(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::array<double, 4>> rows;
  std::vector<int> labels;
  std::map<std::string, int> names;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line);
    std::array<double, 4> x{};
    bool numeric = fields.size() == 5;
    for (int j = 0; numeric && j < 4; ++j) numeric = parse_double(fields[j], x[j]);
    if (!numeric) {
      // A leading header row is tolerated; anything else is malformed.
      if (rows.empty() && line_no == 1) continue;
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": malformed Iris row");
    }
    int label = 0;
    if (!parse_int(fields[4], label)) {
      auto [it, inserted] = names.emplace(fields[4], static_cast<int>(names.size()));
      label = it->second;
    }
    if (label < 0) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad label");
    rows.push_back(x);
    labels.push_back(label);
  }
  if (rows.empty()) throw FormatError("no Iris rows in " + path.string());
  // Names are numbered by first appearance, which keeps the canonical order.
  Dataset ds;
  ds.name = "iris";
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), 4);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < 4; ++j) ds.features(static_cast<Eigen::Index>(i), j) = Real(rows[i][j]);
  ds.labels = std::move(labels);
  ds.class_count = 1 + *std::max_element(ds.labels.begin(), ds.labels.end());
  return ds;
}

// ---------------------------------------------------------------------------
// Scaling and PCA

MinMaxScaler MinMaxScaler::fit(const Matrix<Real>& features) {
  if (features.rows() == 0) throw ParameterError("cannot fit scaler on empty data");
  MinMaxScaler s;
  const Matrix<double> f = features.cast<double>();
  s.lo = f.colwise().minCoeff().transpose();
  s.hi = f.colwise().maxCoeff().transpose();
  return s;
}

namespace {

Matrix<Real> rescale_unit(const Matrix<double>& x, const Vector<double>& lo,
                          const Vector<double>& hi) {
  Matrix<Real> out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double span = hi(j) - lo(j);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double v = span > 0 ? (x(i, j) - lo(j)) / span : 0.0;
      out(i, j) = static_cast<Real>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

}  // namespace

Matrix<Real> MinMaxScaler::apply(const Matrix<Real>& features) const {
  if (features.cols() != lo.size()) throw DimensionError("scaler width mismatch");
  return rescale_unit(features.cast<double>(), lo, hi);
}

PcaModel pca_fit(const Matrix<Real>& train_features, int k) {
  const Eigen::Index dims = train_features.cols();
  if (k < 1 || k > dims)
    throw ParameterError("PCA rank " + std::to_string(k) + " outside [1, " +
                         std::to_string(dims) + "]");
  if (train_features.rows() < k) throw ParameterError("fewer samples than PCA components");

  PcaModel model;
  const Matrix<double> x = train_features.cast<double>();
  model.mean = x.colwise().mean().transpose();
  const Matrix<double> centered = x.rowwise() - model.mean.transpose();
  const double denom = std::max<Eigen::Index>(x.rows() - 1, 1);
  const Matrix<double> cov = (centered.transpose() * centered) / denom;

  Eigen::SelfAdjointEigenSolver<Matrix<double>> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("PCA eigendecomposition failed");
  // Eigenvalues come back ascending.
  model.components.resize(k, dims);
  model.explained_variance.resize(k);
  for (int i = 0; i < k; ++i) {
    const Eigen::Index src = dims - 1 - i;
    Vector<double> v = eig.eigenvectors().col(src);
    // Deterministic sign: largest-magnitude entry positive.
    Eigen::Index at = 0;
    v.cwiseAbs().maxCoeff(&at);
    if (v(at) < 0) v = -v;
    model.components.row(i) = v.transpose();
    model.explained_variance(i) = std::max(0.0, eig.eigenvalues()(src));
  }
  const Matrix<double> proj = centered * model.components.transpose();
  model.range_lo = proj.colwise().minCoeff().transpose();
  model.range_hi = proj.colwise().maxCoeff().transpose();
  return model;
}

Matrix<double> pca_project(const PcaModel& model, const Matrix<Real>& features) {
  if (features.cols() != model.mean.size()) throw DimensionError("PCA input width mismatch");
  const Matrix<double> centered = features.cast<double>().rowwise() - model.mean.transpose();
  return centered * model.components.transpose();
}

Matrix<Real> pca_apply(const PcaModel& model, const Matrix<Real>& features) {
  return rescale_unit(pca_project(model, features), model.range_lo, model.range_hi);
}

// ---------------------------------------------------------------------------
// Subsetting and splitting

Dataset subset_classes(const Dataset& dataset, const std::vector<int>& classes) {
  std::vector<int> relabel(static_cast<std::size_t>(std::max(dataset.class_count, 1)), -1);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const int c = classes[i];
    if (c < 0 || c >= dataset.class_count)
      throw ParameterError("class " + std::to_string(c) + " not present");
    relabel[static_cast<std::size_t>(c)] = static_cast<int>(i);
  }
  std::vector<int> keep;
  for (std::size_t i = 0; i < dataset.labels.size(); ++i)
    if (relabel[static_cast<std::size_t>(dataset.labels[i])] >= 0) keep.push_back(static_cast<int>(i));
  if (keep.empty()) throw ParameterError("class subset is empty");

  Dataset out;
  out.name = dataset.name;
  out.split = dataset.split;
  out.class_count = static_cast<int>(classes.size());
  out.features.resize(static_cast<Eigen::Index>(keep.size()), dataset.dims());
  out.labels.reserve(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = dataset.features.row(keep[i]);
    out.labels.push_back(relabel[static_cast<std::size_t>(dataset.labels[keep[i]])]);
  }
  return out;
}

namespace {

void fisher_yates(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

Dataset take(const Dataset& ds, const std::vector<int>& idx, Split split) {
  Dataset out;
  out.name = ds.name;
  out.split = split;
  out.class_count = ds.class_count;
  out.features.resize(static_cast<Eigen::Index>(idx.size()), ds.dims());
  out.labels.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(idx[i]);
    out.labels.push_back(ds.labels[static_cast<std::size_t>(idx[i])]);
  }
  return out;
}

std::vector<std::vector<int>> by_class(const Dataset& ds) {
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(ds.class_count));
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    groups[static_cast<std::size_t>(ds.labels[i])].push_back(static_cast<int>(i));
  return groups;
}

}  // namespace

TrainTest stratified_split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ParameterError("train fraction must lie in (0, 1)");
  Rng rng(stream_seed(seed, Stream::split));
  std::vector<int> train_idx, test_idx;
  for (auto& group : by_class(dataset)) {
    fisher_yates(group, rng);
    const auto n_train =
        static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(group.size())));
    train_idx.insert(train_idx.end(), group.begin(), group.begin() + n_train);
    test_idx.insert(test_idx.end(), group.begin() + n_train, group.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {take(dataset, train_idx, Split::train), take(dataset, test_idx, Split::test)};
}

Dataset sample_per_class(const Dataset& dataset, int per_class, std::uint64_t seed) {
  if (per_class < 1) throw ParameterError("per-class sample count must be positive");
  Rng rng(stream_seed(seed, Stream::split, 1));
  std::vector<int> keep;
  for (auto& group : by_class(dataset)) {
    fisher_yates(group, rng);
    const auto n = std::min(group.size(), static_cast<std::size_t>(per_class));
    keep.insert(keep.end(), group.begin(), group.begin() + n);
  }
  std::sort(keep.begin(), keep.end());
  return take(dataset, keep, dataset.split);
}

Matrix<Real> one_hot(const std::vector<int>& labels, int class_count) {
  return one_hot_matrix<Real>(labels, class_count);
}

// ---------------------------------------------------------------------------
// Batching

std::vector<int> epoch_permutation(std::size_t n, std::uint64_t seed, int epoch, bool shuffle) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) {
    Rng rng(stream_seed(seed, Stream::shuffle, static_cast<std::uint64_t>(epoch)));
    fisher_yates(order, rng);
  }
  return order;
}

BatchIterator::BatchIterator(const Dataset& dataset, int batch_size, std::uint64_t seed,
                             int epoch, bool shuffle)
    : dataset_(&dataset),
      batch_size_(batch_size),
      order_(epoch_permutation(static_cast<std::size_t>(dataset.size()), seed, epoch, shuffle)) {
  if (batch_size < 1) throw ParameterError("batch size must be positive");
}

std::size_t BatchIterator::batch_count() const {
  return (order_.size() + static_cast<std::size_t>(batch_size_) - 1) /
         static_cast<std::size_t>(batch_size_);
}

Batch gather(const Dataset& dataset, const std::vector<int>& indices) {
  Batch b;
  b.indices = indices;
  b.features.resize(static_cast<Eigen::Index>(indices.size()), dataset.dims());
  b.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    b.features.row(static_cast<Eigen::Index>(i)) = dataset.features.row(indices[i]);
    b.labels.push_back(dataset.labels[static_cast<std::size_t>(indices[i])]);
  }
  b.targets = one_hot(b.labels, dataset.class_count);
  return b;
}

Batch BatchIterator::batch(std::size_t index) const {
  const std::size_t begin = index * static_cast<std::size_t>(batch_size_);
  if (begin >= order_.size()) throw IndexError("batch index out of range");
  const std::size_t end = std::min(order_.size(), begin + static_cast<std::size_t>(batch_size_));
  return gather(*dataset_, std::vector<int>(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                                            order_.begin() + static_cast<std::ptrdiff_t>(end)));
}

std::uint64_t BatchIterator::schedule_hash() const {
  Fnv1a h;
  h.value<std::int64_t>(batch_size_);
  h.bytes(order_.data(), order_.size() * sizeof(int));
  return h.digest();
}

}  // namespace asyt
