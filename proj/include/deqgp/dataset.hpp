#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "deqgp/errors.hpp"

namespace deqgp {

// Inputs are rows, already projected to the unit sphere (the theory in scope
// is stated on S^{n_in - 1}; note this differs from common MNIST pipelines
// that stop at [0,1] scaling).
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::VectorXi labels;    // classification
  Eigen::MatrixXd targets;   // regression (unused when classification)
  bool classification = true;
  std::string split = "train";

  int size() const { return static_cast<int>(inputs.rows()); }
  int dim() const { return static_cast<int>(inputs.cols()); }

  Dataset head(int count) const {
    Dataset out = *this;
    count = std::min(count, size());
    out.inputs = inputs.topRows(count);
    if (classification) out.labels = labels.head(count);
    else out.targets = targets.topRows(count);
    return out;
  }
};

namespace detail_ds {

inline std::uint32_t read_be_u32(const std::vector<unsigned char>& bytes, std::size_t offset,
                                 const std::string& path) {
  if (offset + 4 > bytes.size())
    throw DataError(path + ": truncated at byte offset " + std::to_string(offset) +
                    " (expected 4-byte big-endian integer)");
  return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

inline void project_rows_to_sphere(Eigen::MatrixXd& X) {
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double norm = X.row(i).norm();
    if (norm <= 0.0)
      throw DataError("row " + std::to_string(i) +
                      " has zero norm; cannot project to the unit sphere");
    X.row(i) /= norm;
  }
}

}  // namespace detail_ds

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// IDX image/label pair (the MNIST container format). Pixels are scaled to
// [0,1], flattened, then every row is projected to the unit sphere.
inline Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = detail_ds::read_file(images_path);
  const std::uint32_t img_magic = detail_ds::read_be_u32(img, 0, images_path);
  if (img_magic != kIdxImagesMagic) {
    std::ostringstream msg;
    msg << images_path << ": bad magic 0x" << std::hex << img_magic
        << " at byte offset 0 (expected 0x00000803)";
    throw DataError(msg.str());
  }
  const std::uint32_t count = detail_ds::read_be_u32(img, 4, images_path);
  const std::uint32_t rows = detail_ds::read_be_u32(img, 8, images_path);
  const std::uint32_t cols = detail_ds::read_be_u32(img, 12, images_path);
  const std::size_t pixels = std::size_t(count) * rows * cols;
  if (img.size() < 16 + pixels)
    throw DataError(images_path + ": truncated pixel data at byte offset " +
                    std::to_string(img.size()) + " (need " + std::to_string(16 + pixels) + ")");

  const auto lab = detail_ds::read_file(labels_path);
  const std::uint32_t lab_magic = detail_ds::read_be_u32(lab, 0, labels_path);
  if (lab_magic != kIdxLabelsMagic) {
    std::ostringstream msg;
    msg << labels_path << ": bad magic 0x" << std::hex << lab_magic
        << " at byte offset 0 (expected 0x00000801)";
    throw DataError(msg.str());
  }
  const std::uint32_t lab_count = detail_ds::read_be_u32(lab, 4, labels_path);
  if (lab.size() < 8 + lab_count)
    throw DataError(labels_path + ": truncated label data at byte offset " +
                    std::to_string(lab.size()));
  if (lab_count != count)
    throw DataError("label count " + std::to_string(lab_count) + " != image count " +
                    std::to_string(count));

  Dataset out;
  out.inputs.resize(count, rows * cols);
  for (std::uint32_t i = 0; i < count; ++i)
    for (std::uint32_t p = 0; p < rows * cols; ++p)
      out.inputs(i, p) = img[16 + std::size_t(i) * rows * cols + p] / 255.0;
  if (count > 0) detail_ds::project_rows_to_sphere(out.inputs);
  out.labels.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) out.labels(i) = lab[8 + i];
  out.classification = true;
  return out;
}

// Numeric CSV with a header row; label_column names the header of the label
// column. Same normalization pipeline as the IDX loader.
inline Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");

  auto split_fields = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = s.find(',', pos);
      out.push_back(s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return out;
  };

  const std::vector<std::string> header = split_fields(line);
  int label_index = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == label_column) label_index = static_cast<int>(i);
  if (label_index < 0)
    throw DataError(path + ": no column named '" + label_column + "' in header");

  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size())
      throw DataError(path + ": row " + std::to_string(lineno) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    std::vector<double> row;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double value;
      try {
        std::size_t used = 0;
        value = std::stod(fields[c], &used);
        if (used != fields[c].size()) throw std::invalid_argument("trailing junk");
      } catch (const std::exception&) {
        throw DataError(path + ": non-numeric cell at row " + std::to_string(lineno) +
                        ", column " + std::to_string(c + 1) + " ('" + fields[c] + "')");
      }
      if (static_cast<int>(c) == label_index) labels.push_back(value);
      else row.push_back(value);
    }
    rows.push_back(std::move(row));
  }

  Dataset out;
  out.inputs.resize(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) out.inputs(i, j) = rows[i][j];
  if (!rows.empty()) detail_ds::project_rows_to_sphere(out.inputs);

  bool integral = true;
  for (double v : labels)
    if (std::abs(v - std::round(v)) > 1e-9 || v < 0) integral = false;
  out.classification = integral;
  if (integral) {
    out.labels.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
      out.labels(i) = static_cast<int>(std::llround(labels[i]));
  } else {
    out.targets.resize(labels.size(), 1);
    for (std::size_t i = 0; i < labels.size(); ++i) out.targets(i, 0) = labels[i];
  }
  return out;
}

}  // namespace deqgp
