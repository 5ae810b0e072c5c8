#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "conicsvm/core.hpp"

namespace conicsvm {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

// CSV layout: header row, one numeric column per feature, and a label
// column named "y" holding +-1. The intercept column is never stored on
// disk; pass embed_intercept to prepend the all-ones column on read.
inline LabeledDataset read_csv(const std::string& path, bool embed_intercept) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty dataset file: " + path);
  const auto header = detail::split_csv_line(line);
  int label_col = -1;
  for (size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "y") {
      if (label_col >= 0) throw std::invalid_argument("duplicate label column 'y'");
      label_col = static_cast<int>(j);
    }
  }
  if (label_col < 0) throw std::invalid_argument("dataset file lacks a label column named 'y'");
  const size_t ncols = header.size();
  if (ncols < 2) throw std::invalid_argument("dataset file needs at least one feature column");

  std::vector<double> values;
  std::vector<double> labels;
  size_t nrows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != ncols)
      throw std::invalid_argument("row " + std::to_string(nrows + 2) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(ncols));
    for (size_t j = 0; j < ncols; ++j) {
      size_t pos = 0;
      double v;
      try {
        v = std::stod(cells[j], &pos);
      } catch (const std::exception&) {
        throw std::invalid_argument("non-numeric cell '" + cells[j] + "' in row " +
                                    std::to_string(nrows + 2));
      }
      if (pos != cells[j].size())
        throw std::invalid_argument("trailing characters in cell '" + cells[j] + "'");
      if (static_cast<int>(j) == label_col)
        labels.push_back(v);
      else
        values.push_back(v);
    }
    ++nrows;
  }
  if (nrows == 0) throw std::invalid_argument("dataset file has no data rows");

  const size_t p_raw = ncols - 1;
  const size_t p = p_raw + (embed_intercept ? 1 : 0);
  Matrix X(nrows, p);
  Vector y(nrows);
  for (size_t i = 0; i < nrows; ++i) {
    size_t col = 0;
    if (embed_intercept) X(i, col++) = 1.0;
    for (size_t j = 0; j < p_raw; ++j) X(i, col++) = values[i * p_raw + j];
    y(i) = labels[i];
  }
  return LabeledDataset(std::move(X), std::move(y), embed_intercept);
}

inline void write_csv(const std::string& path, const LabeledDataset& data) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  out.precision(17);

  const Eigen::Index first_col = data.intercept_embedded() ? 1 : 0;
  for (Eigen::Index j = first_col; j < data.p(); ++j)
    out << "x" << (j - first_col + 1) << ",";
  out << "y\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = first_col; j < data.p(); ++j) out << data.features()(i, j) << ",";
    out << static_cast<int>(data.label(i)) << "\n";
  }
}

}  // namespace conicsvm
