#pragma once

// Trace CSV export/import.  One row per draw: chain, draw index, divergent
// flag, then the unconstrained coordinates in layout order.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsm/bnn.hpp"
#include "dsm/nuts.hpp"

namespace dsm::trace_io {

inline void write_trace_csv(const std::string& path, const Trace& trace,
                            const std::vector<std::string>& coord_names,
                            const std::string& header_comment = "") {
  if (static_cast<int>(coord_names.size()) != trace.dim)
    throw std::invalid_argument("write_trace_csv: name count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot write " + path);
  out.precision(17);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "chain,draw,divergent";
  for (const auto& n : coord_names) out << "," << n;
  out << "\n";
  for (int c = 0; c < trace.n_chains(); ++c)
    for (int i = 0; i < trace.n_draws(); ++i) {
      out << c << "," << i << "," << static_cast<int>(trace.divergent[c][i]);
      for (int j = 0; j < trace.dim; ++j) out << "," << trace.draws[c](i, j);
      out << "\n";
    }
}

inline Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_trace_csv: cannot open " + path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    lines.push_back(line);
  }
  if (lines.size() < 2) throw std::runtime_error("read_trace_csv: no rows in " + path);

  std::vector<std::string> header;
  {
    std::stringstream ss(lines[0]);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 4 || header[0] != "chain" || header[1] != "draw" ||
      header[2] != "divergent")
    throw std::runtime_error("read_trace_csv: unexpected header");
  const int dim = static_cast<int>(header.size()) - 3;

  struct Row {
    int chain, draw, div;
    Eigen::VectorXd x;
  };
  std::vector<Row> rows;
  int max_chain = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::stringstream ss(lines[i]);
    std::string cell;
    Row r;
    r.x.resize(dim);
    std::getline(ss, cell, ',');
    r.chain = std::stoi(cell);
    std::getline(ss, cell, ',');
    r.draw = std::stoi(cell);
    std::getline(ss, cell, ',');
    r.div = std::stoi(cell);
    for (int j = 0; j < dim; ++j) {
      std::getline(ss, cell, ',');
      r.x[j] = std::stod(cell);
    }
    max_chain = std::max(max_chain, r.chain);
    rows.push_back(std::move(r));
  }
  const int n_chains = max_chain + 1;
  std::vector<int> counts(n_chains, 0);
  for (const auto& r : rows) counts[r.chain]++;
  Trace t;
  t.dim = dim;
  t.draws.resize(n_chains);
  t.divergent.resize(n_chains);
  for (int c = 0; c < n_chains; ++c) {
    t.draws[c].resize(counts[c], dim);
    t.divergent[c].assign(counts[c], 0);
  }
  for (const auto& r : rows) {
    t.draws[r.chain].row(r.draw) = r.x.transpose();
    t.divergent[r.chain][r.draw] = static_cast<std::uint8_t>(r.div);
  }
  return t;
}

}  // namespace dsm::trace_io
