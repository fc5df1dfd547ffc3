#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "dagar/errors.hpp"
#include "dagar/graph.hpp"
#include "dagar/inference.hpp"
#include "dagar/sparse.hpp"

namespace dagar {

// Floating point values are written with 17 significant digits everywhere,
// enough to round-trip doubles exactly.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open '" + path + "' for writing");
  return out;
}

inline bool blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

// Edge-list file: first line `k e`, then e lines `i j` with 1-based vertex
// indices; lines starting with '#' are ignored.
inline Graph read_edge_list(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  long line_no = 0;
  long k = -1, e = -1;
  std::vector<std::pair<int, int>> edges;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank_or_comment(line)) continue;
    std::istringstream ss(line);
    if (k < 0) {
      if (!(ss >> k >> e) || k < 1 || e < 0)
        throw validation_error(path + ":" + std::to_string(line_no) +
                               ": expected header 'k e'");
      edges.reserve(e);
      continue;
    }
    long a, b;
    if (!(ss >> a >> b))
      throw validation_error(path + ":" + std::to_string(line_no) + ": expected 'i j'");
    if (a < 1 || a > k || b < 1 || b > k)
      throw validation_error(path + ":" + std::to_string(line_no) + ": vertex index out of 1.." +
                             std::to_string(k));
    if (a == b)
      throw validation_error(path + ":" + std::to_string(line_no) + ": self-loop at vertex " +
                             std::to_string(a));
    edges.emplace_back(static_cast<int>(a - 1), static_cast<int>(b - 1));
  }
  if (k < 0) throw validation_error(path + ": empty edge-list file");
  if (static_cast<long>(edges.size()) != e)
    throw validation_error(path + ": header declares " + std::to_string(e) + " edges, found " +
                           std::to_string(edges.size()));
  return from_edge_list(static_cast<int>(k), edges);
}

inline void write_edge_list(const std::string& path, const Graph& g) {
  auto out = detail::open_output(path);
  out << g.k() << ' ' << g.e() << '\n';
  for (int i = 0; i < g.k(); ++i)
    for (int j : g.neighbors(i))
      if (j > i) out << (i + 1) << ' ' << (j + 1) << '\n';
}

// Embedding file: k lines `i x y`, 1-based indices, any order, '#' comments.
inline Embedding read_embedding(const std::string& path, int k) {
  auto in = detail::open_input(path);
  Embedding emb;
  emb.coords.assign(k, {0.0, 0.0});
  std::vector<char> seen(k, 0);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank_or_comment(line)) continue;
    std::istringstream ss(line);
    long i;
    double x, y;
    if (!(ss >> i >> x >> y))
      throw validation_error(path + ":" + std::to_string(line_no) + ": expected 'i x y'");
    if (i < 1 || i > k)
      throw validation_error(path + ":" + std::to_string(line_no) + ": vertex index out of 1.." +
                             std::to_string(k));
    if (seen[i - 1])
      throw validation_error(path + ":" + std::to_string(line_no) + ": duplicate vertex " +
                             std::to_string(i));
    seen[i - 1] = 1;
    emb.coords[i - 1] = {x, y};
  }
  for (int i = 0; i < k; ++i)
    if (!seen[i])
      throw validation_error(path + ": no coordinates for vertex " + std::to_string(i + 1));
  return emb;
}

inline void write_embedding(const std::string& path, const Embedding& emb) {
  auto out = detail::open_output(path);
  for (int i = 0; i < emb.k(); ++i)
    out << (i + 1) << ' ' << fmt17(emb.coords[i][0]) << ' ' << fmt17(emb.coords[i][1]) << '\n';
}

// Resolution order for the bundled assets: explicit argument, then the
// DAGAR_DATA_DIR environment variable, then the compile-time default.
inline std::string resolve_data_dir(const std::string& explicit_dir = "") {
  if (!explicit_dir.empty()) return explicit_dir;
  if (const char* env = std::getenv("DAGAR_DATA_DIR"); env && *env) return env;
#ifdef DAGAR_DATA_DIR
  return DAGAR_DATA_DIR;
#else
  return "data";
#endif
}

struct UsGraph {
  Graph graph;
  Embedding embedding;
  std::vector<std::string> codes;  // postal code of each vertex
};

inline UsGraph load_us48(const std::string& data_dir = "") {
  const std::string dir = resolve_data_dir(data_dir);
  UsGraph us;
  us.graph = read_edge_list(dir + "/us48_edges.txt");
  us.embedding = read_embedding(dir + "/us48_coords.txt", us.graph.k());
  auto in = detail::open_input(dir + "/us48_codes.txt");
  us.codes.assign(us.graph.k(), "");
  std::string line;
  while (std::getline(in, line)) {
    if (detail::blank_or_comment(line)) continue;
    std::istringstream ss(line);
    std::string code;
    int i;
    if ((ss >> code >> i) && i >= 1 && i <= us.graph.k()) us.codes[i - 1] = code;
  }
  return us;
}

// Sparse triplet format: header `k nnz`, then one `i j value` line per
// stored entry (upper triangle plus diagonal, 1-based).
inline void write_triplets(const std::string& path, const SparseSymmetric& q) {
  auto out = detail::open_output(path);
  out << q.dim() << ' ' << q.nnz_stored() << '\n';
  for (int i = 0; i < q.dim(); ++i) {
    const auto row = q.upper_row(i);
    const double* v = row.val_begin;
    for (const int* j = row.col_begin; j != row.col_end; ++j, ++v)
      out << (i + 1) << ' ' << (*j + 1) << ' ' << fmt17(*v) << '\n';
  }
}

inline SparseSymmetric read_triplets(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  long line_no = 0;
  long k = -1, nnz = -1;
  std::vector<std::tuple<int, int, double>> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank_or_comment(line)) continue;
    std::istringstream ss(line);
    if (k < 0) {
      if (!(ss >> k >> nnz) || k < 1 || nnz < 0)
        throw validation_error(path + ":" + std::to_string(line_no) + ": expected header 'k nnz'");
      entries.reserve(nnz);
      continue;
    }
    long i, j;
    double v;
    if (!(ss >> i >> j >> v))
      throw validation_error(path + ":" + std::to_string(line_no) + ": expected 'i j value'");
    if (i < 1 || i > k || j < 1 || j > k)
      throw validation_error(path + ":" + std::to_string(line_no) + ": index out of range");
    entries.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
  }
  if (k < 0) throw validation_error(path + ": empty triplet file");
  if (static_cast<long>(entries.size()) != nnz)
    throw validation_error(path + ": header declares " + std::to_string(nnz) +
                           " entries, found " + std::to_string(entries.size()));
  return SparseSymmetric(static_cast<int>(k), std::move(entries));
}

// Region-indexed dataset CSVs. Gaussian: region,y,x1..xp. Poisson:
// region,observed,expected,x1..xp. Regions are 1-based and must cover 1..k
// exactly once.
struct Dataset {
  Eigen::VectorXd response;  // y or observed counts
  Eigen::VectorXd expected;  // Poisson only, else empty
  Eigen::MatrixXd X;
  std::vector<std::string> covariate_names;
  bool poisson = false;
};

inline Dataset read_dataset_csv(const std::string& path, int k, Link link) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw validation_error(path + ": empty dataset");
  const auto header = detail::split_csv(line);
  std::size_t col = 0;
  auto expect = [&](const std::string& name) {
    if (col >= header.size() || header[col] != name)
      throw validation_error(path + ": expected column '" + name + "' at position " +
                             std::to_string(col + 1) + (col < header.size()
                                                            ? ", found '" + header[col] + "'"
                                                            : ", found end of header"));
    ++col;
  };
  Dataset ds;
  ds.poisson = link == Link::log;
  expect("region");
  if (ds.poisson) {
    expect("observed");
    expect("expected");
  } else {
    expect("y");
  }
  for (; col < header.size(); ++col) {
    if (header[col].empty())
      throw validation_error(path + ": empty covariate name in header");
    ds.covariate_names.push_back(header[col]);
  }
  const int p = static_cast<int>(ds.covariate_names.size());
  ds.response.resize(k);
  ds.expected.resize(ds.poisson ? k : 0);
  ds.X.resize(k, p);
  std::vector<char> seen(k, 0);
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank_or_comment(line)) continue;
    const auto cells = detail::split_csv(line);
    const std::size_t want = 1 + (ds.poisson ? 2 : 1) + p;
    if (cells.size() != want)
      throw validation_error(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(want) + " cells, found " +
                             std::to_string(cells.size()));
    std::size_t c = 0;
    auto num = [&]() {
      double v;
      try {
        v = std::stod(cells.at(c++));
      } catch (...) {
        throw validation_error(path + ":" + std::to_string(line_no) + ": bad number '" +
                               cells[c - 1] + "'");
      }
      if (!std::isfinite(v))
        throw validation_error(path + ":" + std::to_string(line_no) +
                               ": non-finite value '" + cells[c - 1] + "'");
      return v;
    };
    const long region = static_cast<long>(num());
    if (region < 1 || region > k)
      throw validation_error(path + ":" + std::to_string(line_no) + ": region out of 1.." +
                             std::to_string(k));
    if (seen[region - 1])
      throw validation_error(path + ":" + std::to_string(line_no) + ": duplicate region " +
                             std::to_string(region));
    seen[region - 1] = 1;
    const int i = static_cast<int>(region - 1);
    ds.response[i] = num();
    if (ds.poisson) {
      ds.expected[i] = num();
      if (!(ds.expected[i] > 0))
        throw validation_error(path + ":" + std::to_string(line_no) +
                               ": expected count must be positive");
    }
    for (int j = 0; j < p; ++j) ds.X(i, j) = num();
  }
  for (int i = 0; i < k; ++i)
    if (!seen[i]) throw validation_error(path + ": no row for region " + std::to_string(i + 1));
  return ds;
}

// Chain traces: one row per retained draw, one column per scalar parameter.
inline void write_trace_csv(const std::string& path, const ChainOutput& chain) {
  auto out = detail::open_output(path);
  for (std::size_t j = 0; j < chain.scalar_names.size(); ++j)
    out << (j ? "," : "") << chain.scalar_names[j];
  out << '\n';
  for (long m = 0; m < chain.n_draws(); ++m) {
    for (int j = 0; j < chain.scalars.cols(); ++j)
      out << (j ? "," : "") << fmt17(chain.scalars(m, j));
    out << '\n';
  }
}

// Latent field draws in wide layout: w_1..w_k.
inline void write_w_csv(const std::string& path, const ChainOutput& chain) {
  auto out = detail::open_output(path);
  for (int v = 0; v < chain.w.cols(); ++v) out << (v ? "," : "") << "w_" << (v + 1);
  out << '\n';
  for (long m = 0; m < chain.w.rows(); ++m) {
    for (int v = 0; v < chain.w.cols(); ++v) out << (v ? "," : "") << fmt17(chain.w(m, v));
    out << '\n';
  }
}

}  // namespace dagar
