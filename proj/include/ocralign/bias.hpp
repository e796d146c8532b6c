#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ocralign/common.hpp"
#include "ocralign/corpus.hpp"

namespace ocralign {

// Soft alignment scores for one sentence pair: rows index source tokens,
// columns target tokens. Entries are non-negative reals, typically attention
// scores dumped by an external neural aligner.
struct ScoreMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major

  static ScoreMatrix zeros(int rows, int cols) {
    if (rows < 1 || cols < 1) throw ConfigError("score matrix dimensions must be >= 1");
    ScoreMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.data.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
    return m;
  }

  double& at(int i, int j) {
    return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                static_cast<std::size_t>(j)];
  }
  double at(int i, int j) const {
    return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                static_cast<std::size_t>(j)];
  }

  double mean() const {
    double sum = 0.0;
    for (double v : data) sum += v;
    return data.empty() ? 0.0 : sum / static_cast<double>(data.size());
  }

  void check_finite_nonneg(const std::string& what) const {
    for (double v : data) {
      if (!std::isfinite(v)) throw DataError(what + ": non-finite entry");
      if (v < 0.0) throw DataError(what + ": negative entry");
    }
  }

  bool operator==(const ScoreMatrix&) const = default;
};

// M_b[i][j] = exp(-tension * |ci - cj|) with cell centers ci = (i+0.5)/n,
// cj = (j+0.5)/m, so square matrices carry exact 1s on the diagonal and
// degenerate 1 x m shapes stay well defined. The distance is computed as
// |i*m - j*n + (m-n)/2| / (n*m); every term is exact in double, which makes
// M_b[i][j] == M_b[n-1-i][m-1-j] hold bit for bit.
inline ScoreMatrix build_bias_matrix(int n, int m, double tension) {
  if (n < 1 || m < 1) throw ConfigError("bias matrix dimensions must be >= 1");
  if (!(tension > 0.0)) throw ConfigError("bias tension must be > 0");
  ScoreMatrix b = ScoreMatrix::zeros(n, m);
  const double denom = static_cast<double>(n) * static_cast<double>(m);
  const double half_gap = 0.5 * static_cast<double>(m - n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double num = static_cast<double>(i) * m - static_cast<double>(j) * n + half_gap;
      b.at(i, j) = std::exp(-tension * (std::abs(num) / denom));
    }
  }
  return b;
}

enum class BiasFormula {
  kProse,    // A' = (1-l)*A + l*(A . Mb)*m_avg   ("1 = maximum bias")
  kPrinted,  // A' = l*A + (1-l)*(A . Mb)*m_avg   (kept for comparison)
};

inline BiasFormula parse_bias_formula(std::string_view s) {
  if (s == "prose") return BiasFormula::kProse;
  if (s == "printed") return BiasFormula::kPrinted;
  throw ConfigError("formula must be prose|printed, got '" + std::string(s) + "'");
}

// Mixes the raw scores with their diagonally re-weighted version. m_avg is
// the scalar mean of all input entries and keeps the biased term on the same
// overall magnitude as the input.
inline ScoreMatrix rescore(const ScoreMatrix& scores, double lambda, double tension,
                           BiasFormula formula = BiasFormula::kProse) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must be in [0, 1]");
  scores.check_finite_nonneg("rescore input");

  const double bias_weight = formula == BiasFormula::kProse ? lambda : 1.0 - lambda;
  if (bias_weight == 0.0) return scores;  // exact passthrough

  const ScoreMatrix bias = build_bias_matrix(scores.rows, scores.cols, tension);
  const double m_avg = scores.mean();
  ScoreMatrix out = scores;
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    out.data[k] = (1.0 - bias_weight) * scores.data[k] +
                  bias_weight * scores.data[k] * bias.data[k] * m_avg;
  }
  return out;
}

// Bidirectional normalized-threshold intersection. Rows of src2tgt become
// per-source distributions over targets; the transposed tgt2src columns
// become per-target distributions over sources. A link needs both of its
// normalized values above the threshold. All-zero rows or columns produce no
// links.
inline AlignmentSet extract_alignment(const ScoreMatrix& src2tgt, const ScoreMatrix& tgt2src,
                                      double threshold) {
  if (tgt2src.rows != src2tgt.cols || tgt2src.cols != src2tgt.rows) {
    throw DataError("matrix dimension mismatch: " + std::to_string(src2tgt.rows) + "x" +
                    std::to_string(src2tgt.cols) + " vs " + std::to_string(tgt2src.rows) + "x" +
                    std::to_string(tgt2src.cols));
  }
  const int n = src2tgt.rows;
  const int m = src2tgt.cols;

  std::vector<double> fwd_row_sum(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) fwd_row_sum[static_cast<std::size_t>(i)] += src2tgt.at(i, j);
  }
  // tgt2src is stored target-major; per-target sums are its row sums.
  std::vector<double> rev_col_sum(static_cast<std::size_t>(m), 0.0);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) rev_col_sum[static_cast<std::size_t>(j)] += tgt2src.at(j, i);
  }

  AlignmentSet out;
  for (int i = 0; i < n; ++i) {
    if (fwd_row_sum[static_cast<std::size_t>(i)] <= 0.0) continue;
    for (int j = 0; j < m; ++j) {
      if (rev_col_sum[static_cast<std::size_t>(j)] <= 0.0) continue;
      const double fwd = src2tgt.at(i, j) / fwd_row_sum[static_cast<std::size_t>(i)];
      const double rev = tgt2src.at(j, i) / rev_col_sum[static_cast<std::size_t>(j)];
      if (fwd > threshold && rev > threshold) out.add(i, j);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Score-matrix files
// ---------------------------------------------------------------------------
//
// Blocks separated by blank lines. Each block:
//
//   n m
//   <n lines of m floats>   source->target scores
//   <m lines of n floats>   target->source scores
//
// This is the drop-off point for any external aligner that can dump its
// attention or score matrices.

struct ScoreMatrixPair {
  ScoreMatrix src2tgt;  // n x m
  ScoreMatrix tgt2src;  // m x n
};

inline std::vector<ScoreMatrixPair> read_score_matrices(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<ScoreMatrixPair> blocks;
  std::size_t ln = 0;
  auto is_blank = [&](const std::string& s) {
    return s.find_first_not_of(" \t\r") == std::string::npos;
  };

  while (true) {
    while (ln < lines.size() && is_blank(lines[ln])) ++ln;
    if (ln >= lines.size()) break;
    const std::size_t block_index = blocks.size();
    auto fail = [&](const std::string& what) -> DataError {
      return DataError(path.string() + ": block " + std::to_string(block_index) + ": " + what);
    };

    int n = 0, m = 0;
    {
      std::istringstream hs(lines[ln]);
      std::string extra;
      if (!(hs >> n >> m) || (hs >> extra) || n < 1 || m < 1) {
        throw fail("bad header '" + lines[ln] + "'");
      }
    }
    ++ln;

    auto read_matrix = [&](int rows, int cols) {
      ScoreMatrix mat = ScoreMatrix::zeros(rows, cols);
      for (int r = 0; r < rows; ++r, ++ln) {
        if (ln >= lines.size() || is_blank(lines[ln])) throw fail("truncated matrix");
        std::istringstream rs(lines[ln]);
        for (int c = 0; c < cols; ++c) {
          if (!(rs >> mat.at(r, c))) throw fail("row " + std::to_string(r) + ": expected " +
                                                std::to_string(cols) + " values");
        }
        std::string extra;
        if (rs >> extra) throw fail("row " + std::to_string(r) + ": trailing data");
      }
      try {
        mat.check_finite_nonneg("matrix");
      } catch (const DataError& e) {
        throw fail(e.what());
      }
      return mat;
    };

    ScoreMatrixPair pair;
    pair.src2tgt = read_matrix(n, m);
    pair.tgt2src = read_matrix(m, n);
    if (ln < lines.size() && !is_blank(lines[ln])) throw fail("expected blank line after block");
    blocks.push_back(std::move(pair));
  }
  return blocks;
}

inline void write_score_matrices(const std::vector<ScoreMatrixPair>& blocks,
                                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  char buf[32];
  auto emit = [&](const ScoreMatrix& m) {
    for (int i = 0; i < m.rows; ++i) {
      for (int j = 0; j < m.cols; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", m.at(i, j));
        out << (j ? " " : "") << buf;
      }
      out << '\n';
    }
  };
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b) out << '\n';
    out << blocks[b].src2tgt.rows << ' ' << blocks[b].src2tgt.cols << '\n';
    emit(blocks[b].src2tgt);
    emit(blocks[b].tgt2src);
  }
  if (!out) throw DataError("write failed: " + path.string());
}

// Full file pipeline: rescore both directions of every block, extract, write
// one Pharaoh line per block.
inline void rescore_corpus(const std::filesystem::path& matrix_path, double lambda,
                           double tension, double threshold,
                           const std::filesystem::path& out_path,
                           BiasFormula formula = BiasFormula::kProse) {
  const auto blocks = read_score_matrices(matrix_path);
  std::vector<AlignmentSet> sets;
  sets.reserve(blocks.size());
  for (const auto& block : blocks) {
    const auto fwd = rescore(block.src2tgt, lambda, tension, formula);
    const auto rev = rescore(block.tgt2src, lambda, tension, formula);
    sets.push_back(extract_alignment(fwd, rev, threshold));
  }
  write_alignments(sets, out_path);
}

}  // namespace ocralign
