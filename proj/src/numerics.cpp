#include "wavetile/numerics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace wavetile {

DenseMatrix DenseMatrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  DenseMatrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
  std::size_t i = 0;
  for (const auto& r : rows) {
    if (r.size() != m.cols())
      throw std::invalid_argument("from_rows: ragged row list");
    std::size_t j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

bool DenseMatrix::finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

bool bitwise_equal(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  if (a.size() == 0) return true;
  return std::memcmp(a.values().data(), b.values().data(),
                     a.size() * sizeof(double)) == 0;
}

void ComplexSplitMatrix::validate() const {
  if (re.rows() != im.rows() || re.cols() != im.cols())
    throw std::invalid_argument("ComplexSplitMatrix: part dimensions differ");
}

bool bitwise_equal(const ComplexSplitMatrix& a, const ComplexSplitMatrix& b) {
  return bitwise_equal(a.re, b.re) && bitwise_equal(a.im, b.im);
}

void BlockSparseSym::validate() const {
  if (row_ptr.size() != n + 1)
    throw std::invalid_argument("BlockSparseSym: row_ptr length != n + 1");
  if (row_ptr[0] != 0)
    throw std::invalid_argument("BlockSparseSym: row_ptr[0] != 0");
  for (std::size_t i = 0; i < n; ++i) {
    if (row_ptr[i + 1] < row_ptr[i])
      throw std::invalid_argument("BlockSparseSym: row_ptr not nondecreasing");
    if (row_ptr[i + 1] == row_ptr[i])
      throw std::invalid_argument("BlockSparseSym: row without diagonal entry");
    if (col_idx[row_ptr[i]] != static_cast<std::int64_t>(i))
      throw std::invalid_argument("BlockSparseSym: first entry of a row is not its diagonal");
    for (std::int64_t e = row_ptr[i] + 1; e < row_ptr[i + 1]; ++e)
      if (col_idx[e] <= static_cast<std::int64_t>(i))
        throw std::invalid_argument("BlockSparseSym: off-diagonal entry not in upper triangle");
  }
  if (static_cast<std::size_t>(row_ptr[n]) != col_idx.size())
    throw std::invalid_argument("BlockSparseSym: row_ptr[n] != entry count");
  if (blocks.size() != col_idx.size() * block * block)
    throw std::invalid_argument("BlockSparseSym: block storage size mismatch");
}

std::int64_t floord(std::int64_t n, std::int64_t d) {
  if (d <= 0) throw std::invalid_argument("floord: divisor must be positive");
  std::int64_t q = n / d;
  if (n % d != 0 && n < 0) --q;
  return q;
}

std::int64_t ceild(std::int64_t n, std::int64_t d) {
  if (d <= 0) throw std::invalid_argument("ceild: divisor must be positive");
  return -floord(-n, d);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// One logical input line split into whitespace tokens, with its line number.
struct Line {
  std::vector<std::string> tokens;
  long number = 0;
};

// Returns the next non-blank, non-comment line; empty tokens mean EOF.
Line next_line(std::istream& in, long& line_no) {
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::istringstream ss(raw);
    Line out;
    out.number = line_no;
    std::string tok;
    while (ss >> tok) out.tokens.push_back(tok);
    if (out.tokens.empty()) continue;
    if (out.tokens[0][0] == '%') continue;
    return out;
  }
  return {{}, line_no + 1};
}

double parse_value(const std::string& tok, bool integer_field, long line) {
  if (integer_field) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
      throw ParseError("bad integer value '" + tok + "'", line);
    return static_cast<double>(v);
  }
  double v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError("bad real value '" + tok + "'", line);
  return v;
}

std::size_t parse_index(const std::string& tok, long line) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError("bad index '" + tok + "'", line);
  return static_cast<std::size_t>(v);
}

}  // namespace

DenseMatrix parse_matrix_market(std::istream& in) {
  long line_no = 0;
  std::string header;
  if (!std::getline(in, header)) throw ParseError("empty input", 1);
  ++line_no;

  std::istringstream hs(header);
  std::vector<std::string> h;
  std::string tok;
  while (hs >> tok) h.push_back(lower(tok));
  if (h.size() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix")
    throw ParseError("unknown Matrix Market header", 1);
  const std::string& fmt = h[2];
  const std::string& field = h[3];
  const std::string& sym = h[4];
  if (fmt != "coordinate" && fmt != "array")
    throw ParseError("unsupported format '" + fmt + "'", 1);
  if (field != "real" && field != "integer" && field != "pattern")
    throw ParseError("unsupported field '" + field + "'", 1);
  if (sym != "general" && sym != "symmetric")
    throw ParseError("unsupported symmetry '" + sym + "'", 1);
  const bool coordinate = fmt == "coordinate";
  const bool pattern = field == "pattern";
  const bool integer_field = field == "integer";
  const bool symmetric = sym == "symmetric";
  if (!coordinate && pattern)
    throw ParseError("array format cannot be pattern", 1);

  Line size_line = next_line(in, line_no);
  if (size_line.tokens.empty()) throw ParseError("missing size line", size_line.number);
  const std::size_t want_sizes = coordinate ? 3 : 2;
  if (size_line.tokens.size() != want_sizes)
    throw ParseError("malformed size line", size_line.number);
  const std::size_t rows = parse_index(size_line.tokens[0], size_line.number);
  const std::size_t cols = parse_index(size_line.tokens[1], size_line.number);
  if (rows == 0 || cols == 0)
    throw ParseError("zero matrix dimension", size_line.number);
  if (symmetric && rows != cols)
    throw ParseError("symmetric matrix must be square", size_line.number);

  DenseMatrix m(rows, cols);

  if (coordinate) {
    const std::size_t nnz = parse_index(size_line.tokens[2], size_line.number);
    std::vector<bool> seen(rows * cols, false);
    for (std::size_t e = 0; e < nnz; ++e) {
      Line l = next_line(in, line_no);
      if (l.tokens.empty())
        throw ParseError("truncated body: expected " + std::to_string(nnz) +
                             " entries, got " + std::to_string(e),
                         l.number);
      const std::size_t want = pattern ? 2 : 3;
      if (l.tokens.size() != want)
        throw ParseError("malformed coordinate entry", l.number);
      const std::size_t i = parse_index(l.tokens[0], l.number);
      const std::size_t j = parse_index(l.tokens[1], l.number);
      if (i < 1 || i > rows || j < 1 || j > cols)
        throw ParseError("coordinate (" + l.tokens[0] + ", " + l.tokens[1] +
                             ") out of bounds",
                         l.number);
      const double v = pattern ? 1.0 : parse_value(l.tokens[2], integer_field, l.number);
      const std::size_t r = i - 1, c = j - 1;
      if (seen[r * cols + c])
        throw ParseError("duplicate coordinate entry", l.number);
      seen[r * cols + c] = true;
      m(r, c) = v;
      if (symmetric && r != c) {
        if (seen[c * cols + r])
          throw ParseError("duplicate coordinate entry (mirror)", l.number);
        seen[c * cols + r] = true;
        m(c, r) = v;
      }
    }
    Line extra = next_line(in, line_no);
    if (!extra.tokens.empty())
      throw ParseError("unexpected content after declared entries", extra.number);
  } else {
    // Array bodies are column-major; symmetric stores the lower triangle.
    auto read_value = [&]() -> std::pair<double, long> {
      Line l = next_line(in, line_no);
      if (l.tokens.empty()) throw ParseError("truncated array body", l.number);
      if (l.tokens.size() != 1)
        throw ParseError("expected one value per line in array body", l.number);
      return {parse_value(l.tokens[0], integer_field, l.number), l.number};
    };
    if (!symmetric) {
      for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) m(i, j) = read_value().first;
    } else {
      for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = j; i < rows; ++i) {
          const double v = read_value().first;
          m(i, j) = v;
          m(j, i) = v;
        }
    }
    Line extra = next_line(in, line_no);
    if (!extra.tokens.empty())
      throw ParseError("unexpected content after array body", extra.number);
  }
  return m;
}

void write_matrix_market(const DenseMatrix& m, std::ostream& out) {
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << " " << m.cols() << "\n";
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i)
      out << format_double(m(i, j)) << "\n";
}

DenseMatrix gen_random_dense(std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("gen_random_dense: n must be >= 1");
  DenseMatrix a(n, n);
  for (double& x : a.values()) x = rng.uniform(0.5, 1.5);
  return a;
}

DenseMatrix gen_spd(std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("gen_spd: n must be >= 1");
  DenseMatrix b(n, n);
  for (double& x : b.values()) x = rng.uniform(0.0, 1.0);
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += b(k, i) * b(k, j);
      if (i == j) s += static_cast<double>(n);
      out(i, j) = s;
      out(j, i) = s;
    }
  return out;
}

DenseMatrix gen_zero_pivot(std::size_t n, std::size_t k_plant, Rng& rng) {
  if (n < 2 || k_plant > n - 2)
    throw std::invalid_argument("gen_zero_pivot: k_plant out of range");
  DenseMatrix a = gen_random_dense(n, rng);
  for (std::size_t j = 0; j <= k_plant; ++j) a(k_plant, j) = 0.0;
  bool has_nonzero_below = false;
  for (std::size_t i = k_plant + 1; i < n; ++i)
    if (a(i, k_plant) != 0.0) has_nonzero_below = true;
  if (!has_nonzero_below)
    for (std::size_t i = k_plant + 1; i < n; ++i)
      a(i, k_plant) = rng.uniform(0.5, 1.5);
  return a;
}

ComplexSplitMatrix gen_complex_random(std::size_t m, std::size_t n, Rng& rng,
                                      std::span<const std::size_t> cold_rows) {
  if (m < 2 || n < 1)
    throw std::invalid_argument("gen_complex_random: need m >= 2, n >= 1");
  for (std::size_t r : cold_rows)
    if (r >= m)
      throw std::invalid_argument("gen_complex_random: cold row out of range");
  ComplexSplitMatrix a(m, n);
  for (double& x : a.re.values()) x = rng.uniform(0.5, 1.5);
  for (double& x : a.im.values()) x = rng.uniform(0.5, 1.5);
  for (std::size_t r : cold_rows) {
    a.re(r, 0) = 0.0;
    a.im(r, 0) = 0.0;
  }
  return a;
}

BlockSparseSample gen_block_sparse(std::size_t n, double avg_degree,
                                   std::size_t block, Rng& rng) {
  if (n < 1) throw std::invalid_argument("gen_block_sparse: n must be >= 1");
  if (avg_degree < 0 || !std::isfinite(avg_degree))
    throw std::invalid_argument("gen_block_sparse: avg_degree must be >= 0");
  if (block < 1) throw std::invalid_argument("gen_block_sparse: block must be >= 1");

  const std::uint64_t max_pairs =
      static_cast<std::uint64_t>(n) * (n - 1) / 2;
  std::uint64_t target =
      static_cast<std::uint64_t>(std::llround(static_cast<double>(n) * avg_degree / 2.0));
  target = std::min(target, max_pairs);

  std::unordered_set<std::uint64_t> used;
  std::vector<std::vector<std::int64_t>> adj(n);
  used.reserve(target * 2);
  while (used.size() < target) {
    std::uint64_t i = rng.below(n);
    std::uint64_t j = rng.below(n);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    const std::uint64_t key = i * n + j;
    if (used.insert(key).second) adj[i].push_back(static_cast<std::int64_t>(j));
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());

  BlockSparseSym s;
  s.n = n;
  s.block = block;
  s.row_ptr.resize(n + 1);
  s.row_ptr[0] = 0;
  for (std::size_t i = 0; i < n; ++i) {
    s.col_idx.push_back(static_cast<std::int64_t>(i));
    for (std::int64_t j : adj[i]) s.col_idx.push_back(j);
    s.row_ptr[i + 1] = static_cast<std::int64_t>(s.col_idx.size());
  }
  s.blocks.resize(s.col_idx.size() * block * block);
  for (double& x : s.blocks) x = rng.uniform(-1.0, 1.0);

  DenseMatrix v(n, block);
  for (double& x : v.values()) x = rng.uniform(-1.0, 1.0);
  return {std::move(s), std::move(v)};
}

}  // namespace wavetile
