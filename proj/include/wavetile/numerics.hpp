#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavetile {

/// Row-major dense real matrix, 0-based indexing.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static DenseMatrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows);

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  /// True when every stored value is finite. Kernels may legitimately
  /// produce non-finite values (documented per kernel); this query is how
  /// callers find out.
  bool finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Bit-pattern equality, including distinguishing -0.0 from 0.0 and
/// comparing NaNs by representation.
bool bitwise_equal(const DenseMatrix& a, const DenseMatrix& b);

/// Complex matrix stored as separate real and imaginary parts.
struct ComplexSplitMatrix {
  DenseMatrix re;
  DenseMatrix im;

  ComplexSplitMatrix() = default;
  ComplexSplitMatrix(std::size_t rows, std::size_t cols)
      : re(rows, cols), im(rows, cols) {}

  std::size_t rows() const { return re.rows(); }
  std::size_t cols() const { return re.cols(); }

  void validate() const;
};

bool bitwise_equal(const ComplexSplitMatrix& a, const ComplexSplitMatrix& b);

/// Symmetric block-sparse matrix in row-pointer / column-index form.
/// Only the upper triangle is stored: the first entry of every row is its
/// diagonal block, all further entries have column index strictly greater
/// than the row. Each entry owns a dense block x block value tile.
struct BlockSparseSym {
  std::size_t n = 0;
  std::size_t block = 3;
  std::vector<std::int64_t> row_ptr;  // length n + 1, nondecreasing
  std::vector<std::int64_t> col_idx;  // one per entry
  std::vector<double> blocks;         // entries * block * block, row-major

  std::size_t entries() const { return col_idx.size(); }

  std::span<double> block_at(std::size_t e) {
    return {blocks.data() + e * block * block, block * block};
  }
  std::span<const double> block_at(std::size_t e) const {
    return {blocks.data() + e * block * block, block * block};
  }

  /// Throws std::invalid_argument when a structural invariant is broken.
  void validate() const;
};

/// Deterministic 64-bit generator (splitmix64): the state advances by the
/// odd constant 0x9E3779B97F4A7C15 and each output is finalized with the
/// xor-shift-multiply constants 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB.
/// Identical seeds give identical sequences on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53 significant bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Uniform in [0, n). Modulo reduction; fine for structure generation.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

/// Floor of n/d (Euclidean division, rounds toward minus infinity).
/// d must be positive.
std::int64_t floord(std::int64_t n, std::int64_t d);

/// Ceiling of n/d, equal to -floord(-n, d). d must be positive.
std::int64_t ceild(std::int64_t n, std::int64_t d);

/// Parse failure carrying the 1-based line number of the offending input.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, long line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Reads a Matrix Market stream into a dense matrix.
/// Supported headers: coordinate|array x real|integer|pattern x
/// general|symmetric. Coordinate entries are 1-based and scattered into a
/// zero matrix; symmetric entries are mirrored; pattern entries store 1.0.
/// Duplicate coordinate entries, out-of-range indices, unknown headers and
/// truncated bodies raise ParseError with the line number.
DenseMatrix parse_matrix_market(std::istream& in);

/// Writes `m` in array/general form with shortest round-trip formatting,
/// so parse_matrix_market reads the exact same values back.
void write_matrix_market(const DenseMatrix& m, std::ostream& out);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// n x n matrix with entries uniform in [0.5, 1.5). Bounded away from zero
/// so forward elimination never needs a row permutation.
DenseMatrix gen_random_dense(std::size_t n, Rng& rng);

/// Symmetric positive definite matrix B^T B + n I for random B in [0,1).
/// The two mirrored triangles are bit-identical by construction.
DenseMatrix gen_spd(std::size_t n, Rng& rng);

/// Matrix whose elimination pivot at step k_plant is exactly 0.0 while all
/// earlier pivots are nonzero: row k_plant is zeroed through column k_plant,
/// so every earlier update leaves it untouched (xfac is exactly 0), and
/// column k_plant keeps a nonzero strictly below the diagonal.
DenseMatrix gen_zero_pivot(std::size_t n, std::size_t k_plant, Rng& rng);

/// m x n split-complex matrix with both parts uniform in [0.5, 1.5).
/// For each row r in cold_rows the leading entry is forced to 0 + 0i so a
/// rarely-taken branch of the rotation kernel fires at least once.
ComplexSplitMatrix gen_complex_random(std::size_t m, std::size_t n, Rng& rng,
                                      std::span<const std::size_t> cold_rows = {});

struct BlockSparseSample {
  BlockSparseSym matrix;
  DenseMatrix v;  // n x block
};

/// Random symmetric block-sparse structure: diagonal entry first per row,
/// then sorted upper-triangle neighbors without duplicates. Block values
/// and v are uniform in [-1, 1). The number of off-diagonal entries is
/// round(n * avg_degree / 2), clamped to the number of available pairs.
BlockSparseSample gen_block_sparse(std::size_t n, double avg_degree,
                                   std::size_t block, Rng& rng);

}  // namespace wavetile
