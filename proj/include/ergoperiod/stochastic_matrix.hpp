#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace ergoperiod::markov {

/// One-step kernel P(1, x, .) of a finite Markov semigroup; P_t = P^t.
/// Rows are validated to sum to 1 within 1e-12 with entries in [0, 1].
class StochasticMatrix {
 public:
  StochasticMatrix() = default;
  StochasticMatrix(std::size_t n, std::vector<double> row_major);

  static StochasticMatrix from_rows(const std::vector<std::vector<double>>& rows);
  /// n lines of n comma-separated reals.
  static StochasticMatrix from_csv(const std::filesystem::path& path);
  static StochasticMatrix identity(std::size_t n);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {entries_.data() + i * n_, n_}; }
  const std::vector<double>& entries() const { return entries_; }

  StochasticMatrix power(int k) const;
  StochasticMatrix operator*(const StochasticMatrix& other) const;

  /// rho P (pushforward of a row vector).
  std::vector<double> push(std::span<const double> rho) const;
  /// P phi (action on functions).
  std::vector<double> apply(std::span<const double> phi) const;

  std::vector<std::vector<double>> rows() const;

  bool operator==(const StochasticMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> entries_;
};

}  // namespace ergoperiod::markov
