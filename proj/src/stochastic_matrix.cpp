#include "ergoperiod/stochastic_matrix.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ergoperiod/error.hpp"

namespace ergoperiod::markov {

StochasticMatrix::StochasticMatrix(std::size_t n, std::vector<double> row_major)
    : n_(n), entries_(std::move(row_major)) {
  require(n_ > 0, "stochastic matrix must be non-empty");
  require(entries_.size() == n_ * n_, "stochastic matrix needs n*n entries");
  for (std::size_t i = 0; i < n_; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = entries_[i * n_ + j];
      require(std::isfinite(v) && v >= 0.0 && v <= 1.0,
              "stochastic matrix entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                  ") outside [0,1]");
      total += v;
    }
    require(std::abs(total - 1.0) <= 1e-12,
            "row " + std::to_string(i + 1) + " of the stochastic matrix does not sum to 1");
  }
}

StochasticMatrix StochasticMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  std::vector<double> flat;
  flat.reserve(n * n);
  for (const auto& r : rows) {
    require(r.size() == n, "stochastic matrix must be square");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return StochasticMatrix(n, std::move(flat));
}

StochasticMatrix StochasticMatrix::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open matrix file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        require(field.find_first_not_of(" \t", used) == std::string::npos,
                "trailing characters in matrix entry '" + field + "'");
      } catch (const std::logic_error&) {
        fail(ErrorCode::InvalidArgument, "bad matrix entry '" + field + "' in " + path.string());
      }
    }
    rows.push_back(std::move(row));
  }
  return from_rows(rows);
}

StochasticMatrix StochasticMatrix::identity(std::size_t n) {
  std::vector<double> flat(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) flat[i * n + i] = 1.0;
  return StochasticMatrix(n, std::move(flat));
}

StochasticMatrix StochasticMatrix::operator*(const StochasticMatrix& other) const {
  require(n_ == other.n_, "matrix size mismatch");
  std::vector<double> out(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = 0; k < n_; ++k) {
      const double a = entries_[i * n_ + k];
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < n_; ++j) out[i * n_ + j] += a * other.entries_[k * n_ + j];
    }
  // Products drift off exact row sums by rounding; renormalise so the result
  // still satisfies the 1e-12 row-sum invariant.
  for (std::size_t i = 0; i < n_; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n_; ++j) total += out[i * n_ + j];
    for (std::size_t j = 0; j < n_; ++j) out[i * n_ + j] = std::min(1.0, out[i * n_ + j] / total);
  }
  return StochasticMatrix(n_, std::move(out));
}

StochasticMatrix StochasticMatrix::power(int k) const {
  require(k >= 0, "matrix power needs k >= 0");
  StochasticMatrix result = identity(n_);
  StochasticMatrix base = *this;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

std::vector<double> StochasticMatrix::push(std::span<const double> rho) const {
  require(rho.size() == n_, "measure length does not match the state space");
  std::vector<double> out(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    if (rho[i] == 0.0) continue;
    for (std::size_t j = 0; j < n_; ++j) out[j] += rho[i] * entries_[i * n_ + j];
  }
  return out;
}

std::vector<double> StochasticMatrix::apply(std::span<const double> phi) const {
  require(phi.size() == n_, "function length does not match the state space");
  std::vector<double> out(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n_; ++j) acc += entries_[i * n_ + j] * phi[j];
    out[i] = acc;
  }
  return out;
}

std::vector<std::vector<double>> StochasticMatrix::rows() const {
  std::vector<std::vector<double>> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i].assign(row(i).begin(), row(i).end());
  return out;
}

}  // namespace ergoperiod::markov
