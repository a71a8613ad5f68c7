#include "esrlcm/combinatorics.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "esrlcm/common.hpp"

namespace esrlcm {

namespace {

// Row n of the Stirling triangle via S(i,k) = k S(i-1,k) + S(i-1,k-1).
std::vector<BigInt> stirling_row(std::size_t n) {
  std::vector<BigInt> row(n + 1, 0);
  row[0] = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t k = i; k >= 1; --k) {
      row[k] = BigInt(k) * row[k] + row[k - 1];
    }
    row[0] = 0;
  }
  return row;
}

}  // namespace

BigInt stirling2(std::size_t n, std::size_t k) {
  if (k < 1 || k > n) throw DomainError("stirling2 requires 1 <= k <= n");
  return stirling_row(n)[k];
}

BigInt bell(std::size_t n) {
  if (n < 1) throw DomainError("bell requires n >= 1");
  BigInt total = 0;
  for (const auto& s : stirling_row(n)) total += s;
  return total;
}

double log_stirling2(std::size_t n, std::size_t k) {
  if (k < 1 || k > n) throw DomainError("stirling2 requires 1 <= k <= n");
  return log_stirling2_row(n)[k - 1];
}

const std::vector<double>& log_stirling2_row(std::size_t n) {
  if (n < 1) throw DomainError("stirling2 requires n >= 1");
  static std::mutex mu;
  static std::map<std::size_t, std::vector<double>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) {
    auto row = stirling_row(n);
    std::vector<double> logs(n);
    for (std::size_t k = 1; k <= n; ++k) logs[k - 1] = std::log(row[k].convert_to<double>());
    it = cache.emplace(n, std::move(logs)).first;
  }
  return it->second;
}

}  // namespace esrlcm
