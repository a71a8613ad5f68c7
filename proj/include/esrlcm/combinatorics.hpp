#pragma once

#include <cstddef>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace esrlcm {

using BigInt = boost::multiprecision::cpp_int;

/// Number of partitions of n objects into exactly k nonempty sets.
/// Exact for any n; throws DomainError unless 1 <= k <= n.
BigInt stirling2(std::size_t n, std::size_t k);

/// Number of partitions of n objects (sum of stirling2(n, k) over k).
BigInt bell(std::size_t n);

/// log stirling2(n, k) in double precision.
double log_stirling2(std::size_t n, std::size_t k);

/// log stirling2(n, k) for k = 1..n (index k-1). Memoized per n.
const std::vector<double>& log_stirling2_row(std::size_t n);

}  // namespace esrlcm
