#pragma once

#include <cstddef>
#include <vector>

namespace facets {

/// Row lengths (k_1, ..., k_m); row i owns the consecutive elements
/// k_1+...+k_{i-1} .. k_1+...+k_i - 1 of [k] (0-based).
struct RowShape {
  std::vector<std::size_t> rows;

  std::size_t total() const noexcept;
  /// Row index of each element.
  std::vector<std::size_t> row_of_element() const;
  /// Elements of each row.
  std::vector<std::vector<std::size_t>> row_elements() const;
};

/// A set partition of [k] meeting every row in at most one element per block.
struct RowPartition {
  RowShape shape;
  std::vector<std::vector<std::size_t>> blocks;  // sorted, ordered by smallest element

  std::size_t size() const noexcept { return blocks.size(); }
  /// Block index of each element.
  std::vector<std::size_t> block_of_element() const;
  /// True when blocks cover [k] disjointly and respect the row constraint.
  bool is_valid() const;
};

inline constexpr std::size_t kMaxPartitionElements = 14;
inline constexpr std::size_t kMaxPairingRows = 12;

/// Every row-constrained partition of [k] exactly once, in restricted-growth-string order.
/// Throws ResourceLimit when k exceeds kMaxPartitionElements.
std::vector<RowPartition> enumerate_row_partitions(const RowShape& shape);

/// Calls `visit` for each partition without materialising the list.
template <typename Visitor>
void for_each_row_partition(const RowShape& shape, Visitor&& visit);

/// Number of rows all of whose elements sit in singleton blocks.
std::size_t singleton_row_count(const RowPartition& p);

/// Perfect matchings of [K]; each as K/2 pairs (i < j) sorted by first element.
/// Odd K yields an empty list. Throws ResourceLimit when K > kMaxPairingRows.
std::vector<std::vector<std::pair<std::size_t, std::size_t>>> enumerate_pairings(std::size_t K);

/// Bell numbers and double factorials, exact.
unsigned long long bell_number(std::size_t n);
unsigned long long double_factorial(long long n);

namespace detail {
void check_partition_guard(std::size_t k);
RowPartition partition_from_rgs(const RowShape& shape, const std::vector<std::size_t>& rgs, std::size_t blocks);
}  // namespace detail

template <typename Visitor>
void for_each_row_partition(const RowShape& shape, Visitor&& visit) {
  const std::size_t k = shape.total();
  detail::check_partition_guard(k);
  const auto row_of = shape.row_of_element();

  // rgs[i] = block of element i; block b may not already hold an element of row_of[i].
  std::vector<std::size_t> rgs(k, 0);
  // used[b * rows + r] marks block b as containing an element of row r.
  const std::size_t rows = shape.rows.size();
  std::vector<char> used(k * rows, 0);

  auto recurse = [&](auto&& self, std::size_t i, std::size_t n_blocks) -> void {
    if (i == k) {
      visit(detail::partition_from_rgs(shape, rgs, n_blocks));
      return;
    }
    const std::size_t r = row_of[i];
    for (std::size_t b = 0; b <= n_blocks && b < k; ++b) {
      if (used[b * rows + r]) continue;
      used[b * rows + r] = 1;
      rgs[i] = b;
      self(self, i + 1, b == n_blocks ? n_blocks + 1 : n_blocks);
      used[b * rows + r] = 0;
    }
  };
  if (k == 0) return;
  recurse(recurse, 0, 0);
}

}  // namespace facets
