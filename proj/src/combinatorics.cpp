#include "facets/combinatorics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "facets/errors.hpp"

namespace facets {

std::size_t RowShape::total() const noexcept { return std::accumulate(rows.begin(), rows.end(), std::size_t{0}); }

std::vector<std::size_t> RowShape::row_of_element() const {
  std::vector<std::size_t> out;
  out.reserve(total());
  for (std::size_t r = 0; r < rows.size(); ++r) out.insert(out.end(), rows[r], r);
  return out;
}

std::vector<std::vector<std::size_t>> RowShape::row_elements() const {
  std::vector<std::vector<std::size_t>> out(rows.size());
  std::size_t e = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < rows[r]; ++i) out[r].push_back(e++);
  }
  return out;
}

std::vector<std::size_t> RowPartition::block_of_element() const {
  std::vector<std::size_t> out(shape.total(), 0);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (auto e : blocks[b]) out[e] = b;
  }
  return out;
}

bool RowPartition::is_valid() const {
  const std::size_t k = shape.total();
  if (std::any_of(shape.rows.begin(), shape.rows.end(), [](auto r) { return r == 0; })) return false;
  std::vector<int> seen(k, 0);
  for (const auto& blk : blocks) {
    if (blk.empty()) return false;
    for (auto e : blk) {
      if (e >= k || seen[e]++) return false;
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int s) { return s != 1; })) return false;
  const auto row_of = shape.row_of_element();
  for (const auto& blk : blocks) {
    std::vector<std::size_t> rs;
    for (auto e : blk) rs.push_back(row_of[e]);
    std::sort(rs.begin(), rs.end());
    if (std::adjacent_find(rs.begin(), rs.end()) != rs.end()) return false;
  }
  return true;
}

namespace detail {

void check_partition_guard(std::size_t k) {
  if (k > kMaxPartitionElements) {
    throw ResourceLimit("partition enumeration over " + std::to_string(k) + " elements exceeds the limit of " +
                        std::to_string(kMaxPartitionElements));
  }
}

RowPartition partition_from_rgs(const RowShape& shape, const std::vector<std::size_t>& rgs, std::size_t blocks) {
  RowPartition p{shape, std::vector<std::vector<std::size_t>>(blocks)};
  for (std::size_t i = 0; i < rgs.size(); ++i) p.blocks[rgs[i]].push_back(i);
  return p;
}

}  // namespace detail

std::vector<RowPartition> enumerate_row_partitions(const RowShape& shape) {
  if (std::any_of(shape.rows.begin(), shape.rows.end(), [](auto r) { return r == 0; })) {
    throw InvalidArgument("row lengths must be positive");
  }
  std::vector<RowPartition> out;
  for_each_row_partition(shape, [&](RowPartition p) { out.push_back(std::move(p)); });
  return out;
}

std::size_t singleton_row_count(const RowPartition& p) {
  const auto block_of = p.block_of_element();
  std::size_t count = 0;
  for (const auto& row : p.shape.row_elements()) {
    if (std::all_of(row.begin(), row.end(), [&](auto e) { return p.blocks[block_of[e]].size() == 1; })) ++count;
  }
  return count;
}

std::vector<std::vector<std::pair<std::size_t, std::size_t>>> enumerate_pairings(std::size_t K) {
  if (K > kMaxPairingRows) {
    throw ResourceLimit("pairing enumeration over " + std::to_string(K) + " rows exceeds the limit of " +
                        std::to_string(kMaxPairingRows));
  }
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out;
  if (K % 2 == 1) return out;

  std::vector<char> taken(K, 0);
  std::vector<std::pair<std::size_t, std::size_t>> current;
  auto recurse = [&](auto&& self) -> void {
    const auto first = std::find(taken.begin(), taken.end(), 0);
    if (first == taken.end()) {
      out.push_back(current);
      return;
    }
    const auto i = static_cast<std::size_t>(first - taken.begin());
    taken[i] = 1;
    for (std::size_t j = i + 1; j < K; ++j) {
      if (taken[j]) continue;
      taken[j] = 1;
      current.emplace_back(i, j);
      self(self);
      current.pop_back();
      taken[j] = 0;
    }
    taken[i] = 0;
  };
  recurse(recurse);
  return out;
}

unsigned long long bell_number(std::size_t n) {
  // Bell triangle.
  std::vector<unsigned long long> row{1};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<unsigned long long> next{row.back()};
    for (auto v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

unsigned long long double_factorial(long long n) {
  unsigned long long r = 1;
  for (long long i = n; i > 1; i -= 2) r *= static_cast<unsigned long long>(i);
  return r;
}

}  // namespace facets
