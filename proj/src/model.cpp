#include "mmcplace/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace mmcplace {

int ServiceInstance::lifetime_end() const {
  if (!max_lifetime) return kUnboundedSlot;
  const long long end = static_cast<long long>(arrival_slot) + *max_lifetime - 1;
  return end > kUnboundedSlot ? kUnboundedSlot : static_cast<int>(end);
}

int ServiceInstance::last_slot() const {
  int end = lifetime_end();
  if (departure_slot) end = std::min(end, *departure_slot);
  return end;
}

SlotSpan active_span(const ServiceInstance& instance, const Window& window) {
  return {std::max(instance.arrival_slot, window.t0), std::min(instance.last_slot(), window.last())};
}

ConfigurationMatrix::ConfigurationMatrix(int t0, int slots, int columns)
    : t0_(t0), slots_(slots), columns_(columns) {
  if (slots < 0 || columns < 0) throw std::invalid_argument("negative matrix dimension");
  cells_.assign(static_cast<std::size_t>(slots) * static_cast<std::size_t>(columns), kNotRunning);
}

std::span<const CloudId> ConfigurationMatrix::row(int q) const {
  return {cells_.data() + static_cast<std::size_t>(q) * static_cast<std::size_t>(columns_),
          static_cast<std::size_t>(columns_)};
}

ConfigurationSequence ConfigurationMatrix::column(int column) const {
  ConfigurationSequence seq(static_cast<std::size_t>(slots_));
  for (int q = 0; q < slots_; ++q) seq[q] = (*this)(q, column);
  return seq;
}

void ConfigurationMatrix::set_column(int column, std::span<const CloudId> sequence) {
  if (static_cast<int>(sequence.size()) != slots_)
    throw std::invalid_argument("column length does not match window");
  for (int q = 0; q < slots_; ++q) (*this)(q, column) = sequence[q];
}

int ConfigurationMatrix::add_column() {
  std::vector<CloudId> grown(static_cast<std::size_t>(slots_) * (columns_ + 1), kNotRunning);
  for (int q = 0; q < slots_; ++q)
    std::copy_n(cells_.begin() + static_cast<std::ptrdiff_t>(q) * columns_, columns_,
                grown.begin() + static_cast<std::ptrdiff_t>(q) * (columns_ + 1));
  cells_ = std::move(grown);
  return columns_++;
}

std::optional<ConfigurationViolation> validate_configuration(
    const ConfigurationMatrix& matrix, std::span<const ServiceInstance> instances,
    int num_clouds) {
  if (static_cast<int>(instances.size()) != matrix.columns())
    return ConfigurationViolation{matrix.t0(), 0, "column count does not match instance count"};
  for (int i = 0; i < matrix.columns(); ++i) {
    const ServiceInstance& inst = instances[i];
    int block_end = -1;  // slot index just after the last nonzero run seen
    bool block_closed = false;
    for (int q = 0; q < matrix.slots(); ++q) {
      const int t = matrix.t0() + q;
      const CloudId c = matrix(q, i);
      if (c < 0 || c > num_clouds)
        return ConfigurationViolation{t, i, "cloud index out of range"};
      if (c == kNotRunning) {
        if (block_end >= 0) block_closed = true;
        continue;
      }
      if (!inst.running_at(t))
        return ConfigurationViolation{t, i, "placed outside the active span"};
      if (block_closed)
        return ConfigurationViolation{t, i, "nonzero entries are not contiguous"};
      block_end = q + 1;
    }
  }
  return std::nullopt;
}

std::vector<ConfigurationSequence> feasible_sequences(const ServiceInstance& instance,
                                                      const Window& window, int num_clouds) {
  if (num_clouds < 1) throw std::invalid_argument("need at least one cloud");
  const SlotSpan span = active_span(instance, window);
  const int n = span.length();
  std::vector<ConfigurationSequence> out;
  ConfigurationSequence seq(static_cast<std::size_t>(window.length), kNotRunning);
  if (n == 0) {
    out.push_back(seq);
    return out;
  }
  const int off = span.first - window.t0;
  for (int q = 0; q < n; ++q) seq[off + q] = 1;
  while (true) {
    out.push_back(seq);
    int q = n - 1;
    while (q >= 0 && seq[off + q] == num_clouds) {
      seq[off + q] = 1;
      --q;
    }
    if (q < 0) break;
    ++seq[off + q];
  }
  return out;
}

int running_count(std::span<const CloudId> row) {
  return static_cast<int>(std::count_if(row.begin(), row.end(),
                                        [](CloudId c) { return c != kNotRunning; }));
}

}  // namespace mmcplace
