#include "memfp/fault_classifier.hpp"

namespace memfp {

FaultCounts counts_of(const FaultReport& r) {
  return FaultCounts{
      static_cast<long long>(r.cell_faults.size()),   static_cast<long long>(r.row_faults.size()),
      static_cast<long long>(r.column_faults.size()), static_cast<long long>(r.bank_faults.size()),
      static_cast<long long>(r.device_faults.size()), static_cast<long long>(r.rank_faults.size())};
}

FaultAccumulator::FaultAccumulator(FaultThresholds thresholds) : th_(thresholds) {}

void FaultAccumulator::add(const MemoryAddress& a) {
  const CellKey cell{a.rank, a.device, a.bank_group, a.bank, a.row, a.column};
  const RowKey row{a.rank, a.device, a.bank_group, a.bank, a.row};
  const ColumnKey col{a.rank, a.device, a.bank_group, a.bank, a.column};

  if (++cell_hits_[cell] >= th_.cell) report_.cell_faults.insert(cell);

  auto& cols = row_columns_[row];
  if (cols.insert(a.column).second && static_cast<int>(cols.size()) >= th_.row)
    if (report_.row_faults.insert(row).second) on_row_fault(row);

  auto& rows = column_rows_[col];
  if (rows.insert(a.row).second && static_cast<int>(rows.size()) >= th_.column)
    if (report_.column_faults.insert(col).second) on_column_fault(col);
}

void FaultAccumulator::on_row_fault(const RowKey& key) {
  const BankKey bank{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key)};
  ++bank_row_col_faults_[bank].first;
  check_bank(bank);
}

void FaultAccumulator::on_column_fault(const ColumnKey& key) {
  const BankKey bank{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key)};
  ++bank_row_col_faults_[bank].second;
  check_bank(bank);
}

void FaultAccumulator::check_bank(const BankKey& key) {
  const auto& [rows, cols] = bank_row_col_faults_[key];
  if (rows > th_.bank && cols > th_.bank)
    if (report_.bank_faults.insert(key).second) on_bank_fault(key);
}

void FaultAccumulator::on_bank_fault(const BankKey& key) {
  const DeviceKey dev{std::get<0>(key), std::get<1>(key)};
  if (++device_bank_faults_[dev] > th_.device)
    if (report_.device_faults.insert(dev).second) on_device_fault(dev);
}

void FaultAccumulator::on_device_fault(const DeviceKey& key) {
  const RankKey rank = std::get<0>(key);
  if (++rank_device_faults_[rank] >= th_.rank) report_.rank_faults.insert(rank);
}

FaultReport classify_faults(std::span<const CEEvent> ce_events, const FaultThresholds& thresholds,
                            Timestamp t, Duration window) {
  FaultAccumulator acc(thresholds);
  for (const auto& ev : ce_events) {
    if (ev.ts > t) continue;
    if (window > 0 && ev.ts <= t - window) continue;
    acc.add(ev.address);
  }
  return acc.report();
}

FaultCounts exclusive_faults(const FaultReport& r) {
  auto bank_of_row = [](const RowKey& k) {
    return BankKey{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k)};
  };
  auto device_of_bank = [](const BankKey& k) { return DeviceKey{std::get<0>(k), std::get<1>(k)}; };

  auto bank_subsumed = [&](const BankKey& bank) {
    return r.device_faults.count(device_of_bank(bank)) ||
           r.rank_faults.count(std::get<0>(bank));
  };
  auto in_faulted_bank = [&](const BankKey& bank) {
    return r.bank_faults.count(bank) || bank_subsumed(bank);
  };

  FaultCounts out;
  for (const auto& c : r.cell_faults) {
    const RowKey row{std::get<0>(c), std::get<1>(c), std::get<2>(c), std::get<3>(c),
                     std::get<4>(c)};
    const ColumnKey col{std::get<0>(c), std::get<1>(c), std::get<2>(c), std::get<3>(c),
                        std::get<5>(c)};
    if (!r.row_faults.count(row) && !r.column_faults.count(col) &&
        !in_faulted_bank(bank_of_row(row)))
      ++out.cell;
  }
  for (const auto& row : r.row_faults)
    if (!in_faulted_bank(bank_of_row(row))) ++out.row;
  for (const auto& col : r.column_faults)
    if (!in_faulted_bank(BankKey{std::get<0>(col), std::get<1>(col), std::get<2>(col),
                                 std::get<3>(col)}))
      ++out.column;
  for (const auto& bank : r.bank_faults)
    if (!bank_subsumed(bank)) ++out.bank;
  for (const auto& dev : r.device_faults)
    if (!r.rank_faults.count(std::get<0>(dev))) ++out.device;
  out.rank = static_cast<long long>(r.rank_faults.size());
  return out;
}

}  // namespace memfp
