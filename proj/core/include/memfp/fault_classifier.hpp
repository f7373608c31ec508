#pragma once

#include <array>
#include <map>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "memfp/types.hpp"

namespace memfp {

struct FaultThresholds {
  int cell = 2;    // CE repeats in one cell ("reaches" -> >=)
  int row = 2;     // distinct faulted columns in one row
  int column = 2;  // distinct faulted rows in one column
  int bank = 3;    // row AND column faults strictly greater than this
  int device = 2;  // distinct bank faults strictly greater than this
  int rank = 2;    // device faults ("reach" -> >=)
};

using CellKey = std::tuple<int, int, int, int, int, int>;  // rank,device,bg,bank,row,col
using RowKey = std::tuple<int, int, int, int, int>;        // rank,device,bg,bank,row
using ColumnKey = std::tuple<int, int, int, int, int>;     // rank,device,bg,bank,col
using BankKey = std::tuple<int, int, int, int>;            // rank,device,bg,bank
using DeviceKey = std::tuple<int, int>;                    // rank,device
using RankKey = int;

struct FaultReport {
  std::set<CellKey> cell_faults;
  std::set<RowKey> row_faults;
  std::set<ColumnKey> column_faults;
  std::set<BankKey> bank_faults;
  std::set<DeviceKey> device_faults;
  std::set<RankKey> rank_faults;

  bool operator==(const FaultReport&) const = default;
};

struct FaultCounts {
  long long cell = 0, row = 0, column = 0, bank = 0, device = 0, rank = 0;
  bool operator==(const FaultCounts&) const = default;
};

FaultCounts counts_of(const FaultReport& report);

/// Incremental fault detector. Faults are monotone in the event set, so
/// the accumulator only ever adds instances; feeding a window's events
/// in any order and snapshotting gives the batch classification.
class FaultAccumulator {
 public:
  explicit FaultAccumulator(FaultThresholds thresholds = {});

  void add(const MemoryAddress& addr);

  const FaultReport& report() const { return report_; }
  FaultCounts counts() const { return counts_of(report_); }

 private:
  FaultThresholds th_;
  FaultReport report_;
  std::map<CellKey, int> cell_hits_;
  std::map<RowKey, std::set<int>> row_columns_;
  std::map<ColumnKey, std::set<int>> column_rows_;
  std::map<BankKey, std::pair<int, int>> bank_row_col_faults_;
  std::map<DeviceKey, int> device_bank_faults_;
  std::map<RankKey, int> rank_device_faults_;

  void on_row_fault(const RowKey& key);
  void on_column_fault(const ColumnKey& key);
  void check_bank(const BankKey& key);
  void on_bank_fault(const BankKey& key);
  void on_device_fault(const DeviceKey& key);
};

/// Faults over events with ts in (t - window, t]; window <= 0 means all
/// history up to t. Events without a bitmap still carry an address and
/// participate; the list must be sorted by ts.
FaultReport classify_faults(std::span<const CEEvent> ce_events, const FaultThresholds& thresholds,
                            Timestamp t, Duration window = 0);

/// Per-level counts after dropping instances contained in a detected
/// fault at a higher level (rank > device > bank > row/column > cell).
FaultCounts exclusive_faults(const FaultReport& report);

}  // namespace memfp
