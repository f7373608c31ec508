#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "memfp/fault_classifier.hpp"

using namespace memfp;

namespace {

CEEvent at(Timestamp ts, int row, int col, int bank = 0, int bg = 0, int device = 0,
           int rank = 0) {
  CEEvent e;
  e.ts = ts;
  e.dimm_id = "D1";
  e.address.rank = rank;
  e.address.device = device;
  e.address.bank_group = bg;
  e.address.bank = bank;
  e.address.row = row;
  e.address.column = col;
  return e;
}

// Batch recount over every grouping level, written straight from the
// definitions with no shared code with the library classifier.
FaultReport brute_classify(const std::vector<CEEvent>& events, const FaultThresholds& th,
                           Timestamp t, Duration window) {
  FaultReport rep;
  std::vector<MemoryAddress> in_window;
  for (const auto& e : events)
    if (e.ts <= t && (window <= 0 || e.ts > t - window)) in_window.push_back(e.address);

  std::map<CellKey, int> cells;
  for (const auto& a : in_window)
    cells[{a.rank, a.device, a.bank_group, a.bank, a.row, a.column}]++;
  for (const auto& [k, n] : cells)
    if (n >= th.cell) rep.cell_faults.insert(k);

  std::map<RowKey, std::set<int>> rows;
  std::map<ColumnKey, std::set<int>> cols;
  for (const auto& a : in_window) {
    rows[{a.rank, a.device, a.bank_group, a.bank, a.row}].insert(a.column);
    cols[{a.rank, a.device, a.bank_group, a.bank, a.column}].insert(a.row);
  }
  for (const auto& [k, c] : rows)
    if (static_cast<int>(c.size()) >= th.row) rep.row_faults.insert(k);
  for (const auto& [k, r] : cols)
    if (static_cast<int>(r.size()) >= th.column) rep.column_faults.insert(k);

  std::map<BankKey, std::pair<int, int>> banks;
  for (const auto& k : rep.row_faults)
    banks[{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k)}].first++;
  for (const auto& k : rep.column_faults)
    banks[{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k)}].second++;
  for (const auto& [k, rc] : banks)
    if (rc.first > th.bank && rc.second > th.bank) rep.bank_faults.insert(k);

  std::map<DeviceKey, int> devices;
  for (const auto& k : rep.bank_faults) devices[{std::get<0>(k), std::get<1>(k)}]++;
  for (const auto& [k, n] : devices)
    if (n > th.device) rep.device_faults.insert(k);

  std::map<RankKey, int> ranks;
  for (const auto& k : rep.device_faults) ranks[std::get<0>(k)]++;
  for (const auto& [k, n] : ranks)
    if (n >= th.rank) rep.rank_faults.insert(k);
  return rep;
}

}  // namespace

TEST_CASE("two CEs at one cell: exactly one cell fault, nothing higher") {
  std::vector<CEEvent> ev = {at(10, 5, 7), at(20, 5, 7)};
  FaultReport r = classify_faults(ev, {}, 100);
  CHECK(r.cell_faults.size() == 1);
  CHECK(r.row_faults.empty());
  CHECK(r.column_faults.empty());
  CHECK(r.bank_faults.empty());
  CHECK(r.device_faults.empty());
  CHECK(r.rank_faults.empty());
}

TEST_CASE("two CEs, same row, distinct columns: one row fault, no cell fault") {
  std::vector<CEEvent> ev = {at(10, 5, 1), at(20, 5, 2)};
  FaultReport r = classify_faults(ev, {}, 100);
  CHECK(r.cell_faults.empty());
  CHECK(r.row_faults.size() == 1);
  CHECK(r.column_faults.empty());
}

TEST_CASE("repeated hits on one cell do not fake a row fault") {
  std::vector<CEEvent> ev = {at(10, 5, 1), at(20, 5, 1), at(30, 5, 1)};
  FaultReport r = classify_faults(ev, {}, 100);
  CHECK(r.row_faults.empty());
  CHECK(r.cell_faults.size() == 1);
}

TEST_CASE("bank fault needs row AND column fault counts strictly over the threshold") {
  std::vector<CEEvent> ev;
  Timestamp ts = 1;
  // 4 row faults (rows 0..3, columns 100+r, 200+r) and 4 column faults
  for (int r = 0; r < 4; ++r) {
    ev.push_back(at(ts++, r, 100 + r));
    ev.push_back(at(ts++, r, 200 + r));
  }
  for (int c = 0; c < 4; ++c) {
    ev.push_back(at(ts++, 300 + c, c));
    ev.push_back(at(ts++, 400 + c, c));
  }
  FaultThresholds th;  // bank = 3, strict >
  FaultReport r = classify_faults(ev, th, ts);
  CHECK(r.row_faults.size() == 4);
  CHECK(r.column_faults.size() == 4);
  CHECK(r.bank_faults.size() == 1);

  // with only 3 of each the bank must not trigger
  std::vector<CEEvent> fewer(ev.begin(), ev.begin() + 6);
  for (std::size_t i = 8; i < 14; ++i) fewer.push_back(ev[i]);
  FaultReport r2 = classify_faults(fewer, th, ts);
  CHECK(r2.row_faults.size() == 3);
  CHECK(r2.column_faults.size() == 3);
  CHECK(r2.bank_faults.empty());
}

TEST_CASE("degenerate calibration: thresholds all 1 make every cell a fault") {
  FaultThresholds th{1, 1, 1, 1, 1, 1};
  std::vector<CEEvent> ev = {at(1, 1, 1), at(2, 2, 2), at(3, 3, 3)};
  FaultReport r = classify_faults(ev, th, 10);
  CHECK(r.cell_faults.size() == 3);
}

TEST_CASE("windowing: events outside (t - window, t] are ignored") {
  std::vector<CEEvent> ev = {at(10, 5, 7), at(2000, 5, 7)};
  CHECK(classify_faults(ev, {}, 2000, 100).cell_faults.empty());   // first event aged out
  CHECK(classify_faults(ev, {}, 2000).cell_faults.size() == 1);    // full history
  CHECK(classify_faults(ev, {}, 1999).cell_faults.empty());        // second event in future
}

TEST_CASE("classifier matches the exhaustive grouping oracle on random DIMMs") {
  std::mt19937_64 rng(777);
  for (int dimm = 0; dimm < 1000; ++dimm) {
    std::vector<CEEvent> ev;
    const int n = 2 + static_cast<int>(rng() % 120);
    Timestamp ts = 1000;
    // small coordinate ranges force plenty of collisions at every level
    for (int i = 0; i < n; ++i) {
      ts += static_cast<Timestamp>(rng() % 500);
      ev.push_back(at(ts, static_cast<int>(rng() % 6), static_cast<int>(rng() % 6),
                      static_cast<int>(rng() % 2), static_cast<int>(rng() % 2),
                      static_cast<int>(rng() % 2), static_cast<int>(rng() % 2)));
    }
    FaultThresholds th;
    th.cell = 2 + static_cast<int>(rng() % 2);
    th.row = 2 + static_cast<int>(rng() % 2);
    th.column = 2;
    th.bank = 1 + static_cast<int>(rng() % 3);
    th.device = 1;
    th.rank = 1 + static_cast<int>(rng() % 2);
    const Timestamp t = ts - static_cast<Timestamp>(rng() % 1000);
    const Duration window = (rng() % 3 == 0) ? 0 : static_cast<Duration>(rng() % 20000);
    REQUIRE(classify_faults(ev, th, t, window) == brute_classify(ev, th, t, window));
  }
}

TEST_CASE("accumulator equals batch classification regardless of feed order") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CEEvent> ev;
    const int n = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < n; ++i)
      ev.push_back(at(i + 1, static_cast<int>(rng() % 5), static_cast<int>(rng() % 5),
                      static_cast<int>(rng() % 2), static_cast<int>(rng() % 2)));
    FaultAccumulator acc;
    std::vector<std::size_t> order(ev.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (std::size_t i : order) acc.add(ev[i].address);
    REQUIRE(acc.report() == classify_faults(ev, {}, ev.back().ts));
  }
}

TEST_CASE("adding an event never decreases any raw count") {
  std::mt19937_64 rng(42);
  std::vector<CEEvent> ev;
  FaultCounts prev;
  for (int i = 0; i < 300; ++i) {
    ev.push_back(at(i + 1, static_cast<int>(rng() % 4), static_cast<int>(rng() % 4),
                    static_cast<int>(rng() % 2)));
    FaultCounts now = counts_of(classify_faults(ev, {}, ev.back().ts));
    CHECK(now.cell >= prev.cell);
    CHECK(now.row >= prev.row);
    CHECK(now.column >= prev.column);
    CHECK(now.bank >= prev.bank);
    CHECK(now.device >= prev.device);
    CHECK(now.rank >= prev.rank);
    prev = now;
  }
}

TEST_CASE("exclusive counts: cell-only report is unchanged") {
  std::vector<CEEvent> ev = {at(1, 5, 7), at(2, 5, 7)};
  FaultReport r = classify_faults(ev, {}, 10);
  FaultCounts ex = exclusive_faults(r);
  CHECK(ex == counts_of(r));
}

TEST_CASE("exclusive counts: faulted bank swallows its row and column faults") {
  std::vector<CEEvent> ev;
  Timestamp ts = 1;
  for (int r = 0; r < 4; ++r) {
    ev.push_back(at(ts++, r, 100 + r));
    ev.push_back(at(ts++, r, 200 + r));
  }
  for (int c = 0; c < 4; ++c) {
    ev.push_back(at(ts++, 300 + c, c));
    ev.push_back(at(ts++, 400 + c, c));
  }
  FaultReport r = classify_faults(ev, {}, ts);
  REQUIRE(r.bank_faults.size() == 1);
  FaultCounts ex = exclusive_faults(r);
  CHECK(ex.bank == 1);
  CHECK(ex.row == 0);
  CHECK(ex.column == 0);
}

TEST_CASE("exclusive counts match a brute-force subsumption filter") {
  std::mt19937_64 rng(2025);
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<CEEvent> ev;
    const int n = 2 + static_cast<int>(rng() % 150);
    for (int i = 0; i < n; ++i)
      ev.push_back(at(i + 1, static_cast<int>(rng() % 5), static_cast<int>(rng() % 5),
                      static_cast<int>(rng() % 2), static_cast<int>(rng() % 2),
                      static_cast<int>(rng() % 2), static_cast<int>(rng() % 2)));
    FaultThresholds th;
    th.bank = 1;
    th.device = 1;
    th.rank = 1;
    FaultReport rep = classify_faults(ev, th, n + 1);
    FaultCounts got = exclusive_faults(rep);

    FaultCounts want;
    auto bank_of = [](const auto& k) {
      return BankKey{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k)};
    };
    auto covered = [&](int rank, int device, const BankKey* bank) {
      if (rep.rank_faults.count(rank)) return true;
      if (rep.device_faults.count({rank, device})) return true;
      return bank && rep.bank_faults.count(*bank) > 0;
    };
    for (const auto& k : rep.cell_faults) {
      const BankKey bk{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k)};
      const RowKey rk{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k),
                      std::get<4>(k)};
      const ColumnKey ck{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k),
                         std::get<5>(k)};
      if (!covered(std::get<0>(k), std::get<1>(k), &bk) && !rep.row_faults.count(rk) &&
          !rep.column_faults.count(ck))
        want.cell++;
    }
    for (const auto& k : rep.row_faults) {
      const BankKey bk = bank_of(k);
      if (!covered(std::get<0>(k), std::get<1>(k), &bk)) want.row++;
    }
    for (const auto& k : rep.column_faults) {
      const BankKey bk = bank_of(k);
      if (!covered(std::get<0>(k), std::get<1>(k), &bk)) want.column++;
    }
    for (const auto& k : rep.bank_faults)
      if (!covered(std::get<0>(k), std::get<1>(k), nullptr)) want.bank++;
    for (const auto& k : rep.device_faults)
      if (!rep.rank_faults.count(std::get<0>(k))) want.device++;
    want.rank = static_cast<long long>(rep.rank_faults.size());
    REQUIRE(got == want);
  }
}
