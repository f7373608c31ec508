#include <doctest.h>

#include <sstream>

#include "memfp/log_ingest.hpp"
#include "memfp/synthgen.hpp"

using namespace memfp;

TEST_CASE("bitmap hex encoding: bit i = beat * W + dq, LSB first") {
  ErrorBitmap b = ErrorBitmap::from_hex(4, "0x00000001");
  CHECK(b.test(0, 0));
  CHECK(b.popcount() == 1);
  CHECK(b.to_hex() == "0x00000001");

  // beat 5, dq 2 on x4 -> bit 22
  ErrorBitmap c(4, 1ull << 22);
  CHECK(c.test(2, 5));
  CHECK(c.to_hex() == "0x00400000");

  ErrorBitmap d = ErrorBitmap::from_hex(8, "0x8000000000000001");
  CHECK(d.test(0, 0));
  CHECK(d.test(7, 7));

  CHECK_THROWS(ErrorBitmap(4, 0));                        // all-zero rejected
  CHECK_THROWS(ErrorBitmap(4, 1ull << 32));               // out of range for x4
  CHECK_THROWS(ErrorBitmap(5, 1));                        // bad width
  CHECK_THROWS(ErrorBitmap::from_hex(4, "0x123"));        // wrong digit count
  CHECK_THROWS(ErrorBitmap::from_hex(4, "00000001"));     // missing prefix
}

TEST_CASE("empty stream parses to nothing") {
  std::istringstream in("");
  EventLog log = parse_events(in);
  CHECK(log.ce_events.empty());
  CHECK(log.ue_events.empty());
  CHECK(log.warnings.empty());
  CHECK(log.stats.accepted == 0);
  CHECK(log.stats.dropped == 0);
}

TEST_CASE("single CE line with x4 bitmap decodes bit (0,0)") {
  std::istringstream in(
      R"({"ts":100,"dimm":"D1","type":"CE","socket":0,"channel":1,"slot":0,"rank":0,)"
      R"("device":3,"bankgroup":1,"bank":2,"row":10,"col":20,"bitmap":"0x00000001"})"
      "\n");
  EventLog log = parse_events(in);
  REQUIRE(log.ce_events.size() == 1);
  const CEEvent& ev = log.ce_events[0];
  CHECK(ev.ts == 100);
  CHECK(ev.dimm_id == "D1");
  CHECK(ev.address.device == 3);
  CHECK(ev.address.row == 10);
  REQUIRE(ev.bitmap.has_value());
  CHECK(ev.bitmap->dq_width() == 4);
  CHECK(ev.bitmap->test(0, 0));
  CHECK(ev.bitmap->popcount() == 1);
}

TEST_CASE("malformed lines and unknown types warn instead of aborting") {
  std::istringstream in(
      "not json at all\n"
      R"({"ts":5,"dimm":"D1","type":"XE"})"
      "\n"
      R"({"ts":5,"dimm":"D1","type":"UE"})"
      "\n"
      "# seed=1 config_hash=abc\n");
  EventLog log = parse_events(in);
  CHECK(log.ue_events.size() == 1);
  CHECK(log.warnings.size() == 2);
  CHECK(log.stats.accepted == 1);
  CHECK(log.stats.dropped == 2);
}

TEST_CASE("wrong-length bitmap hex drops the line with a warning") {
  std::istringstream in(
      R"({"ts":5,"dimm":"D1","type":"CE","socket":0,"channel":0,"slot":0,"rank":0,)"
      R"("device":0,"bankgroup":0,"bank":0,"row":0,"col":0,"bitmap":"0x01"})"
      "\n");
  EventLog log = parse_events(in);
  CHECK(log.ce_events.empty());
  CHECK(log.warnings.size() == 1);
}

TEST_CASE("exact duplicates dropped with warning; output ordered by (dimm, ts)") {
  const char* line =
      R"({"ts":50,"dimm":"D2","type":"CE","socket":0,"channel":0,"slot":0,"rank":0,)"
      R"("device":0,"bankgroup":0,"bank":0,"row":1,"col":1,"bitmap":"0x00000003"})";
  std::ostringstream src;
  src << R"({"ts":60,"dimm":"D1","type":"CE","socket":0,"channel":0,"slot":0,"rank":0,)"
      << R"("device":0,"bankgroup":0,"bank":0,"row":9,"col":9})" << "\n"
      << line << "\n"
      << line << "\n";
  std::istringstream in(src.str());
  EventLog log = parse_events(in);
  REQUIRE(log.ce_events.size() == 2);
  CHECK(log.ce_events[0].dimm_id == "D1");
  CHECK(log.ce_events[1].dimm_id == "D2");
  CHECK(log.stats.dropped == 1);
  REQUIRE(log.warnings.size() == 1);
  CHECK(log.warnings[0].find("duplicate") != std::string::npos);
}

TEST_CASE("parse(serialize(events)) is the identity on a generated fleet") {
  GeneratorConfig cfg;
  cfg.n_dimms = 60;
  cfg.duration_days = 30;
  cfg.seed = 42;
  SyntheticFleet fleet = generate(cfg);
  REQUIRE(fleet.ce_events.size() >= 1000);  // keep this a non-toy stream

  std::ostringstream out;
  serialize_events(fleet.ce_events, fleet.ue_events, out);
  std::istringstream in(out.str());
  EventLog log = parse_events(in);

  CHECK(log.warnings.empty());
  REQUIRE(log.ce_events.size() == fleet.ce_events.size());
  REQUIRE(log.ue_events.size() == fleet.ue_events.size());
  CHECK(log.ce_events == fleet.ce_events);
  CHECK(log.ue_events == fleet.ue_events);
}

TEST_CASE("parsing is deterministic") {
  GeneratorConfig cfg;
  cfg.n_dimms = 5;
  cfg.seed = 9;
  SyntheticFleet fleet = generate(cfg);
  std::ostringstream out;
  serialize_events(fleet.ce_events, fleet.ue_events, out);
  std::istringstream in1(out.str()), in2(out.str());
  EventLog a = parse_events(in1), b = parse_events(in2);
  CHECK(a.ce_events == b.ce_events);
  CHECK(a.warnings == b.warnings);
}

TEST_CASE("spec table: header-only file is empty") {
  std::istringstream in("dimm_id,manufacturer,capacity_gb,width,freq_mhz,process,server_age_days\n");
  CHECK(load_dimm_specs(in).empty());
}

TEST_CASE("spec table: direct field mapping") {
  std::istringstream in(
      "dimm_id,manufacturer,capacity_gb,width,freq_mhz,process,server_age_days\n"
      "D1,A,32,x4,2933,other,900\n");
  DimmSpecTable t = load_dimm_specs(in);
  REQUIRE(t.count("D1") == 1);
  const DimmSpec& s = t.at("D1");
  CHECK(s.manufacturer == "A");
  CHECK(s.capacity_gb == 32);
  CHECK(s.data_width == DataWidth::x4);
  CHECK(s.frequency_mhz == 2933);
  CHECK(s.process_class == "other");
  CHECK(s.server_age_days == 900);
}

TEST_CASE("spec table errors: duplicates, missing columns, bad width") {
  std::istringstream dup(
      "dimm_id,manufacturer,capacity_gb,width,freq_mhz,process,server_age_days\n"
      "D1,A,32,x4,2933,other,900\nD1,B,16,x8,2400,p20nm,100\n");
  CHECK_THROWS_AS(load_dimm_specs(dup), IoError);

  std::istringstream missing("dimm_id,manufacturer\nD1,A\n");
  CHECK_THROWS_AS(load_dimm_specs(missing), IoError);

  std::istringstream badw(
      "dimm_id,manufacturer,capacity_gb,width,freq_mhz,process,server_age_days\n"
      "D1,A,32,x16,2933,other,900\n");
  CHECK_THROWS_AS(load_dimm_specs(badw), IoError);
}

TEST_CASE("spec table from synthgen round-trips bit-exactly") {
  GeneratorConfig cfg;
  cfg.n_dimms = 50;
  cfg.seed = 4;
  SyntheticFleet fleet = generate(cfg);
  std::ostringstream out;
  serialize_dimm_specs(fleet.specs, out);
  std::istringstream in(out.str());
  DimmSpecTable parsed = load_dimm_specs(in);
  CHECK(parsed == fleet.specs);

  std::ostringstream out2;
  serialize_dimm_specs(parsed, out2);
  CHECK(out.str() == out2.str());
}
