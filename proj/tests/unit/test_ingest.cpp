#include <doctest.h>

#include <sstream>

#include "fallcloud/ingest.hpp"
#include "fallcloud/synthetic.hpp"
#include "unit/helpers.hpp"

using namespace fallcloud;
using testutil::TempDir;

TEST_CASE("generic adapter with a t,x,y,z header") {
  TempDir dir;
  const auto file = dir.write("walk.csv", "t,x,y,z\n0,1,2,3\n0.02,4,5,6\n# comment\n0.04,7,8,9.5\n");
  const auto recs = ingest(file.string(), "generic");
  REQUIRE(recs.size() == 1);
  const auto& r = recs[0];
  REQUIRE(r.samples.size() == 3);
  CHECK(r.samples[0] == TriaxialSample{1, 2, 3});
  CHECK(r.samples[2] == TriaxialSample{7, 8, 9.5});
  CHECK(r.meta.label == Label::Adl);
  CHECK(r.meta.dataset == "generic");
  CHECK(r.meta.unit == "g");
  CHECK(r.sample_rate_hz > 0);
  CHECK(r.id == "walk.csv");
}

TEST_CASE("generic adapter variants") {
  TempDir dir;
  SUBCASE("headerless three columns") {
    const auto recs = ingest(dir.write("a.csv", "1,2,3\n4,5,6\n").string(), "generic");
    CHECK(recs[0].samples.size() == 2);
    CHECK(recs[0].samples[1] == TriaxialSample{4, 5, 6});
  }
  SUBCASE("headerless with timestamp") {
    const auto recs = ingest(dir.write("a.csv", "10,1,2,3\n11,4,5,6\n").string(), "generic");
    CHECK(recs[0].samples[0] == TriaxialSample{1, 2, 3});
  }
  SUBCASE("header in a different column order") {
    const auto recs = ingest(dir.write("a.csv", "acc_z,acc_y,acc_x,t\n3,2,1,0\n").string(), "generic");
    CHECK(recs[0].samples[0] == TriaxialSample{1, 2, 3});
  }
  SUBCASE("custom delimiter") {
    IngestOptions o;
    o.delimiter = ';';
    o.sample_rate_hz = 25;
    const auto recs = ingest(dir.write("a.txt", "x;y;z\n1;2;3\n").string(), "generic", o);
    CHECK(recs[0].samples[0] == TriaxialSample{1, 2, 3});
    CHECK(recs[0].sample_rate_hz == 25);
  }
  SUBCASE("label from the file name and override") {
    CHECK(ingest(dir.write("my_fall_01.csv", "1,2,3\n").string(), "generic")[0].meta.label == Label::Fall);
    IngestOptions o;
    o.label = Label::Adl;
    CHECK(ingest(dir.write("fall2.csv", "1,2,3\n").string(), "generic", o)[0].meta.label == Label::Adl);
  }
}

TEST_CASE("ingest errors name the file and line") {
  TempDir dir;
  auto message = [](auto&& fn) -> std::string {
    try {
      fn();
    } catch (const Error& e) {
      return e.what();
    }
    return {};
  };
  SUBCASE("empty file") {
    const auto f = dir.write("empty.csv", "");
    CHECK_ERRC(ingest(f.string(), "generic"), Errc::Ingest);
    CHECK(message([&] { ingest(f.string(), "generic"); }).find("empty.csv") != std::string::npos);
  }
  SUBCASE("malformed value") {
    const auto f = dir.write("bad.csv", "x,y,z\n1,2,3\n1,oops,3\n");
    CHECK_ERRC(ingest(f.string(), "generic"), Errc::Ingest);
    CHECK(message([&] { ingest(f.string(), "generic"); }).find("bad.csv:3") != std::string::npos);
  }
  SUBCASE("inconsistent column count") {
    const auto f = dir.write("ragged.csv", "1,2,3\n1,2,3,4\n");
    CHECK_ERRC(ingest(f.string(), "generic"), Errc::Ingest);
    CHECK(message([&] { ingest(f.string(), "generic"); }).find("ragged.csv:2") != std::string::npos);
  }
  SUBCASE("non-finite value") {
    CHECK_ERRC(ingest(dir.write("nan.csv", "1,nan,3\n").string(), "generic"), Errc::Ingest);
  }
  SUBCASE("unknown adapter") {
    CHECK_ERRC(ingest(dir.path.string(), "hdf5"), Errc::UnknownAdapter);
  }
  SUBCASE("missing path") {
    CHECK_ERRC(ingest((dir.path / "nope").string(), "generic"), Errc::Ingest);
  }
}

TEST_CASE("directory ingestion is sorted by path and parallel-safe") {
  TempDir dir;
  dir.write("b/2.csv", "2,0,0\n");
  dir.write("a.csv", "1,0,0\n");
  dir.write("b/1.csv", "3,0,0\n");
  dir.write("notes.md", "ignored");
  IngestOptions o;
  o.threads = 4;
  const auto recs = ingest(dir.path.string(), "generic", o);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].id == "a.csv");
  CHECK(recs[1].id == "b/1.csv");
  CHECK(recs[2].id == "b/2.csv");
  CHECK(recs[1].samples[0].x == 3);
}

TEST_CASE("generic round trip is lossless") {
  SyntheticSpec spec;
  spec.falls = 3;
  spec.adls = 3;
  const auto recs = generate_synthetic(spec);
  TempDir dir;
  for (const auto& r : recs) {
    std::ostringstream os;
    write_generic(os, r);
    const auto back = ingest(dir.write(r.id + ".csv", os.str()).string(), "generic");
    REQUIRE(back.size() == 1);
    CHECK(back[0].samples == r.samples);
  }
  // Values that need all 17 significant digits.
  TriaxialRecording r = testutil::recording({{0.1, 1.0 / 3.0, -2.718281828459045}, {1e-300, -0.0, 123456789.123}});
  std::ostringstream os;
  write_generic(os, r);
  CHECK(ingest(dir.write("precise.csv", os.str()).string(), "generic")[0].samples == r.samples);
}

TEST_CASE("synthetic adapter is deterministic") {
  const auto a = ingest("seed=5,falls=4,adls=3", "synthetic");
  const auto b = ingest("seed=5,falls=4,adls=3", "synthetic");
  const auto c = ingest("seed=6,falls=4,adls=3", "synthetic");
  REQUIRE(a.size() == 7);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].samples == b[i].samples);
  }
  CHECK(a[0].samples != c[0].samples);
  std::size_t falls = 0;
  for (const auto& r : a) falls += r.meta.label == Label::Fall;
  CHECK(falls == 4);
}

TEST_CASE("synthetic spec text round trip") {
  SyntheticSpec s;
  s.seed = 99;
  s.falls = 12;
  s.noise_scale = 1.5;
  s.device = "watch-b";
  const auto back = parse_synthetic_spec(s.to_string());
  CHECK(back.to_string() == s.to_string());
  CHECK(back.seed == 99);
  CHECK(back.device == "watch-b");
  CHECK_ERRC(parse_synthetic_spec("seed=x"), Errc::Parameter);
  CHECK_ERRC(parse_synthetic_spec("colour=red"), Errc::Parameter);
}

TEST_CASE("sisfall adapter") {
  TempDir dir;
  const auto file = dir.write("F01_SA02_R01.txt",
                              " 17,-179,-99,-18,-504,-352,76,-697,-279;\n 15,-174,-90,-20,-505,-346,76,-693,-276;\n");
  dir.write("D05_SE01_R03.txt", " 1,2,3,4,5,6,7,8,9;\n");
  const auto recs = ingest(dir.path.string(), "sisfall");
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].meta.label == Label::Adl);
  CHECK(recs[0].meta.subject == "SE01");
  const auto& f = recs[1];
  CHECK(f.meta.label == Label::Fall);
  CHECK(f.meta.activity == "F01");
  CHECK(f.meta.subject == "SA02");
  CHECK(f.meta.unit == "adxl345_counts");
  CHECK(f.sample_rate_hz == 200);
  CHECK(f.samples[0] == TriaxialSample{17, -179, -99});
  (void)file;
}

TEST_CASE("mobiact adapter") {
  TempDir dir;
  dir.write("FOL_1_1_annotated.csv",
            "timestamp,rel_time,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z,azimuth,pitch,roll,label\n"
            "1,0.0,0.5,9.7,1.2,0,0,0,0,0,0,STD\n");
  dir.write("WAL_3_2_annotated.csv",
            "timestamp,rel_time,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z,azimuth,pitch,roll,label\n"
            "1,0.0,0.1,9.8,0.2,0,0,0,0,0,0,WAL\n");
  dir.write("FOL_1_1.csv", "raw,unused\n");
  const auto recs = ingest(dir.path.string(), "mobiact");
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].meta.label == Label::Fall);
  CHECK(recs[0].samples[0] == TriaxialSample{0.5, 9.7, 1.2});
  CHECK(recs[0].meta.unit == "m/s^2");
  CHECK(recs[1].meta.label == Label::Adl);
  CHECK(recs[1].meta.subject == "3");
}

TEST_CASE("adapter ids") {
  const auto ids = adapter_ids();
  for (const char* id : {"generic", "sisfall", "mobiact", "mmsys", "synthetic"}) {
    CHECK(std::find(ids.begin(), ids.end(), id) != ids.end());
  }
}
