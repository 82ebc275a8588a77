#include <gtest/gtest.h>

#include <filesystem>

#include "cle/io.hpp"

namespace {

using namespace cle;

const KappaParams kParams = KappaParams::from_kappa(3.0);

std::string pixel(const Rgb& c) { return std::string(reinterpret_cast<const char*>(c.data()), 3); }

NestedEnsemble ensemble_with_children() {
  for (std::uint64_t seed = 1;; ++seed) {
    NestedEnsemble e = nest_ensemble(kParams, LatticeDomain::rectangle(64, 64, 1.0 / 64), 2, 4096, seed);
    for (const CleLoop& l : e.loops)
      if (l.parent != kNoParent) return e;
  }
}

TEST(Csv, HeaderProvenanceAndQuoting) {
  CsvTable t({"a", "b", "c", "d"}, 42, 0xff);
  t.row() << 1.5 << std::size_t{7} << "x,y" << true;
  t.row() << std::numeric_limits<double>::infinity() << -3 << "say \"hi\"" << false;
  EXPECT_EQ(t.str(),
            "# seed=42 config_hash=00000000000000ff\n"
            "a,b,c,d\n"
            "1.5,7,\"x,y\",1\n"
            "inf,-3,\"say \"\"hi\"\"\",0\n");
  EXPECT_EQ(csv_number(std::nan("")), "nan");
  EXPECT_EQ(csv_number(0.1), "0.10000000000000001");
}

TEST(Csv, RaggedRowsAreRejected) {
  CsvTable t({"a", "b"}, 0, 0);
  t.row() << 1;
  EXPECT_THROW(t.str(), std::logic_error);
  EXPECT_THROW(t.row(), std::logic_error);
}

TEST(Palette, EndpointsAndMonotoneLuminance) {
  EXPECT_EQ(kPalette[0], (Rgb{68, 1, 84}));
  EXPECT_EQ(kPalette[255], (Rgb{253, 231, 37}));
  auto lum = [](const Rgb& c) { return 0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]; };
  for (std::size_t i = 1; i < 256; ++i) EXPECT_GE(lum(kPalette[i]) + 1.0, lum(kPalette[i - 1]));
}

TEST(Ppm, RankColouredStrip) {
  const CellMask strip(3, 1, 1);
  const EpsMetricField f = distance_field(strip, DiscreteDisk(0.5, 1.0), {Cell{0, 0}});
  EXPECT_EQ(render_field(strip, f), "P6\n3 1\n255\n" + pixel(kPalette[0]) + pixel(kPalette[127]) + pixel(kPalette[255]));
  EXPECT_EQ(render_field(strip, f, 2.5), "P6\n3 1\n255\n" + pixel(kPalette[0]) + pixel(kPalette[255]) + pixel(kUnreachedGray));
}

TEST(Ppm, SinglePixelAndRowOrder) {
  const CellMask one(1, 1, 1);
  EXPECT_EQ(render_field(one, distance_field(one, DiscreteDisk(1.0, 1.0), {Cell{0, 0}})),
            "P6\n1 1\n255\n" + pixel(kPalette[0]));
  CellMask col(1, 2, 0);
  col(0, 0) = 1;  // bottom row set: appears last in the file
  EXPECT_EQ(render_mask(col), std::string("P6\n1 2\n255\n") + std::string(3, '\0') + std::string(3, '\xff'));
  // Off-mask cells are black, unreachable ones gray.
  CellMask gap(3, 1, 1);
  gap(1, 0) = 0;
  EXPECT_EQ(render_field(gap, distance_field(gap, DiscreteDisk(1.0, 1.0), {Cell{0, 0}})),
            "P6\n3 1\n255\n" + pixel(kPalette[0]) + pixel(kBlack) + pixel(kUnreachedGray));
  EXPECT_THROW(render_field(gap, distance_field(gap, DiscreteDisk(1.0, 1.0), {Cell{0, 0}}), 0.5), std::invalid_argument);
}

TEST(PolygonInterior, InvertsTrace) {
  std::vector<Cell> cells{{0, 0}, {1, 0}, {1, 1}, {1, 2}, {2, 2}, {3, 2}, {3, 1}};
  const Region r = fill_region(cells);
  EXPECT_EQ(polygon_interior(trace_boundary(r)), r);
  EXPECT_THROW(polygon_interior(std::vector<Vertex>{{0, 0}, {1, 0}}), std::invalid_argument);
}

TEST(Ensemble, SaveLoadRoundTrip) {
  const NestedEnsemble e = ensemble_with_children();
  const std::string text = save_ensemble(e);
  EXPECT_EQ(text.rfind(kEnsembleMagic, 0), 0u);
  const NestedEnsemble back = load_ensemble(text);
  EXPECT_EQ(back, e);
  EXPECT_EQ(save_ensemble(back), text);
}

TEST(Ensemble, MaskedDomainRoundTrip) {
  CellMask allowed(20, 18, 1);
  for (int y = 0; y < 9; ++y) allowed(0, y) = 0;
  const NestedEnsemble e = nest_ensemble(kParams, LatticeDomain(0.05, allowed, {-3, 4}), 1, 360, 12);
  const std::string text = save_ensemble(e);
  EXPECT_NE(text.find("allowed rows"), std::string::npos);
  EXPECT_EQ(load_ensemble(text), e);
}

TEST(Ensemble, HandWrittenFixture) {
  const NestedEnsemble e = load_ensemble(read_file(std::string(CLE_TEST_DATA_DIR) + "/one_loop.cle"));
  EXPECT_EQ(e.domain.width(), 5);
  EXPECT_DOUBLE_EQ(e.domain.delta(), 0.2);
  EXPECT_EQ(e.seed, 77u);
  EXPECT_EQ(e.lmax, 16);
  EXPECT_EQ(e.stats.soups, 1u);
  EXPECT_EQ(e.stats.soup_loops, 3u);
  ASSERT_EQ(e.stats.per_depth.size(), 1u);
  EXPECT_EQ(e.stats.per_depth[0], (ExtractionStats{2, 1, 0}));
  ASSERT_EQ(e.loops.size(), 1u);
  EXPECT_EQ(e.loops[0].interior.count(), 4u);
  EXPECT_TRUE(e.loops[0].interior.contains({2, 2}));
  EXPECT_FALSE(e.loops[0].interior.contains({3, 3}));
  EXPECT_DOUBLE_EQ(e.params.c, 0.5);
}

TEST(Ensemble, TruncationReportsOffset) {
  const std::string text = save_ensemble(ensemble_with_children());
  for (std::size_t cut : {std::size_t{5}, text.size() / 2, text.size() - 4}) {
    try {
      load_ensemble(std::string_view(text).substr(0, cut));
      ADD_FAILURE() << "truncated file at " << cut << " accepted";
    } catch (const EnsembleFormatError& err) {
      EXPECT_LE(err.offset(), cut);
      EXPECT_NE(std::string(err.what()).find("byte"), std::string::npos);
    }
  }
}

TEST(Ensemble, RejectsSemanticViolations) {
  const std::string base = read_file(std::string(CLE_TEST_DATA_DIR) + "/one_loop.cle");
  auto replaced = [&](const std::string& from, const std::string& to) {
    std::string s = base;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  EXPECT_THROW(load_ensemble(replaced("CLECARPET v1", "CLECARPET v2")), EnsembleFormatError);
  EXPECT_THROW(load_ensemble(replaced("loop 0 0 0 -1 8 1 1 2 1", "loop 0 0 0 -1 8 1 1 3 1")), EnsembleFormatError);
  EXPECT_THROW(load_ensemble(replaced("loop 0 0 0 -1", "loop 1 0 0 -1")), EnsembleFormatError);
  EXPECT_THROW(load_ensemble(replaced("loop 0 0 0 -1", "loop 0 0 0 0")), EnsembleFormatError);
  EXPECT_THROW(load_ensemble(replaced("loop 0 0 0 -1", "loop 0 1 0 -1")), EnsembleFormatError);
  EXPECT_THROW(load_ensemble(replaced("end\n", "end\nextra\n")), EnsembleFormatError);
  // Clockwise orientation is not the canonical trace.
  EXPECT_THROW(load_ensemble(replaced("1 1 2 1 3 1 3 2 3 3 2 3 1 3 1 2", "1 1 1 2 1 3 2 3 3 3 3 2 3 1 2 1")),
               EnsembleFormatError);
}

TEST(Ensemble, RejectsParityViolation) {
  const NestedEnsemble e = ensemble_with_children();
  const CleLoop* child = nullptr;
  for (const CleLoop& l : e.loops)
    if (l.parent != kNoParent) child = &l;
  ASSERT_NE(child, nullptr);
  std::string text = save_ensemble(e);
  const std::string from = "loop " + std::to_string(child->id) + " " + std::to_string(child->depth) + " " +
                           std::to_string(child->parity) + " ";
  const std::string to = "loop " + std::to_string(child->id) + " " + std::to_string(child->depth) + " " +
                         std::to_string(1 - child->parity) + " ";
  const auto at = text.find(from);
  ASSERT_NE(at, std::string::npos);
  text.replace(at, from.size(), to);
  try {
    load_ensemble(text);
    ADD_FAILURE() << "parity violation accepted";
  } catch (const EnsembleFormatError& err) {
    EXPECT_GE(err.offset(), at);
    EXPECT_NE(std::string(err.what()).find("parity"), std::string::npos);
  }
}

TEST(Files, WriteReadAndErrors) {
  const auto path = std::filesystem::temp_directory_path() / "cle_io_test.bin";
  const std::string bytes("a\0b\n", 4);
  write_file(path.string(), bytes);
  EXPECT_EQ(read_file(path.string()), bytes);
  std::filesystem::remove(path);
  EXPECT_THROW(read_file(path.string()), std::runtime_error);
  EXPECT_THROW(write_file("/nonexistent-dir/x", "y"), std::runtime_error);
}

TEST(Manifest, JsonFields) {
  RunManifest m;
  m.subcommand = "carpet";
  m.config_hash = 1;
  m.seed = 2;
  m.params = kParams;
  m.timings = {{"sample", 0.5}};
  m.artifacts = {"loops.csv"};
  const auto j = m.to_json();
  EXPECT_EQ(j["tool_version"], "1.0.0");
  EXPECT_EQ(j["config_hash"], "0000000000000001");
  EXPECT_EQ(j["kappa"]["central_charge"], 0.5);
  EXPECT_EQ(j["timings_s"]["sample"], 0.5);
  EXPECT_EQ(j["artifacts"][0], "loops.csv");
}

}  // namespace
