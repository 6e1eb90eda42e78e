#include <gtest/gtest.h>

#include <filesystem>

#include "lypiz/io.hpp"

using namespace lypiz;
using nlohmann::json;

namespace {

std::string temp_path(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

}  // namespace

TEST(GraphJson, SingleEdgeExample) {
  const json j = json::parse(R"({"vertices":["x","y"],"edges":[["x","y"]],"J":{"x|y":1.0},"lambda":{"x":1,"y":1}})");
  const auto g = io::graph_from_json(j);
  EXPECT_EQ(g.num_vertices(), 2u);
  EXPECT_EQ(g.num_edges(), 1u);
  EXPECT_EQ(g.edges()[0].coupling, 1.0);
  EXPECT_EQ(g.weight(0), 1.0);
}

TEST(GraphJson, DefaultsAndRejections) {
  const auto g = io::graph_from_json(json::parse(R"({"vertices":["a","b","c"],"edges":[["a","b"],["b","c"]],
                                                      "J":{"b|c":0.5},"lambda":{"a":2}})"));
  EXPECT_EQ(g.edges()[0].coupling, 1.0);
  EXPECT_EQ(g.edges()[1].coupling, 0.5);
  EXPECT_EQ(g.weight(1), 0.0);
  EXPECT_THROW(io::graph_from_json(json::parse(R"({"vertices":["a"]})")), InvalidArgument);
  EXPECT_THROW(io::graph_from_json(json::parse(R"({"vertices":["a"],"edges":[],"lambda":{"q":1}})")), InvalidArgument);
  EXPECT_THROW(io::graph_from_json(json::parse(R"({"vertices":["a","b"],"edges":[["a"]]})")), InvalidArgument);
}

TEST(GraphJson, RoundTrip) {
  const auto g = build_graph({"a", "b", "c"}, {{"a", "b"}, {"c", "a"}}, {0.25, 3.0}, {1.0, 0.5, 0.0});
  const auto h = io::graph_from_json(json::parse(io::graph_to_json(g).dump()));
  EXPECT_EQ(io::graph_to_json(h), io::graph_to_json(g));
}

TEST(ModelJson, RoundTripAndUnknownModel) {
  ModelSpec m{ModelKind::Villain, build_graph({"x", "y"}, {{"x", "y"}}, {2.0}, {1.0, 0.5}), 1.7, {{"x", 0.25}}};
  const auto back = io::model_spec_from_json(io::model_spec_to_json(m));
  EXPECT_EQ(back.kind, ModelKind::Villain);
  EXPECT_EQ(back.inverse_temperature, 1.7);
  EXPECT_EQ(back.pinned.at("x"), 0.25);
  EXPECT_THROW(io::model_kind_from_string("ising"), InvalidArgument);
}

TEST(DistributionIo, JsonAndCsvRoundTripsAreExact) {
  const auto d = DiscretizedDistribution::from_atoms({{-0.1, 1.0 / 3.0}, {0.7, 2.0 / 3.0}});
  const auto a = io::distribution_from_json(json::parse(io::distribution_to_json(d).dump()));
  const auto b = io::distribution_from_csv(io::distribution_to_csv(d));
  ASSERT_EQ(a.size(), d.size());
  ASSERT_EQ(b.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(a.atoms()[i].x, d.atoms()[i].x);
    EXPECT_EQ(a.atoms()[i].w, d.atoms()[i].w);
    EXPECT_EQ(b.atoms()[i].x, d.atoms()[i].x);
    EXPECT_EQ(b.atoms()[i].w, d.atoms()[i].w);
  }
}

TEST(DistributionIo, AcceptsEnvelopeAndObjectAtoms) {
  const json j = io::envelope("distribution", json::object(),
                              json::parse(R"({"atoms":[{"x":-1,"w":0.5},{"x":1,"w":0.5}]})"));
  EXPECT_EQ(j.at("format_version"), io::kFormatVersion);
  const auto d = io::distribution_from_json(j);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_THROW(io::distribution_from_json(json::parse(R"({"atoms":[1]})")), InvalidArgument);
  EXPECT_THROW(io::distribution_from_csv("x,w\n1;2\n"), InvalidArgument);
}

TEST(DistributionIo, LoadByExtension) {
  const auto d = rademacher();
  const auto csv = temp_path("lypiz_io_test.csv");
  const auto js = temp_path("lypiz_io_test.json");
  io::write_text_file(csv, io::distribution_to_csv(d));
  io::write_text_file(js, io::distribution_to_json(d).dump());
  EXPECT_EQ(io::load_distribution(csv).size(), 2u);
  EXPECT_EQ(io::load_distribution(js).size(), 2u);
  std::filesystem::remove(csv);
  std::filesystem::remove(js);
  EXPECT_THROW(io::load_distribution(temp_path("lypiz_missing.csv")), InvalidArgument);
}

TEST(ZeroReportIo, CarriesVerdictAndZeros) {
  const auto rep = locate_zeros(EntireMGF(rademacher()), Rect{-1, 1, 0, 5});
  const json j = io::zero_report_to_json(rep);
  EXPECT_EQ(j.at("verdict"), "PIZ-in-region");
  EXPECT_EQ(j.at("zeros").size(), 2u);
  const Rect r = io::rect_from_json(j.at("requested_region"));
  EXPECT_EQ(r.im_max, 5.0);
  const std::string csv = io::zero_report_to_csv(rep);
  EXPECT_NE(csv.find("verdict=PIZ-in-region"), std::string::npos);
}
