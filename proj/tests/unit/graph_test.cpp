#include "doctest.h"
#include "ea/error.hpp"
#include "ea/graph.hpp"
#include "ea/io.hpp"
#include "support.hpp"

using ea::test::TempDir;

TEST_CASE("graph JSON round trip keeps edges and diagnostics") {
  ea::AlignmentGraph g("s1", "n1", 3, 4, ea::AlignMethod::llm);
  g.add_edge(3, 1);
  g.add_edge(1, 4);
  g.add_edge(1, 2);
  ea::ChapterDiagnostic d;
  d.chapter = 2;
  d.old_ids = {1};
  d.attempts = 2;
  d.message = "retry";
  g.diagnostics.push_back(d);

  const auto text = ea::graph_to_json(g);
  const auto back = ea::graph_from_json(text);
  CHECK(back.edges() == g.edges());
  CHECK(back.n_sentences() == 3);
  CHECK(back.n_chapters() == 4);
  CHECK(back.method() == ea::AlignMethod::llm);
  REQUIRE(back.diagnostics.size() == 1);
  CHECK(back.diagnostics[0].old_ids == std::vector<int>{1});
  CHECK(back.diagnostics[0].attempts == 2);
  CHECK(ea::graph_to_json(back) == text);
  CHECK(nlohmann::json::parse(text).at("edges") == nlohmann::json::parse("[[1,2],[1,4],[3,1]]"));
}

TEST_CASE("out of range edges are rejected") {
  ea::AlignmentGraph g("s", "n", 2, 2, ea::AlignMethod::tfidf);
  CHECK_THROWS_AS(g.add_edge(3, 1), ea::Error);
  CHECK_THROWS_AS(g.add_edge(1, 0), ea::Error);
  CHECK_THROWS_AS(ea::graph_from_json(R"({"summary_id":"s","novel_id":"n","n_sentences":1,"n_chapters":1,
      "method":"llm","edges":[[1,2]]})"),
                  ea::Error);
  CHECK_THROWS_AS(ea::graph_from_json(R"({"summary_id":"s","novel_id":"n","n_sentences":1,"n_chapters":1,
      "method":"psychic","edges":[]})"),
                  ea::Error);
}

TEST_CASE("degrees") {
  const auto g = ea::test::make_graph(2, 3, {{1, 1}, {1, 2}, {2, 2}});
  CHECK(g.sentence_degrees() == std::vector<int>{0, 2, 1});
  CHECK(g.chapter_degrees() == std::vector<int>{0, 1, 2, 0});
}

TEST_CASE("gold files") {
  TempDir tmp;
  const ea::GoldAlignment a{"n", "s", "a", 2, 3, {{1, 1}, {2, 3}}};
  ea::write_text_file(tmp / "s.a.json", ea::gold_to_json(a));
  const auto back = ea::load_gold(tmp / "s.a.json");
  CHECK(back.edges == a.edges);
  CHECK(back.annotator == "a");
  CHECK(ea::as_graph(back).method() == ea::AlignMethod::gold);

  ea::write_text_file(tmp / "dup.json",
                      R"({"summary_id":"s","novel_id":"n","n_sentences":2,"n_chapters":2,"edges":[[1,1],[1,1]]})");
  CHECK_THROWS_AS(ea::load_gold(tmp / "dup.json"), ea::Error);
  ea::write_text_file(tmp / "llm.json",
                      R"({"summary_id":"s","novel_id":"n","n_sentences":2,"n_chapters":2,"method":"llm","edges":[]})");
  CHECK_THROWS_AS(ea::load_gold(tmp / "llm.json"), ea::Error);
  ea::write_text_file(tmp / "short.json", R"({"summary_id":"s","edges":[]})");
  CHECK_THROWS_AS(ea::load_gold(tmp / "short.json"), ea::Error);
}
