#include "doctest.h"
#include "ea/error.hpp"
#include "ea/io.hpp"
#include "ea/prompts.hpp"
#include "support.hpp"

using ea::PromptVariant;

namespace {

std::string golden(const std::string& name) { return ea::read_text_file(ea::test::kGoldenDir / "prompts" / name); }

ea::Novel kim() { return ea::test::make_novel("kim", {"abc"}, "Kim", "Rudyard Kipling"); }

}  // namespace

TEST_CASE("generation prompts match the transcribed templates") {
  const auto novel = kim();
  const std::pair<PromptVariant, const char*> cases[] = {
      {PromptVariant::text, "generation_text.txt"},
      {PromptVariant::text_inst, "generation_text_inst.txt"},
      {PromptVariant::title, "generation_title.txt"},
      {PromptVariant::title_inst, "generation_title_inst.txt"},
  };
  for (const auto& [variant, file] : cases) {
    CAPTURE(file);
    const auto rendered = ea::render_generation_prompt(variant, novel, std::string_view("G"));
    CHECK(ea::sha256_hex(rendered) == ea::sha256_hex(golden(file)));
  }
}

TEST_CASE("alignment prompt matches the transcribed template") {
  const auto s = ea::test::make_summary("s", "kim", {"It rained.", "She left."});
  const auto rendered = ea::render_alignment_prompt(s, std::string_view("X"), {1});
  CHECK(ea::sha256_hex(rendered) == ea::sha256_hex(golden("alignment.txt")));
  CHECK(rendered.find("**DO NOT** match") != std::string::npos);
}

TEST_CASE("title prompt example") {
  CHECK(ea::render_generation_prompt(PromptVariant::title, kim(), std::nullopt) ==
        "Summarize the plot of \"Kim\" by Rudyard Kipling in as many paragraphs as needed. Respond with only the "
        "summary. Don't add any additional text.");
}

TEST_CASE("text prompt starts with the JSON-wrapped novel") {
  const auto p = ea::render_generation_prompt(PromptVariant::text, kim(), std::nullopt);
  CHECK(p.rfind("{\"text\": \"abc\"}\n\nSummarize the above story", 0) == 0);
}

TEST_CASE("inst variants require guidelines") {
  CHECK_THROWS_AS(ea::render_generation_prompt(PromptVariant::text_inst, kim(), std::nullopt), ea::Error);
  CHECK_THROWS_AS(ea::render_generation_prompt(PromptVariant::title_inst, kim(), std::nullopt), ea::Error);
  CHECK_THROWS_AS(ea::render_generation_prompt(PromptVariant::text, ea::test::make_novel("e", {}), std::nullopt),
                  ea::Error);
}

TEST_CASE("alignment prompt history") {
  const auto s = ea::test::make_summary("s", "kim", {"It rained.", "She left."});
  const auto empty = ea::render_alignment_prompt(s, std::string_view("X"), {});
  CHECK(empty.find("1: It rained.\n2: She left.") != std::string::npos);
  CHECK(empty.find("previous chapters: []") != std::string::npos);

  const auto both = ea::render_alignment_prompt(s, std::string_view("X"), {2, 1});
  CHECK(both.find("previous chapters: [1, 2]") != std::string::npos);
  CHECK(ea::format_old_ids({2, 1}) == "[1, 2]");

  CHECK_THROWS_AS(ea::render_alignment_prompt(s, std::string_view("X"), {3}), ea::Error);
}

TEST_CASE("full_text trims chapters and joins with a blank line") {
  const auto n = ea::test::make_novel("n", {"one\n\n", "two \n"});
  CHECK(ea::full_text(n) == "one\n\ntwo");
}
