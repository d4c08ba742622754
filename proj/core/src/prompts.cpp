#include "ea/prompts.hpp"

#include "ea/error.hpp"
#include "ea/text.hpp"

namespace ea {
namespace {

constexpr std::string_view kSummarizeStory =
    "Summarize the above story in as many paragraphs as needed. Respond with only the summary. "
    "Don't add any additional text.";

constexpr std::string_view kAlignHead =
    "You are an intelligent literary assistant. Your goal is to match summary sentences to a novel "
    "chapter using **only** the information provided below. Do not use any memorized information.\n"
    "\n"
    "SUMMARY SENTENCES:\n"
    "```\n";

constexpr std::string_view kAlignChapter =
    "\n```\n"
    "\n"
    "CHAPTER:\n"
    "```\n";

constexpr std::string_view kAlignTask =
    "\n```\n"
    "\n"
    "TASK:\n"
    "Determine whether each sentence in the summary describes an event or events that happen(s) during "
    "this chapter.\n"
    "\n"
    "Some sentences describe multiple related events. A sentence should be matched to each chapter that "
    "contains **at least one** event it describes.\n"
    "\n"
    "Double-check that the event in this chapter is the exact event described in the summary sentence "
    "before matching.\n"
    "\n"
    "Here are the summary sentence ids that have already been matched to previous chapters: ";

constexpr std::string_view kAlignTail =
    "\n"
    "\n"
    "**DO NOT** match sentences to chapters that only mention events which happened previously in the "
    "text. Think carefully about whether the event is *actually happening* before re-matching sentences.\n"
    "\n"
    "Remember to make matches based **only** on the summary and chapter provided.\n"
    "\n"
    "OUTPUT FORMAT:\n"
    "For **every** sentence, output whether it should be matched to this chapter (YES or NO).\n"
    "Return ONLY { \"1\": \"YES|NO\", \"2\": \"YES|NO\", ... }";

std::string summarize_plot(const Novel& novel) {
  std::string s = "Summarize the plot of \"";
  s += novel.title;
  s += "\" by ";
  s += novel.author;
  s += " in as many paragraphs as needed. Respond with only the summary. Don't add any additional text.";
  return s;
}

}  // namespace

std::string full_text(const Novel& novel) {
  std::string out;
  for (const auto& c : novel.chapters) {
    std::string_view t = c.text;
    while (!t.empty() && (t.back() == '\n' || t.back() == '\r' || t.back() == ' ' || t.back() == '\t')) {
      t.remove_suffix(1);
    }
    if (!out.empty()) out += "\n\n";
    out += t;
  }
  return out;
}

std::string render_generation_prompt(PromptVariant variant, const Novel& novel,
                                     std::optional<std::string_view> guidelines) {
  if (requires_guidelines(variant) && !guidelines) {
    throw Error(ErrorKind::validation,
                std::string("prompt variant ") + std::string(to_string(variant)) + " requires guidelines");
  }
  if (requires_full_text(variant) && novel.chapters.empty()) {
    throw Error(ErrorKind::validation,
                std::string("prompt variant ") + std::string(to_string(variant)) + " requires chapter text");
  }
  std::string out;
  switch (variant) {
    case PromptVariant::text:
      out = "{\"text\": \"" + full_text(novel) + "\"}\n\n";
      out += kSummarizeStory;
      break;
    case PromptVariant::text_inst:
      out = "{\"text\": \"" + full_text(novel) + "\", \"guidelines\": \"" + std::string(*guidelines) + "\"}\n\n";
      out += kSummarizeStory;
      break;
    case PromptVariant::title:
      out = summarize_plot(novel);
      break;
    case PromptVariant::title_inst:
      out = "{\"guidelines\": \"" + std::string(*guidelines) + "\"}\n\n" + summarize_plot(novel);
      break;
  }
  return out;
}

std::string format_indexed_sentences(const Summary& summary) {
  std::string out;
  for (const auto& s : summary.sentences) {
    if (!out.empty()) out += '\n';
    out += std::to_string(s.index);
    out += ": ";
    out += s.text;
  }
  return out;
}

std::string format_old_ids(const std::set<int>& old_ids) {
  std::string out = "[";
  for (int id : old_ids) {
    if (out.size() > 1) out += ", ";
    out += std::to_string(id);
  }
  return out + "]";
}

std::string render_alignment_prompt(const Summary& summary, std::string_view chapter_text,
                                    const std::set<int>& old_ids) {
  for (int id : old_ids) {
    if (id < 1 || id > summary.n_sentences()) {
      throw Error(ErrorKind::validation, "old id " + std::to_string(id) + " outside 1.." +
                                             std::to_string(summary.n_sentences()));
    }
  }
  std::string out;
  out.reserve(chapter_text.size() + 4096);
  out += kAlignHead;
  out += format_indexed_sentences(summary);
  out += kAlignChapter;
  out += trim(chapter_text);
  out += kAlignTask;
  out += format_old_ids(old_ids);
  out += kAlignTail;
  return out;
}

std::string render_alignment_prompt(const Summary& summary, const Chapter& chapter, const std::set<int>& old_ids) {
  return render_alignment_prompt(summary, std::string_view(chapter.text), old_ids);
}

}  // namespace ea
