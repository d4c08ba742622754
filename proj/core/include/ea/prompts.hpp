#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "ea/corpus.hpp"

namespace ea {

/// Generation prompt for one of the four variants. Placeholders are
/// substituted verbatim (no escaping). Throws ErrorKind::validation when an
/// Inst variant has no guidelines or a Text variant has no chapters.
std::string render_generation_prompt(PromptVariant variant, const Novel& novel,
                                     std::optional<std::string_view> guidelines);

/// Full novel text as sent to Text variants: chapters with trailing
/// whitespace trimmed, joined by blank lines.
std::string full_text(const Novel& novel);

/// Indexed summary block: one "<index>: <sentence>" line per sentence.
std::string format_indexed_sentences(const Summary& summary);

/// Ascending, comma separated, in brackets: {2,1} -> "[1, 2]".
std::string format_old_ids(const std::set<int>& old_ids);

/// Sentence-to-chapter alignment prompt. Throws ErrorKind::validation when
/// an old id is outside 1..|S|.
std::string render_alignment_prompt(const Summary& summary, std::string_view chapter_text,
                                    const std::set<int>& old_ids);
std::string render_alignment_prompt(const Summary& summary, const Chapter& chapter, const std::set<int>& old_ids);

}  // namespace ea
