#include "ea/text.hpp"

#include <cstdint>

namespace ea {
namespace {

struct Decoded {
  char32_t cp;
  std::size_t len;
};

// Lenient UTF-8 decoding: an invalid lead byte decodes as itself with length 1.
Decoded decode(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if ((b0 & 0xE0) == 0xC0) {
    int c1 = cont(1);
    if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
  } else if ((b0 & 0xF8) == 0xF0) {
    int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0)
      return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
  }
  return {b0, 1};
}

bool is_word_cp(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  }
  if (cp < 0xC0) return false;  // C1 controls and Latin-1 punctuation/symbols
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows, dingbats
  if (cp >= 0x2E00 && cp <= 0x2E7F) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp == 0xFEFF || (cp >= 0xFE30 && cp <= 0xFE4F) || (cp >= 0xFF00 && cp <= 0xFF0F)) return false;
  if (cp >= 0x1F000) return false;  // emoji and pictographs
  return true;
}

bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == U'’'; }

bool is_letter_cp(char32_t cp) {
  return is_word_cp(cp) && !(cp >= '0' && cp <= '9');
}

}  // namespace

std::vector<std::string_view> tokenize(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  std::size_t start = std::string_view::npos;
  char32_t prev = 0;
  while (i < text.size()) {
    auto [cp, len] = decode(text, i);
    bool in_word = is_word_cp(cp);
    if (!in_word && start != std::string_view::npos && is_apostrophe(cp) && is_letter_cp(prev) &&
        i + len < text.size() && is_letter_cp(decode(text, i + len).cp)) {
      in_word = true;
    }
    if (in_word) {
      if (start == std::string_view::npos) start = i;
    } else if (start != std::string_view::npos) {
      out.push_back(text.substr(start, i - start));
      start = std::string_view::npos;
    }
    prev = cp;
    i += len;
  }
  if (start != std::string_view::npos) out.push_back(text.substr(start));
  return out;
}

std::size_t count_tokens(std::string_view text) { return tokenize(text).size(); }

std::vector<std::string> lowercase_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto tok : tokenize(text)) {
    std::string t(tok);
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto c = static_cast<unsigned char>(t[i]);
      if (c >= 'A' && c <= 'Z') {
        t[i] = static_cast<char>(c + 32);
      } else if (c == 0xC3 && i + 1 < t.size()) {
        // U+00C0..U+00DE (except U+00D7) map to U+00E0..U+00FE.
        auto c1 = static_cast<unsigned char>(t[i + 1]);
        if (c1 >= 0x80 && c1 <= 0x9E && c1 != 0x97) t[i + 1] = static_cast<char>(c1 + 0x20);
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::string normalize_punctuation(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    auto [cp, len] = decode(text, i);
    switch (cp) {
      case U'‘':
      case U'’':
      case U'‚':
      case U'′':
        out += '\'';
        break;
      case U'“':
      case U'”':
      case U'„':
      case U'″':
        out += '"';
        break;
      case U'–':
      case U'—':
      case U'―':
        out += "--";
        break;
      default:
        out.append(text.substr(i, len));
    }
    i += len;
  }
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += c;
    }
  }
  return out;
}

std::string trim(std::string_view text) {
  const char* ws = " \t\r\n\f\v";
  auto b = text.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = text.find_last_not_of(ws);
  return std::string(text.substr(b, e - b + 1));
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  return out;
}

}  // namespace ea
