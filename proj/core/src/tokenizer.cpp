#include "tarsim/tokenizer.hpp"

#include <clocale>
#include <cwctype>
#include <locale.h>

namespace tarsim {
namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one UTF-8 sequence at text[pos], advancing pos. Returns kInvalid
// for malformed or overlong input (one byte consumed).
char32_t decode_utf8(std::string_view text, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  std::size_t extra = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++pos;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    ++pos;
    return kInvalid;
  }
  if (pos + extra >= text.size()) {
    ++pos;
    return kInvalid;
  }
  for (std::size_t i = 1; i <= extra; ++i) {
    const auto c = static_cast<unsigned char>(text[pos + i]);
    if ((c & 0xC0) != 0x80) {
      ++pos;
      return kInvalid;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  static constexpr char32_t kMin[] = {0, 0x80, 0x800, 0x10000};
  if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return kInvalid;
  }
  pos += extra + 1;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Character tables come from a dedicated C.UTF-8 locale object so the
// result never depends on the process-global locale.
class CharClassifier {
 public:
  CharClassifier() : locale_(newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr))) {}
  ~CharClassifier() {
    if (locale_ != static_cast<locale_t>(nullptr)) freelocale(locale_);
  }
  CharClassifier(const CharClassifier&) = delete;
  CharClassifier& operator=(const CharClassifier&) = delete;

  bool is_alnum(char32_t cp) const {
    if (cp < 0x80) {
      return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    if (locale_ == static_cast<locale_t>(nullptr)) return true;
    return iswalnum_l(static_cast<wint_t>(cp), locale_) != 0;
  }

  char32_t to_lower(char32_t cp) const {
    if (cp < 0x80) {
      return (cp >= 'A' && cp <= 'Z') ? cp + ('a' - 'A') : cp;
    }
    if (locale_ == static_cast<locale_t>(nullptr)) return cp;
    return static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), locale_));
  }

 private:
  locale_t locale_;
};

const CharClassifier& classifier() {
  static const CharClassifier instance;
  return instance;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config) {
  const auto& chars = classifier();
  std::vector<std::string> tokens;
  std::string current;
  std::size_t current_len = 0;

  auto flush = [&] {
    if (current_len > 0 && current_len <= config.max_token_length) {
      tokens.push_back(std::move(current));
    }
    current.clear();
    current_len = 0;
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = decode_utf8(text, pos);
    if (cp == kInvalid || !chars.is_alnum(cp)) {
      flush();
      continue;
    }
    append_utf8(current, config.lowercase ? chars.to_lower(cp) : cp);
    ++current_len;
  }
  flush();
  return tokens;
}

}  // namespace tarsim
