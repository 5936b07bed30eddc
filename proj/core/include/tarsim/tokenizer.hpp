#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace tarsim {

struct TokenizerConfig {
  bool lowercase = true;
  /// Tokens with more code points than this are dropped.
  std::size_t max_token_length = 64;
};

/// Splits UTF-8 text on every non-alphanumeric code point. Alphanumeric and
/// lowercase mapping follow the C.UTF-8 locale tables; malformed bytes act
/// as separators. No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config = {});

}  // namespace tarsim
