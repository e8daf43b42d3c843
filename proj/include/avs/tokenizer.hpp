#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "avs/model.hpp"

namespace avs {

/// Whitespace word tokenizer over the tiny model's vocabulary.
///
/// Words are lowercased and stripped of surrounding punctuation. "yes" and
/// "no" map to their reserved ids, single letters a-e to the option ids, and
/// every other word is hashed into the remaining id range.
PromptTokens tokenize(std::string_view text, std::size_t vocab_size);

/// Inverse for reserved ids; other ids render as "w<id>". Stops at EOS.
std::string detokenize(const std::vector<TokenId>& ids, std::size_t vocab_size);

}  // namespace avs
