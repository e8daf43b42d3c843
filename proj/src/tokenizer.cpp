#include "avs/tokenizer.hpp"

#include <cctype>

#include "avs/errors.hpp"
#include "avs/hash.hpp"

namespace avs {

namespace {

std::string clean_word(std::string_view raw) {
    std::size_t b = 0, e = raw.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(raw[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(raw[e - 1]))) --e;
    std::string out;
    out.reserve(e - b);
    for (std::size_t i = b; i < e; ++i) {
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i]))));
    }
    return out;
}

std::size_t option_slots(std::size_t vocab_size) {
    return vocab_size > tokens::kOptionA
               ? std::min(tokens::kMaxOptions, vocab_size - tokens::kOptionA)
               : 0;
}

}  // namespace

PromptTokens tokenize(std::string_view text, std::size_t vocab_size) {
    if (vocab_size < 4) throw ArgumentError("vocab_size must be >= 4");
    const std::size_t options = option_slots(vocab_size);
    const TokenId first_word =
        vocab_size > tokens::kFirstWord ? tokens::kFirstWord : tokens::kOptionA;

    PromptTokens out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j == i) break;
        const std::string word = clean_word(text.substr(i, j - i));
        i = j;
        if (word.empty()) continue;

        if (word == "yes") {
            out.ids.push_back(tokens::kYes);
        } else if (word == "no") {
            out.ids.push_back(tokens::kNo);
        } else if (word.size() == 1 && word[0] >= 'a' &&
                   static_cast<std::size_t>(word[0] - 'a') < options) {
            out.ids.push_back(tokens::kOptionA + static_cast<TokenId>(word[0] - 'a'));
        } else {
            const auto span = vocab_size - first_word;
            out.ids.push_back(first_word + static_cast<TokenId>(fnv1a64(word) % span));
        }
    }
    return out;
}

std::string detokenize(const std::vector<TokenId>& ids, std::size_t vocab_size) {
    const std::size_t options = option_slots(vocab_size);
    std::string out;
    for (TokenId id : ids) {
        if (id == tokens::kEos) break;
        if (!out.empty()) out.push_back(' ');
        if (id == tokens::kYes) {
            out += "yes";
        } else if (id == tokens::kNo) {
            out += "no";
        } else if (id >= tokens::kOptionA && id - tokens::kOptionA < options &&
                   vocab_size > tokens::kFirstWord) {
            out.push_back(static_cast<char>('A' + (id - tokens::kOptionA)));
        } else {
            out += "w" + std::to_string(id);
        }
    }
    return out;
}

}  // namespace avs
