#pragma once

#include <string>
#include <vector>

namespace rger::text {

// Whitespace split of an already-clean string.
std::vector<std::string> split_ws(const std::string& s);

// Canonical tokenization for scoring and alignment: lowercase, punctuation
// stripped (apostrophes kept inside words), whitespace split.
std::vector<std::string> tokenize(const std::string& s);

std::string join(const std::vector<std::string>& tokens);

}  // namespace rger::text
