#pragma once

#include <string>
#include <vector>

namespace rger::pipeline {

// Character-level vocabulary. Ids index into `chars`; end-of-sequence and
// pad are reserved entries after the characters.
struct CharVocab {
  std::string chars;

  static CharVocab standard();

  int size() const { return static_cast<int>(chars.size()) + 2; }
  int eos_id() const { return static_cast<int>(chars.size()); }
  int pad_id() const { return static_cast<int>(chars.size()) + 1; }

  // -1 when the character is not in the vocabulary
  int id(char c) const;
  // DataError naming the offending character
  std::vector<int> encode(const std::string& s) const;
  // reserved ids decode to nothing
  std::string decode(const std::vector<int>& ids) const;
};

}  // namespace rger::pipeline
