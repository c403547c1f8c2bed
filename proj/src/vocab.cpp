#include "rger/vocab.hpp"

#include "rger/errors.hpp"

namespace rger::pipeline {

CharVocab CharVocab::standard() {
  CharVocab v;
  v.chars = "abcdefghijklmnopqrstuvwxyz0123456789 :|HYPOUT";
  return v;
}

int CharVocab::id(char c) const {
  const auto p = chars.find(c);
  return p == std::string::npos ? -1 : static_cast<int>(p);
}

std::vector<int> CharVocab::encode(const std::string& s) const {
  std::vector<int> out;
  out.reserve(s.size());
  for (char c : s) {
    const int i = id(c);
    if (i < 0)
      throw DataError(std::string("tokenizer: character '") + c + "' (0x" +
                      [&] {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "%02x", static_cast<unsigned char>(c));
                        return std::string(buf);
                      }() +
                      ") is not in the vocabulary");
    out.push_back(i);
  }
  return out;
}

std::string CharVocab::decode(const std::vector<int>& ids) const {
  std::string out;
  out.reserve(ids.size());
  for (int i : ids)
    if (i >= 0 && i < static_cast<int>(chars.size())) out.push_back(chars[i]);
  return out;
}

}  // namespace rger::pipeline
