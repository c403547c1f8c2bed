#include "rger/embedder.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rger/alignment.hpp"
#include "rger/errors.hpp"
#include "rger/rng.hpp"

namespace rger {

std::vector<double> TextEmbedder::embed(const std::string& text) const {
  if (text.empty() || text == alignment::kPad)
    return std::vector<double>(static_cast<std::size_t>(dimension()), 0.0);
  return embed_impl(text);
}

HashNGramEmbedder::HashNGramEmbedder(int dimension, std::uint64_t seed)
    : dim_(dimension), seed_(seed) {
  if (dimension <= 0) throw ContractError("embedder: dimension must be positive");
}

std::vector<double> HashNGramEmbedder::embed_impl(const std::string& text) const {
  std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
  const std::size_t len = text.size();
  for (int order = 1; order <= 3; ++order) {
    if (len < static_cast<std::size_t>(order)) break;
    for (std::size_t i = 0; i + order <= len; ++i) {
      const std::uint64_t h =
          mix64(fnv1a(std::string_view(text.data() + i, order), seed_ + order));
      const std::size_t idx = h % static_cast<std::uint64_t>(dim_);
      const double sign = (h >> 63) ? -1.0 : 1.0;
      v[idx] += sign;
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

TableEmbedder::TableEmbedder(const std::string& path) : path_(path) {
  std::ifstream in(path);
  if (!in) throw DataError("embedding table: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("embedding table: no tab separator at " + path + ":" + std::to_string(lineno));
    const std::string key = line.substr(0, tab);
    std::istringstream vals(line.substr(tab + 1));
    std::vector<double> vec;
    double x;
    while (vals >> x) vec.push_back(x);
    if (vec.empty())
      throw DataError("embedding table: no values at " + path + ":" + std::to_string(lineno));
    if (dim_ == 0)
      dim_ = static_cast<int>(vec.size());
    else if (static_cast<int>(vec.size()) != dim_)
      throw DataError("embedding table: inconsistent dimension at " + path + ":" +
                      std::to_string(lineno));
    table_[key] = std::move(vec);
  }
  if (table_.empty()) throw DataError("embedding table: " + path + " is empty");
}

std::vector<double> TableEmbedder::embed_impl(const std::string& text) const {
  const auto it = table_.find(text);
  if (it == table_.end())
    throw DataError("embedding table: no entry for \"" + text + "\" in " + path_);
  return it->second;
}

}  // namespace rger
