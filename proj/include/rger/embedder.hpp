#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace rger {

// Deterministic text-to-vector map. PAD and the empty string embed to the
// zero vector for every implementation.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual int dimension() const = 0;

  std::vector<double> embed(const std::string& text) const;

 protected:
  virtual std::vector<double> embed_impl(const std::string& text) const = 0;
};

// Default embedder: seeded character n-gram feature hashing (orders 1..3),
// unit L2 norm for nonempty text. Desk-scale stand-in for a sentence encoder.
class HashNGramEmbedder : public TextEmbedder {
 public:
  explicit HashNGramEmbedder(int dimension = 384, std::uint64_t seed = 0x9e3779b9u);
  int dimension() const override { return dim_; }

 protected:
  std::vector<double> embed_impl(const std::string& text) const override;

 private:
  int dim_;
  std::uint64_t seed_;
};

// Exact-match lookup into a precomputed embedding table loaded from a
// tab-separated file: `text<TAB>v1 v2 ... vD` per line. Missing entries are
// an error (DataError).
class TableEmbedder : public TextEmbedder {
 public:
  explicit TableEmbedder(const std::string& path);
  int dimension() const override { return dim_; }

 protected:
  std::vector<double> embed_impl(const std::string& text) const override;

 private:
  int dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> table_;
  std::string path_;
};

}  // namespace rger
