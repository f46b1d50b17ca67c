#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "medverify/gateway.hpp"
#include "medverify/types.hpp"

namespace medv::corpus {

// Articles keyed by PMID. Immutable once loaded.
class ArticleStore {
 public:
  ArticleStore() = default;

  // Throws Error(Schema) on a duplicate pmid or an empty title.
  void add(Article article);

  const Article* find(Pmid pmid) const;
  bool contains(Pmid pmid) const { return find(pmid) != nullptr; }
  std::size_t count() const noexcept { return articles_.size(); }

  // Articles in ascending pmid order.
  std::vector<const Article*> sorted() const;

 private:
  std::unordered_map<Pmid, Article> articles_;
};

struct LoadResult {
  ArticleStore store;
  std::size_t skipped = 0;  // lines with an empty title or abstract
};

// Loads JSONL {pmid,title,abstract}. Lines whose title or abstract is empty
// are skipped and counted. Throws Io, Json or Schema (missing keys, duplicate pmid).
LoadResult load_articles(const std::filesystem::path& path);

// Dense vectors keyed by pmid, stored row-major with precomputed norms.
class EmbeddingIndex {
 public:
  explicit EmbeddingIndex(std::uint32_t dim);

  // Throws DimMismatch when the vector length differs from dim(), Schema on a duplicate pmid.
  void add(Pmid pmid, std::span<const float> vector);

  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return pmids_.size(); }
  Pmid pmid_at(std::size_t row) const { return pmids_[row]; }
  std::span<const float> row(std::size_t i) const;
  double norm_at(std::size_t i) const { return norms_[i]; }

  // Throws Schema naming the first pmid missing from the store.
  void validate_against(const ArticleStore& store) const;

 private:
  std::uint32_t dim_;
  std::vector<Pmid> pmids_;
  std::vector<float> data_;
  std::vector<double> norms_;
  std::unordered_map<Pmid, std::size_t> rows_;
};

// Binary embedding file: "MFEI", u32 dim, u64 count, then count records of
// u64 pmid followed by dim float32 values. All little-endian.
EmbeddingIndex read_mfei(const std::filesystem::path& path);
void write_mfei(const std::filesystem::path& path, const EmbeddingIndex& index);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::uint32_t dim() const = 0;
  // Throws EmptyText for blank input.
  virtual std::vector<float> embed(std::string_view text) const = 0;
};

// Hashed bag of words: lowercase alphanumeric tokens, bucket = fnv1a64(token) mod dim,
// counts L2-normalized. Pure and deterministic.
class FallbackEmbedder final : public Embedder {
 public:
  static constexpr std::uint32_t kDefaultDim = 256;
  explicit FallbackEmbedder(std::uint32_t dim = kDefaultDim);
  std::uint32_t dim() const override { return dim_; }
  std::vector<float> embed(std::string_view text) const override;

 private:
  std::uint32_t dim_;
};

// Lowercased runs of ASCII alphanumerics.
std::vector<std::string> tokenize(std::string_view text);

// POST {base_url}/embeddings with {"model","input"}; reads data[0].embedding.
// Throws Transport on network or protocol failure.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(gateway::HttpSettings settings, std::string model, std::uint32_t dim);
  std::uint32_t dim() const override { return dim_; }
  std::vector<float> embed(std::string_view text) const override;

 private:
  gateway::HttpSettings settings_;
  std::string model_;
  std::uint32_t dim_;
};

struct Hit {
  Pmid pmid = 0;
  double cosine = 0.0;
  friend bool operator==(const Hit&, const Hit&) = default;
};

// Cosine similarity in double precision; 0 when either vector is zero.
double cosine(std::span<const float> a, std::span<const float> b);

// Exact search: the min(k, size) best rows ordered by descending cosine,
// ties by ascending pmid. Throws InvalidArgument for k == 0 and DimMismatch
// when the query length differs from the index dimension.
std::vector<Hit> top_k(const EmbeddingIndex& index, std::span<const float> query, std::size_t k);

// Embeds "title abstract" for every article in the store.
EmbeddingIndex build_index(const ArticleStore& store, const Embedder& embedder);

}  // namespace medv::corpus
