#include "medverify/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <queue>

#include <httplib.h>

#include "medverify/error.hpp"
#include "medverify/hash.hpp"
#include "medverify/http_util.hpp"
#include "medverify/json_io.hpp"
#include "medverify/verdict.hpp"

namespace medv::corpus {

void ArticleStore::add(Article article) {
  if (article.pmid <= 0) throw Error(ErrorCode::Schema, "pmid must be positive", std::to_string(article.pmid));
  if (article.title.empty()) throw Error(ErrorCode::Schema, "article has an empty title", std::to_string(article.pmid));
  const Pmid pmid = article.pmid;
  if (!articles_.emplace(pmid, std::move(article)).second) {
    throw Error(ErrorCode::Schema, "duplicate pmid " + std::to_string(pmid), std::to_string(pmid));
  }
}

const Article* ArticleStore::find(Pmid pmid) const {
  auto it = articles_.find(pmid);
  return it == articles_.end() ? nullptr : &it->second;
}

std::vector<const Article*> ArticleStore::sorted() const {
  std::vector<const Article*> out;
  out.reserve(articles_.size());
  for (const auto& [_, a] : articles_) out.push_back(&a);
  std::sort(out.begin(), out.end(), [](const Article* a, const Article* b) { return a->pmid < b->pmid; });
  return out;
}

LoadResult load_articles(const std::filesystem::path& path) {
  const JsonlFile file = read_jsonl(path);
  LoadResult result;
  for (const json& rec : file.records) {
    Article a = rec.get<Article>();
    if (trim(a.title).empty() || trim(a.abstract).empty()) {
      ++result.skipped;
      continue;
    }
    result.store.add(std::move(a));
  }
  return result;
}

// ---------------------------------------------------------------------------

EmbeddingIndex::EmbeddingIndex(std::uint32_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
}

void EmbeddingIndex::add(Pmid pmid, std::span<const float> vector) {
  if (vector.size() != dim_) {
    throw Error(ErrorCode::DimMismatch,
                "vector has " + std::to_string(vector.size()) + " values, index dim is " + std::to_string(dim_),
                std::to_string(pmid));
  }
  if (!rows_.emplace(pmid, pmids_.size()).second) {
    throw Error(ErrorCode::Schema, "duplicate pmid in embedding index", std::to_string(pmid));
  }
  pmids_.push_back(pmid);
  data_.insert(data_.end(), vector.begin(), vector.end());
  double sq = 0.0;
  for (float v : vector) sq += static_cast<double>(v) * v;
  norms_.push_back(std::sqrt(sq));
}

std::span<const float> EmbeddingIndex::row(std::size_t i) const {
  return std::span<const float>(data_).subspan(i * dim_, dim_);
}

void EmbeddingIndex::validate_against(const ArticleStore& store) const {
  for (Pmid p : pmids_) {
    if (!store.contains(p)) {
      throw Error(ErrorCode::Schema, "embedding pmid " + std::to_string(p) + " is not in the article store",
                  std::to_string(p));
    }
  }
}

namespace {

constexpr char kMagic[4] = {'M', 'F', 'E', 'I'};

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = std::bit_cast<U>(value);
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof buf);
}

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof buf)) {
    throw Error(ErrorCode::Schema, "truncated embedding file", path.string());
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

EmbeddingIndex read_mfei(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open embedding file", path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorCode::Schema, "missing MFEI magic", path.string());
  }
  const auto dim = get_le<std::uint32_t>(in, path);
  const auto count = get_le<std::uint64_t>(in, path);
  EmbeddingIndex index(dim);
  std::vector<float> row(dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto pmid = static_cast<Pmid>(get_le<std::uint64_t>(in, path));
    for (auto& v : row) v = get_le<float>(in, path);
    index.add(pmid, row);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::Schema, "trailing bytes after the last record", path.string());
  }
  return index;
}

void write_mfei(const std::filesystem::path& path, const EmbeddingIndex& index) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open embedding file for writing", path.string());
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, index.dim());
  put_le<std::uint64_t>(out, index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(index.pmid_at(i)));
    for (float v : index.row(i)) put_le<float>(out, v);
  }
  if (!out) throw Error(ErrorCode::Io, "write failed", path.string());
}

// ---------------------------------------------------------------------------

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

FallbackEmbedder::FallbackEmbedder(std::uint32_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
}

std::vector<float> FallbackEmbedder::embed(std::string_view text) const {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw Error(ErrorCode::EmptyText, "no tokens to embed");
  std::vector<double> counts(dim_, 0.0);
  for (const auto& t : tokens) counts[fnv1a64(t) % dim_] += 1.0;
  double sq = 0.0;
  for (double c : counts) sq += c * c;
  const double norm = std::sqrt(sq);
  std::vector<float> out(dim_);
  for (std::uint32_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(counts[i] / norm);
  return out;
}

RemoteEmbedder::RemoteEmbedder(gateway::HttpSettings settings, std::string model, std::uint32_t dim)
    : settings_(std::move(settings)), model_(std::move(model)), dim_(dim) {
  split_base_url(settings_.base_url);
}

std::vector<float> RemoteEmbedder::embed(std::string_view text) const {
  if (trim(text).empty()) throw Error(ErrorCode::EmptyText, "no text to embed");
  const SplitUrl url = split_base_url(settings_.base_url);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(settings_.timeout).count();
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  httplib::Headers headers;
  if (!settings_.api_key.empty()) headers.emplace("Authorization", "Bearer " + settings_.api_key);
  const json body{{"model", model_}, {"input", std::string(text)}};
  auto res = client.Post(url.path_prefix + "/embeddings", headers, dump_line(body), "application/json");
  if (!res) throw Error(ErrorCode::Transport, "embedding request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::Transport, "embedding service returned HTTP " + std::to_string(res->status));
  }
  const json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("data") || !parsed["data"].is_array() || parsed["data"].empty() ||
      !parsed["data"][0].contains("embedding")) {
    throw Error(ErrorCode::Transport, "embedding response lacks data[0].embedding");
  }
  std::vector<float> out = parsed["data"][0]["embedding"].get<std::vector<float>>();
  if (out.size() != dim_) {
    throw Error(ErrorCode::DimMismatch,
                "remote embedding has " + std::to_string(out.size()) + " values, expected " + std::to_string(dim_));
  }
  return out;
}

// ---------------------------------------------------------------------------

double cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Hit> top_k(const EmbeddingIndex& index, std::span<const float> query, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (query.size() != index.dim()) {
    throw Error(ErrorCode::DimMismatch, "query has " + std::to_string(query.size()) +
                                            " values, index dim is " + std::to_string(index.dim()));
  }
  double qsq = 0.0;
  for (float v : query) qsq += static_cast<double>(v) * v;
  const double qnorm = std::sqrt(qsq);

  // Ranking order: higher cosine first, then lower pmid.
  const auto better = [](const Hit& a, const Hit& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.pmid < b.pmid;
  };
  // Heap with the worst retained hit on top.
  std::priority_queue<Hit, std::vector<Hit>, decltype(better)> heap(better);
  const std::size_t keep = std::min(k, index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto row = index.row(i);
    double dot = 0.0;
    for (std::size_t d = 0; d < row.size(); ++d) dot += static_cast<double>(query[d]) * row[d];
    const double denom = qnorm * index.norm_at(i);
    const Hit hit{index.pmid_at(i), denom == 0.0 ? 0.0 : dot / denom};
    if (heap.size() < keep) {
      heap.push(hit);
    } else if (better(hit, heap.top())) {
      heap.pop();
      heap.push(hit);
    }
  }
  std::vector<Hit> out;
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

EmbeddingIndex build_index(const ArticleStore& store, const Embedder& embedder) {
  EmbeddingIndex index(embedder.dim());
  for (const Article* a : store.sorted()) {
    index.add(a->pmid, embedder.embed(a->title + " " + a->abstract));
  }
  return index;
}

}  // namespace medv::corpus
