#pragma once

// Embedding vectors and providers.
//
// Embeddings come from an external service behind the EmbedBackend
// interface; mock_embed is the offline stand-in (seeded feature hashing
// of character trigrams) used throughout the tests.  It is deterministic
// across platforms and "semantic enough": texts sharing many trigrams get
// correlated vectors, unrelated texts get near-orthogonal ones.

#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "synthweave/common.hpp"
#include "synthweave/corpus.hpp"
#include "synthweave/text.hpp"

namespace synthweave {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }

  double dot(const EmbeddingVector& o) const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * o.values[i];
    return s;
  }
};

inline EmbeddingVector mock_embed(std::string_view text, std::size_t dim,
                                  std::uint64_t seed) {
  if (dim == 0) throw ArgumentError("mock_embed: dim must be >= 1");
  std::string norm = normalize_text(text);

  EmbeddingVector v;
  v.values.assign(dim, 0.0);
  auto add_feature = [&](std::string_view feat) {
    std::uint64_t h = hash64(feat, seed);
    std::size_t idx = static_cast<std::size_t>(h % dim);
    double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
    v.values[idx] += sign;
  };

  if (norm.size() >= 3) {
    for (std::size_t i = 0; i + 3 <= norm.size(); ++i)
      add_feature(std::string_view(norm).substr(i, 3));
  } else if (!norm.empty()) {
    add_feature(norm);
  } else {
    add_feature("\x01<empty>");  // empty text still yields a unit vector
  }

  double sq = 0.0;
  for (double x : v.values) sq += x * x;
  double inv = 1.0 / std::sqrt(sq);
  for (double& x : v.values) x *= inv;
  return v;
}

// ------------------------------------------------------------- backends

class EmbedBackend {
 public:
  virtual ~EmbedBackend() = default;
  // Embeds one sub-batch; must return one vector per text, in order.
  virtual std::vector<EmbeddingVector> embed(
      const std::vector<std::string>& texts) = 0;
};

class MockEmbedBackend : public EmbedBackend {
 public:
  explicit MockEmbedBackend(std::size_t dim = 256, std::uint64_t seed = 0)
      : dim_(dim), seed_(seed) {}

  std::vector<EmbeddingVector> embed(
      const std::vector<std::string>& texts) override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(mock_embed(t, dim_, seed_));
    return out;
  }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Transport failure for one sub-batch; carries exactly the document ids
// that were in the failed request.
class EmbedBatchError : public BackendError {
 public:
  EmbedBatchError(const std::string& msg, std::vector<std::string> ids)
      : BackendError(msg), failed_ids(std::move(ids)) {}
  std::vector<std::string> failed_ids;
};

struct EmbedOptions {
  std::size_t batch_size = 64;
  std::size_t parallelism = 4;  // concurrent sub-batches
  std::size_t max_chars = 8000; // head truncation before embedding
};

// Embeds a document list through `backend`, slicing into sub-batches and
// issuing up to opts.parallelism of them concurrently.  Output is
// order-aligned with input regardless of completion order.  If several
// sub-batches fail, the one with the lowest starting index is reported
// (keeps error output deterministic).
inline std::vector<EmbeddingVector> embed_batch(
    const std::vector<Document>& docs, EmbedBackend& backend,
    const EmbedOptions& opts = {}) {
  if (docs.empty()) throw ArgumentError("embed_batch: empty document list");
  if (opts.batch_size == 0)
    throw ArgumentError("embed_batch: batch_size must be >= 1");

  std::size_t n_chunks = (docs.size() + opts.batch_size - 1) / opts.batch_size;
  std::vector<std::vector<EmbeddingVector>> results(n_chunks);
  std::vector<std::string> failures(n_chunks);  // error message per chunk
  std::vector<std::vector<std::string>> failed_ids(n_chunks);
  std::atomic<std::size_t> next{0};

  auto run_chunk = [&](std::size_t c) {
    std::size_t begin = c * opts.batch_size;
    std::size_t end = std::min(begin + opts.batch_size, docs.size());
    std::vector<std::string> texts;
    texts.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i)
      texts.push_back(utf8_head(docs[i].text, opts.max_chars));
    try {
      std::vector<EmbeddingVector> vecs = backend.embed(texts);
      if (vecs.size() != texts.size())
        throw BackendError("provider returned " + std::to_string(vecs.size()) +
                           " vectors for " + std::to_string(texts.size()) +
                           " inputs");
      results[c] = std::move(vecs);
    } catch (const std::exception& e) {
      failures[c] = e.what();
      for (std::size_t i = begin; i < end; ++i)
        failed_ids[c].push_back(docs[i].id);
    }
  };

  std::size_t n_threads = std::min<std::size_t>(
      std::max<std::size_t>(opts.parallelism, 1), n_chunks);
  if (n_threads <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t)
      workers.emplace_back([&] {
        for (;;) {
          std::size_t c = next.fetch_add(1);
          if (c >= n_chunks) return;
          run_chunk(c);
        }
      });
    for (auto& w : workers) w.join();
  }

  for (std::size_t c = 0; c < n_chunks; ++c) {
    if (!failures[c].empty()) {
      std::string msg = "embedding sub-batch failed (" + failures[c] +
                        "); doc ids:";
      for (const std::string& id : failed_ids[c]) msg += " " + id;
      throw EmbedBatchError(msg, failed_ids[c]);
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(docs.size());
  std::size_t dim = 0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    for (EmbeddingVector& v : results[c]) {
      if (dim == 0)
        dim = v.dim();
      else if (v.dim() != dim)
        throw IntegrityError("embedding dim mismatch across sub-batches: " +
                             std::to_string(v.dim()) + " vs " +
                             std::to_string(dim));
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace synthweave
