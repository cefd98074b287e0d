#pragma once

#include <mutex>
#include <string>
#include <vector>

#include "slak/tensor.hpp"

namespace slak {

inline constexpr size_t kSemanticDim = 768;

struct SemanticEmbedding {
  std::vector<double> vector;  // exactly kSemanticDim values
  std::string source_text;
};

// Text-embedding provider. Remote mode speaks a minimal HTTP contract
// (POST {"model": ..., "texts": [...]} -> {"embeddings": [[...], ...]});
// fallback mode derives a unit vector from a SHA-256 of the text so runs are
// reproducible without network access. Results are cached on disk keyed by
// content hash when a cache directory is configured.
class EmbeddingProvider {
 public:
  enum class Mode { Remote, Fallback };

  struct Config {
    Mode mode = Mode::Fallback;
    std::string endpoint;  // e.g. http://host:port/embed
    std::string model;
    std::string api_key;
    std::string cache_dir;  // empty disables the disk cache
  };

  explicit EmbeddingProvider(Config config);
  // Remote iff EMBED_ENDPOINT is set; EMBED_MODEL / EMBED_API_KEY optional.
  static EmbeddingProvider from_env(const std::string& cache_dir = "");
  static EmbeddingProvider fallback(const std::string& cache_dir = "");

  SemanticEmbedding embed(const std::string& text);
  // One matrix row per text, in order (n x 768).
  Tensor embed_all(const std::vector<std::string>& texts);

  Mode mode() const { return config_.mode; }
  const char* mode_name() const { return config_.mode == Mode::Remote ? "remote" : "fallback"; }

 private:
  std::vector<double> fetch_remote(const std::string& text);
  Config config_;
  std::mutex cache_mutex_;
};

struct FuseResult {
  Tensor fused;  // n_rows x d_h
  Tensor alpha;  // n_rows x n_sources, rows sum to 1
};

// Semantic-guided attention fusion. `semantic_queries` is n_sources x 768,
// `query_projection` is 768 x d_h, each value matrix is n_rows x d_h and all
// share row alignment. Per row j the sources are weighted by a softmax over
// scaled dot products between the projected query and that source's row.
FuseResult fuse(const Tensor& semantic_queries, const Tensor& query_projection,
                const std::vector<Tensor>& values);

// Cross-task reuse of the same module: fused output is added to `current`
// through a residual connection. With no other tasks, returns `current`.
FuseResult fuse_cross_task(const Tensor& task_queries, const Tensor& query_projection,
                           const std::vector<Tensor>& other_task_embeddings,
                           const Tensor& current);

}  // namespace slak
