#include "slak/fusion.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "slak/autodiff.hpp"
#include "slak/util.hpp"

// httplib is pulled in only here; plain HTTP, no TLS.
#include <httplib.h>

namespace slak {

using nlohmann::json;

EmbeddingProvider::EmbeddingProvider(Config config) : config_(std::move(config)) {
  if (!config_.cache_dir.empty()) ensure_dir(config_.cache_dir);
}

EmbeddingProvider EmbeddingProvider::from_env(const std::string& cache_dir) {
  Config c;
  c.cache_dir = cache_dir;
  const char* endpoint = std::getenv("EMBED_ENDPOINT");
  if (endpoint && *endpoint) {
    c.mode = Mode::Remote;
    c.endpoint = endpoint;
    if (const char* model = std::getenv("EMBED_MODEL")) c.model = model;
    if (const char* key = std::getenv("EMBED_API_KEY")) c.api_key = key;
  }
  return EmbeddingProvider(std::move(c));
}

EmbeddingProvider EmbeddingProvider::fallback(const std::string& cache_dir) {
  Config c;
  c.cache_dir = cache_dir;
  return EmbeddingProvider(std::move(c));
}

namespace {

// Unit vector seeded from a cryptographic hash of the text: reproducible
// everywhere, independent of embedding quality.
std::vector<double> fallback_vector(const std::string& text) {
  std::string hex = sha256_hex(text);
  uint64_t seed = 0;
  for (int i = 0; i < 16; ++i) {
    char c = hex[static_cast<size_t>(i)];
    seed = seed * 16 + static_cast<uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
  }
  Rng rng(seed);
  std::vector<double> v(kSemanticDim);
  double norm_sq = 0.0;
  for (double& x : v) {
    x = rng.normal();
    norm_sq += x * x;
  }
  double norm = std::sqrt(norm_sq);
  for (double& x : v) x /= norm;
  return v;
}

std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  // host[:port] and path; scheme optional (plain http only).
  std::string rest = endpoint;
  if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
  size_t slash = rest.find('/');
  std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
  std::string path = slash == std::string::npos ? "/" : rest.substr(slash);
  return {host, path};
}

}  // namespace

std::vector<double> EmbeddingProvider::fetch_remote(const std::string& text) {
  auto [host, path] = split_endpoint(config_.endpoint);
  httplib::Client client(host);
  client.set_read_timeout(30, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty())
    headers.emplace("Authorization", "Bearer " + config_.api_key);

  json body = {{"model", config_.model}, {"texts", json::array({text})}};
  std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt < 3; ++attempt) {
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("embeddings") ||
        !parsed["embeddings"].is_array() || parsed["embeddings"].size() != 1)
      fail(ErrorKind::Runtime, "malformed embedding response from " + config_.endpoint);
    std::vector<double> v = parsed["embeddings"][0].get<std::vector<double>>();
    if (v.size() != kSemanticDim)
      fail(ErrorKind::Runtime, "embedding endpoint returned " + std::to_string(v.size()) +
                                   " dims, expected " + std::to_string(kSemanticDim));
    return v;
  }
  fail(ErrorKind::Runtime,
       "embedding request to " + config_.endpoint + " failed after 3 attempts (" + last_error + ")");
}

SemanticEmbedding EmbeddingProvider::embed(const std::string& text) {
  if (text.empty()) fail(ErrorKind::Invalid, "embed_text: empty text");

  std::string cache_path;
  if (!config_.cache_dir.empty()) {
    cache_path = config_.cache_dir + "/" + sha256_hex(text) + ".f64";
    std::lock_guard<std::mutex> lock(cache_mutex_);
    if (file_exists(cache_path)) {
      std::string blob = read_file(cache_path);
      ByteReader r(blob, cache_path);
      SemanticEmbedding e;
      e.source_text = text;
      e.vector.resize(kSemanticDim);
      for (double& v : e.vector) v = r.f64();
      return e;
    }
  }

  SemanticEmbedding e;
  e.source_text = text;
  e.vector = config_.mode == Mode::Remote ? fetch_remote(text) : fallback_vector(text);
  for (double v : e.vector)
    if (!std::isfinite(v)) fail(ErrorKind::Runtime, "non-finite semantic embedding value");

  if (!cache_path.empty()) {
    std::string blob;
    for (double v : e.vector) put_f64(blob, v);
    std::lock_guard<std::mutex> lock(cache_mutex_);
    write_file(cache_path, blob);
  }
  return e;
}

Tensor EmbeddingProvider::embed_all(const std::vector<std::string>& texts) {
  Tensor out(texts.size(), kSemanticDim);
  for (size_t i = 0; i < texts.size(); ++i) {
    SemanticEmbedding e = embed(texts[i]);
    for (size_t c = 0; c < kSemanticDim; ++c) out.at(i, c) = e.vector[c];
  }
  return out;
}

FuseResult fuse(const Tensor& semantic_queries, const Tensor& query_projection,
                const std::vector<Tensor>& values) {
  size_t n_src = values.size();
  if (n_src == 0) fail(ErrorKind::Invalid, "fuse: no value sources");
  if (semantic_queries.rows() != n_src)
    fail(ErrorKind::Invalid, "fuse: " + std::to_string(semantic_queries.rows()) +
                                 " queries for " + std::to_string(n_src) + " sources");
  if (semantic_queries.cols() != query_projection.rows())
    fail(ErrorKind::Invalid, "fuse: query width " + std::to_string(semantic_queries.cols()) +
                                 " != projection rows " + std::to_string(query_projection.rows()));
  size_t d_h = query_projection.cols();
  size_t n_rows = values[0].rows();
  for (const Tensor& v : values)
    if (v.rows() != n_rows || v.cols() != d_h)
      fail(ErrorKind::Invalid, "fuse: value matrix " + v.shape_str() + " misaligned (expected " +
                                   std::to_string(n_rows) + "x" + std::to_string(d_h) + ")");

  Tensor q;
  matmul_into(q, semantic_queries, query_projection, false, false, false);  // n_src x d_h
  double scale = 1.0 / std::sqrt(static_cast<double>(d_h));

  FuseResult out;
  out.alpha = Tensor(n_rows, n_src);
  out.fused = Tensor(n_rows, d_h);
  std::vector<double> logits(n_src);
  for (size_t j = 0; j < n_rows; ++j) {
    double mx = -1e300;
    for (size_t i = 0; i < n_src; ++i) {
      double dot = 0.0;
      const double* qi = q.row(i);
      const double* vj = values[i].row(j);
      for (size_t c = 0; c < d_h; ++c) dot += qi[c] * vj[c];
      logits[i] = dot * scale;
      mx = std::max(mx, logits[i]);
    }
    double sum = 0.0;
    for (size_t i = 0; i < n_src; ++i) {
      logits[i] = std::exp(logits[i] - mx);
      sum += logits[i];
    }
    for (size_t i = 0; i < n_src; ++i) {
      double a = logits[i] / sum;
      out.alpha.at(j, i) = a;
      const double* vj = values[i].row(j);
      double* fj = out.fused.row(j);
      for (size_t c = 0; c < d_h; ++c) fj[c] += a * vj[c];
    }
  }
  return out;
}

FuseResult fuse_cross_task(const Tensor& task_queries, const Tensor& query_projection,
                           const std::vector<Tensor>& other_task_embeddings,
                           const Tensor& current) {
  if (other_task_embeddings.empty()) {
    FuseResult out;
    out.fused = current;
    out.alpha = Tensor();  // nothing fused
    return out;
  }
  for (const Tensor& o : other_task_embeddings)
    if (!o.same_shape(current))
      fail(ErrorKind::Invalid, "fuse_cross_task: saved embeddings " + o.shape_str() +
                                   " misaligned with current " + current.shape_str());
  FuseResult out = fuse(task_queries, query_projection, other_task_embeddings);
  for (size_t i = 0; i < out.fused.size(); ++i) out.fused.data()[i] += current.data()[i];
  return out;
}

}  // namespace slak
