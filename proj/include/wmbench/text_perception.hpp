#pragma once

// Text Perception Score: symmetric max-match cosine similarity between the
// screen-text sets parsed from a predicted and a ground-truth screenshot.

#include <algorithm>
#include <cstddef>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "wmbench/error.hpp"
#include "wmbench/providers/contracts.hpp"
#include "wmbench/unicode.hpp"

namespace wmbench {

struct TextSet {
  std::vector<std::string> items;
  bool empty() const { return items.empty(); }
  std::size_t size() const { return items.size(); }
};

struct TextNormalizeOptions {
  std::size_t min_length = 2;  ///< In code points, after trimming.
  bool require_alnum = true;   ///< Drop strings made only of punctuation/symbols.
};

inline std::string normalize_text(std::string_view raw) {
  std::u32string cps;
  for_each_code_point(raw, [&](char32_t cp) { cps.push_back(to_lower(cp)); });
  std::size_t b = 0, e = cps.size();
  while (b < e && is_unicode_space(cps[b])) ++b;
  while (e > b && is_unicode_space(cps[e - 1])) --e;
  std::string out;
  for (std::size_t i = b; i < e; ++i) append_utf8(out, cps[i]);
  return out;
}

/// Lowercase, trim, drop short or symbol-only strings, dedupe keeping the
/// first occurrence.
inline TextSet normalize_texts(std::span<const std::string> raw, const TextNormalizeOptions& opts = {}) {
  TextSet out;
  std::unordered_set<std::string> seen;
  for (const auto& r : raw) {
    std::string s = normalize_text(r);
    std::size_t length = 0;
    bool alnum = false;
    for_each_code_point(s, [&](char32_t cp) {
      ++length;
      alnum = alnum || is_alnum_like(cp);
    });
    if (length < opts.min_length) continue;
    if (opts.require_alnum && !alnum) continue;
    if (seen.insert(s).second) out.items.push_back(std::move(s));
  }
  return out;
}

/// |P| x |G| cosine similarities, row-major.
struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> s;

  double at(std::size_t i, std::size_t j) const { return s[i * cols + j]; }
};

inline double cosine(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) fail(Errc::DimensionInconsistency, "embeddings differ in dimension");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline SimilarityMatrix similarity_matrix(std::span<const Embedding> pred, std::span<const Embedding> gt) {
  SimilarityMatrix m{pred.size(), gt.size(), std::vector<double>(pred.size() * gt.size())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gt.size(); ++j) m.s[i * m.cols + j] = cosine(pred[i], gt[j]);
  }
  return m;
}

enum class MatchDirection { PredToGt, GtToPred };

/// Mean over source items of their best similarity in the other set.
inline double max_match(const SimilarityMatrix& sim, MatchDirection dir) {
  const bool rows_are_source = dir == MatchDirection::PredToGt;
  const std::size_t n_src = rows_are_source ? sim.rows : sim.cols;
  const std::size_t n_dst = rows_are_source ? sim.cols : sim.rows;
  if (n_src == 0) fail(Errc::EmptySource, "max-match source set is empty");
  if (n_dst == 0) fail(Errc::EmptySource, "max-match target set is empty");
  double sum = 0.0;
  for (std::size_t a = 0; a < n_src; ++a) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < n_dst; ++b) best = std::max(best, rows_are_source ? sim.at(a, b) : sim.at(b, a));
    sum += best;
  }
  return sum / static_cast<double>(n_src);
}

/// Per-run embedding memo shared by concurrent scorers: lookups take a shared
/// lock, inserts an exclusive one.
class CachingEmbedder final : public Embedder {
 public:
  explicit CachingEmbedder(std::shared_ptr<Embedder> inner) : inner_(std::move(inner)) {}

  std::string identity() const override { return inner_->identity(); }

 protected:
  std::vector<Embedding> do_embed(const std::vector<std::string>& texts) override {
    std::vector<Embedding> out(texts.size());
    std::vector<std::string> missing;
    {
      std::shared_lock lock(mu_);
      for (std::size_t i = 0; i < texts.size(); ++i) {
        if (auto it = cache_.find(texts[i]); it != cache_.end()) {
          out[i] = it->second;
        } else if (std::find(missing.begin(), missing.end(), texts[i]) == missing.end()) {
          missing.push_back(texts[i]);
        }
      }
    }
    if (!missing.empty()) {
      auto fresh = inner_->embed_texts(missing);
      std::unique_lock lock(mu_);
      for (std::size_t k = 0; k < missing.size(); ++k) cache_.emplace(missing[k], std::move(fresh[k]));
      for (std::size_t i = 0; i < texts.size(); ++i) {
        if (out[i].empty()) out[i] = cache_.at(texts[i]);
      }
    }
    return out;
  }

 private:
  std::shared_ptr<Embedder> inner_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, Embedding> cache_;
};

struct TrsBreakdown {
  double score = 0.0;
  std::optional<double> pred_to_gt;
  std::optional<double> gt_to_pred;
  std::size_t pred_items = 0;
  std::size_t gt_items = 0;
};

/// Scores two already-normalised sets. Negative cosines count as 0.
inline TrsBreakdown text_perception_breakdown(const TextSet& pred, const TextSet& gt, Embedder& embedder) {
  TrsBreakdown b;
  b.pred_items = pred.size();
  b.gt_items = gt.size();
  if (pred.empty() && gt.empty()) {
    b.score = 1.0;
    return b;
  }
  if (pred.empty() || gt.empty()) {
    b.score = 0.0;
    return b;
  }
  std::vector<Embedding> ep, eg;
  try {
    ep = embedder.embed_texts(pred.items);
    eg = embedder.embed_texts(gt.items);
  } catch (const Error& e) {
    if (e.code() == Errc::EmbedderFailure) throw;
    fail(Errc::EmbedderFailure, e.what());
  }
  SimilarityMatrix sim = similarity_matrix(ep, eg);
  for (double& v : sim.s) v = std::max(0.0, v);
  b.pred_to_gt = max_match(sim, MatchDirection::PredToGt);
  b.gt_to_pred = max_match(sim, MatchDirection::GtToPred);
  b.score = 0.5 * (*b.pred_to_gt + *b.gt_to_pred);
  return b;
}

inline double text_perception_score(std::span<const std::string> pred_texts, std::span<const std::string> gt_texts,
                                    Embedder& embedder, const TextNormalizeOptions& opts = {}) {
  return text_perception_breakdown(normalize_texts(pred_texts, opts), normalize_texts(gt_texts, opts), embedder).score;
}

}  // namespace wmbench
