#include "pivotcap/metrics.hpp"

#include <cmath>
#include <cstdlib>
#include <unordered_map>
#include <unordered_set>

#include "pivotcap/error.hpp"

namespace pivotcap {

namespace {

// Tokens never contain 0x1f, so joining with it gives unique n-gram keys.
constexpr char kSep = '\x1f';

using Counts = std::unordered_map<std::string, long>;

Counts ngram_counts(const TokenSeq& tokens, int n) {
  Counts out;
  if (static_cast<int>(tokens.size()) < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int j = 1; j < n; ++j) {
      key += kSep;
      key += tokens[i + j];
    }
    ++out[key];
  }
  return out;
}

long closest_ref_length(const TokenSeq& cand,
                        const std::vector<TokenSeq>& refs) {
  const long c = static_cast<long>(cand.size());
  long best = static_cast<long>(refs[0].size());
  for (const auto& r : refs) {
    const long len = static_cast<long>(r.size());
    const long d_new = std::labs(len - c), d_old = std::labs(best - c);
    if (d_new < d_old || (d_new == d_old && len < best)) best = len;
  }
  return best;
}

void check_refs(const std::vector<TokenSeq>& candidates,
                const std::vector<std::vector<TokenSeq>>& references,
                const char* who) {
  if (candidates.size() != references.size())
    throw Error(std::string(who) + ": " + std::to_string(candidates.size()) +
                " candidates vs " + std::to_string(references.size()) +
                " reference sets");
  if (candidates.empty())
    throw Error(std::string(who) + ": empty corpus");
  for (const auto& refs : references)
    if (refs.empty())
      throw Error(std::string(who) + ": an item has no references");
}

std::vector<double> cumulative_bleu(const std::vector<double>& precision,
                                    double bp) {
  const int max_n = static_cast<int>(precision.size());
  std::vector<double> bleu(max_n, 0.0);
  double log_sum = 0.0;
  bool dead = false;
  for (int k = 1; k <= max_n; ++k) {
    if (precision[k - 1] <= 0.0) dead = true;
    if (dead) {
      bleu[k - 1] = 0.0;
      continue;
    }
    log_sum += std::log(precision[k - 1]);
    bleu[k - 1] = bp * std::exp(log_sum / k);
  }
  return bleu;
}

}  // namespace

BleuResult corpus_bleu(const std::vector<TokenSeq>& candidates,
                       const std::vector<std::vector<TokenSeq>>& references,
                       int max_n) {
  check_refs(candidates, references, "corpus_bleu");
  if (max_n < 1) throw Error("corpus_bleu: max_n must be at least 1");

  BleuResult res;
  std::vector<long> matches(max_n, 0), totals(max_n, 0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    res.candidate_length += static_cast<long>(cand.size());
    res.reference_length += closest_ref_length(cand, references[i]);
    for (int n = 1; n <= max_n; ++n) {
      Counts cc = ngram_counts(cand, n);
      Counts best;
      for (const auto& ref : references[i])
        for (const auto& [key, cnt] : ngram_counts(ref, n)) {
          auto& slot = best[key];
          if (cnt > slot) slot = cnt;
        }
      for (const auto& [key, cnt] : cc) {
        totals[n - 1] += cnt;
        auto it = best.find(key);
        if (it != best.end())
          matches[n - 1] += std::min(cnt, it->second);
      }
    }
  }

  res.precision.assign(max_n, 0.0);
  for (int n = 0; n < max_n; ++n)
    if (totals[n] > 0)
      res.precision[n] =
          static_cast<double>(matches[n]) / static_cast<double>(totals[n]);

  if (res.candidate_length == 0)
    res.brevity_penalty = 0.0;
  else if (res.candidate_length < res.reference_length)
    res.brevity_penalty =
        std::exp(1.0 - static_cast<double>(res.reference_length) /
                           static_cast<double>(res.candidate_length));
  else
    res.brevity_penalty = 1.0;

  res.bleu = cumulative_bleu(res.precision, res.brevity_penalty);
  return res;
}

CiderResult cider(const std::vector<TokenSeq>& candidates,
                  const std::vector<std::vector<TokenSeq>>& references,
                  int max_n) {
  check_refs(candidates, references, "cider");
  if (candidates.size() < 2)
    throw Error("cider: need at least two items for the IDF base, got " +
                std::to_string(candidates.size()));
  if (max_n < 1) throw Error("cider: max_n must be at least 1");
  const double num_items = static_cast<double>(candidates.size());

  CiderResult res;
  res.per_item.assign(candidates.size(), 0.0);
  for (int n = 1; n <= max_n; ++n) {
    // Document frequency: in how many items' reference sets the n-gram
    // appears at least once.
    Counts df;
    for (const auto& refs : references) {
      std::unordered_set<std::string> seen;
      for (const auto& ref : refs)
        for (const auto& [key, cnt] : ngram_counts(ref, n)) seen.insert(key);
      for (const auto& key : seen) ++df[key];
    }
    auto idf = [&](const std::string& key) {
      auto it = df.find(key);
      const long d = it == df.end() ? 0 : it->second;
      return std::log(num_items / static_cast<double>(std::max(1l, d)));
    };
    auto norm = [&](const Counts& c) {
      double s = 0.0;
      for (const auto& [key, cnt] : c) {
        const double g = static_cast<double>(cnt) * idf(key);
        s += g * g;
      }
      return std::sqrt(s);
    };

    for (std::size_t i = 0; i < candidates.size(); ++i) {
      Counts cc = ngram_counts(candidates[i], n);
      const double cn = norm(cc);
      double avg = 0.0;
      for (const auto& ref : references[i]) {
        Counts rc = ngram_counts(ref, n);
        const double rn = norm(rc);
        if (cn == 0.0 || rn == 0.0) continue;  // zero-norm side scores 0
        double dot = 0.0;
        for (const auto& [key, cnt] : cc) {
          auto it = rc.find(key);
          if (it == rc.end()) continue;
          const double w = idf(key);
          dot += static_cast<double>(cnt) * w * static_cast<double>(it->second) * w;
        }
        avg += dot / (cn * rn);
      }
      res.per_item[i] += avg / static_cast<double>(references[i].size());
    }
  }

  double total = 0.0;
  for (auto& v : res.per_item) {
    v = v / static_cast<double>(max_n) * 10.0;
    total += v;
  }
  res.score = total / num_items;
  return res;
}

std::vector<double> self_bleu(const std::vector<TokenSeq>& candidates,
                              int max_n) {
  if (candidates.size() < 2)
    throw Error("self_bleu: need at least two candidates, got " +
                std::to_string(candidates.size()));
  if (max_n < 2) throw Error("self_bleu: max_n must be at least 2");
  constexpr double kEps = 1e-9;

  std::vector<double> mean(max_n, 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    std::vector<TokenSeq> others;
    others.reserve(candidates.size() - 1);
    for (std::size_t j = 0; j < candidates.size(); ++j)
      if (j != i) others.push_back(candidates[j]);

    std::vector<double> precision(max_n, 0.0);
    for (int n = 1; n <= max_n; ++n) {
      Counts cc = ngram_counts(cand, n);
      Counts best;
      for (const auto& ref : others)
        for (const auto& [key, cnt] : ngram_counts(ref, n)) {
          auto& slot = best[key];
          if (cnt > slot) slot = cnt;
        }
      long match = 0, total = 0;
      for (const auto& [key, cnt] : cc) {
        total += cnt;
        auto it = best.find(key);
        if (it != best.end()) match += std::min(cnt, it->second);
      }
      precision[n - 1] = (static_cast<double>(match) + kEps) /
                         (static_cast<double>(total) + kEps);
    }

    const long c = static_cast<long>(cand.size());
    const long r = closest_ref_length(cand, others);
    double bp = 1.0;
    if (c == 0)
      bp = 0.0;
    else if (c < r)
      bp = std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));

    auto bleu = cumulative_bleu(precision, bp);
    for (int k = 0; k < max_n; ++k) mean[k] += bleu[k];
  }

  for (auto& v : mean) v /= static_cast<double>(candidates.size());
  return std::vector<double>(mean.begin() + 1, mean.end());
}

}  // namespace pivotcap
