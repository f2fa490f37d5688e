#include "ocsad/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace ocsad {

std::string to_string(PlaceholderMode m) {
  return m == PlaceholderMode::random ? "random" : "contiguous";
}

PlaceholderMode placeholder_mode_from_string(const std::string& s) {
  if (s == "random") return PlaceholderMode::random;
  if (s == "contiguous") return PlaceholderMode::contiguous;
  fail(ErrorKind::config, "unknown placeholder mode '" + s + "'");
}

void PerturbationPlan::validate(int k, const EventVocab& vocab) const {
  require(!placeholder_positions.empty() &&
              static_cast<int>(placeholder_positions.size()) <= k,
          ErrorKind::bounds, "need 1 <= m <= K placeholders");
  require(std::is_sorted(placeholder_positions.begin(),
                         placeholder_positions.end()),
          ErrorKind::config, "placeholder positions must be sorted");
  for (size_t i = 0; i < placeholder_positions.size(); ++i) {
    int p = placeholder_positions[i];
    require(p >= 0 && p < k, ErrorKind::bounds,
            "placeholder position " + std::to_string(p) + " outside [0," +
                std::to_string(k) + ")");
    require(i == 0 || p > placeholder_positions[i - 1], ErrorKind::config,
            "placeholder positions must be distinct");
    if (mode == PlaceholderMode::contiguous && i > 0) {
      require(p == placeholder_positions[i - 1] + 1, ErrorKind::config,
              "contiguous mode requires a consecutive run");
    }
  }
  require(candidate_ids.size() >= 2, ErrorKind::config,
          "candidate set needs at least 2 ids");
  for (int id : candidate_ids) {
    require(vocab.is_normal(id), ErrorKind::vocab,
            "candidate id " + std::to_string(id) + " is not a normal id");
  }
  require(t >= 1, ErrorKind::config, "t must be >= 1");
  require(n_base >= 0, ErrorKind::config, "n_base must be >= 0");
}

std::pair<std::vector<Sequence>, SequenceDataset> select_base_set(
    const SequenceDataset& train, int n_base, uint64_t seed) {
  require(n_base >= 0 && n_base <= static_cast<int>(train.size()),
          ErrorKind::size,
          "n_base " + std::to_string(n_base) + " exceeds |train| " +
              std::to_string(train.size()));
  for (const Sequence& s : train.sequences) {
    require(s.label == Label::normal && s.origin == Origin::benign,
            ErrorKind::usage, "base selection expects benign normal training "
                              "sequences");
  }

  Rng rng = substream(seed, 11);
  std::vector<int> picks =
      rng.sample_without_replacement(static_cast<int>(train.size()), n_base);
  std::vector<bool> chosen(train.size(), false);
  for (int i : picks) chosen[i] = true;

  std::vector<Sequence> x_prime;
  x_prime.reserve(n_base);
  for (int i : picks) x_prime.push_back(train.sequences[i]);

  SequenceDataset x_c;
  x_c.k = train.k;
  x_c.vocab = train.vocab;
  x_c.split = train.split;
  x_c.sequences.reserve(train.size() - n_base);
  for (size_t i = 0; i < train.size(); ++i) {
    if (!chosen[i]) x_c.sequences.push_back(train.sequences[i]);
  }
  return {std::move(x_prime), std::move(x_c)};
}

std::vector<int> choose_placeholders(int k, int m, PlaceholderMode mode,
                                     uint64_t seed) {
  require(m >= 1 && m <= k, ErrorKind::bounds,
          "need 1 <= m <= K, got m=" + std::to_string(m) +
              " K=" + std::to_string(k));
  Rng rng = substream(seed, 12);
  std::vector<int> positions;
  if (mode == PlaceholderMode::contiguous) {
    int start = rng.index(k - m + 1);
    for (int i = 0; i < m; ++i) positions.push_back(start + i);
  } else {
    positions = rng.sample_without_replacement(k, m);
    std::sort(positions.begin(), positions.end());
  }
  return positions;
}

std::vector<PerturbedPair> craft_perturbed(const Sequence& base,
                                           const PerturbationPlan& plan,
                                           uint64_t seed) {
  require(base.label == Label::normal && base.origin == Origin::benign,
          ErrorKind::usage, "base sequence must be benign normal");
  const int m = plan.m();
  const double capacity =
      std::pow(static_cast<double>(plan.candidate_ids.size()), m);
  require(capacity >= static_cast<double>(plan.t), ErrorKind::capacity,
          "cannot produce " + std::to_string(plan.t) +
              " distinct variants from " +
              std::to_string(plan.candidate_ids.size()) + "^" +
              std::to_string(m) + " combinations");

  Rng rng = substream(seed, 13);
  std::set<std::vector<int>> seen;
  std::vector<PerturbedPair> pairs;
  pairs.reserve(plan.t);
  while (static_cast<int>(pairs.size()) < plan.t) {
    std::vector<int> fill(m);
    for (int i = 0; i < m; ++i) {
      fill[i] = plan.candidate_ids[rng.index(plan.candidate_ids.size())];
    }
    if (!seen.insert(fill).second) continue;  // rejection: variants distinct
    Sequence variant = base;
    variant.origin = Origin::perturbed;
    for (int i = 0; i < m; ++i) {
      variant.entries[plan.placeholder_positions[i]] = fill[i];
    }
    pairs.push_back(PerturbedPair{base, std::move(variant)});
  }
  return pairs;
}

PerturbedDataset build_perturbed_dataset(const std::vector<Sequence>& x_prime,
                                         const PerturbationPlan& plan,
                                         const EventVocab& vocab, int k,
                                         uint64_t seed) {
  plan.validate(k, vocab);
  PerturbedDataset out;
  out.x_p.k = k;
  out.x_p.vocab = vocab;
  out.x_p.split = Split::train;
  Rng rng = substream(seed, 14);
  for (size_t j = 0; j < x_prime.size(); ++j) {
    // Per-base derived seed: bases are independent of each other.
    auto pairs = craft_perturbed(x_prime[j], plan, rng.derive(j).u64());
    for (PerturbedPair& p : pairs) {
      out.x_p.sequences.push_back(std::move(p.variant));
      out.bases.push_back(x_prime[j]);
      out.variant_to_base.push_back(static_cast<int>(j));
    }
  }
  out.x_p.validate();
  return out;
}

Sequence craft_poisoned(const Sequence& source, const PerturbationPlan& plan,
                        const std::vector<int>& abnormal_pool, int m_inject,
                        uint64_t seed) {
  require(m_inject >= 1 && m_inject <= plan.m(), ErrorKind::bounds,
          "need 1 <= m_inject <= m");
  require(!abnormal_pool.empty(), ErrorKind::config,
          "abnormal pool must not be empty");

  Rng rng = substream(seed, 15);
  std::vector<int> slots = rng.sample_without_replacement(plan.m(), m_inject);
  Sequence poisoned = source;
  poisoned.origin = Origin::poisoned;
  poisoned.label = Label::abnormal;
  for (int slot : slots) {
    poisoned.entries[plan.placeholder_positions[slot]] =
        abnormal_pool[rng.index(abnormal_pool.size())];
  }
  return poisoned;
}

SequenceDataset poison_dataset(const SequenceDataset& x_p,
                               const PerturbationPlan& plan,
                               const std::vector<int>& abnormal_pool,
                               int m_inject, uint64_t seed) {
  SequenceDataset out;
  out.k = x_p.k;
  out.vocab = x_p.vocab;
  out.split = Split::poisoned_test;
  Rng rng = substream(seed, 16);
  out.sequences.reserve(x_p.size());
  for (size_t i = 0; i < x_p.size(); ++i) {
    out.sequences.push_back(craft_poisoned(x_p.sequences[i], plan,
                                           abnormal_pool, m_inject,
                                           rng.derive(i).u64()));
  }
  out.validate();
  return out;
}

std::vector<int> frequent_normal_ids(const SequenceDataset& train,
                                     int max_count) {
  std::map<int, size_t> freq;
  for (const Sequence& s : train.sequences) {
    for (int id : s.entries) {
      if (train.vocab.is_normal(id)) freq[id]++;
    }
  }
  std::vector<std::pair<int, size_t>> items(freq.begin(), freq.end());
  // Sort by descending frequency, id as the tie-break.
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<int> out;
  for (const auto& [id, n] : items) {
    if (static_cast<int>(out.size()) >= max_count) break;
    out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ocsad
