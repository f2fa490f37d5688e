#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ocsad/corpus.hpp"

namespace ocsad {

enum class PlaceholderMode { random, contiguous };

std::string to_string(PlaceholderMode m);
PlaceholderMode placeholder_mode_from_string(const std::string& s);

// Where and how perturbed variants differ from their base sequence. The
// positions are the placeholders later filled with abnormal entries.
struct PerturbationPlan {
  std::vector<int> placeholder_positions;  // distinct, sorted, each < K
  PlaceholderMode mode = PlaceholderMode::contiguous;
  std::vector<int> candidate_ids;  // normal ids used for replacements
  int t = 200;                     // variants per base sequence
  int n_base = 50;                 // size of the base set X'

  int m() const { return static_cast<int>(placeholder_positions.size()); }
  void validate(int k, const EventVocab& vocab) const;
};

// Base sequence together with one perturbed variant derived from it.
struct PerturbedPair {
  Sequence base;
  Sequence variant;
};

// Randomly split the training set into the base set X' (n_base sequences,
// without replacement) and the remainder X_c.
std::pair<std::vector<Sequence>, SequenceDataset> select_base_set(
    const SequenceDataset& train, int n_base, uint64_t seed);

// m distinct placeholder positions; contiguous mode returns a run [p, p+m).
std::vector<int> choose_placeholders(int k, int m, PlaceholderMode mode,
                                     uint64_t seed);

// t variants of the base, each differing from it only at the placeholder
// positions, entries drawn from the candidate set. Variants are pairwise
// distinct; errors out when |candidates|^m < t.
std::vector<PerturbedPair> craft_perturbed(const Sequence& base,
                                           const PerturbationPlan& plan,
                                           uint64_t seed);

struct PerturbedDataset {
  SequenceDataset x_p;               // all variants, origin=perturbed
  std::vector<Sequence> bases;       // benign counterpart of each variant
  std::vector<int> variant_to_base;  // index into the X' list passed in
};

PerturbedDataset build_perturbed_dataset(const std::vector<Sequence>& x_prime,
                                         const PerturbationPlan& plan,
                                         const EventVocab& vocab, int k,
                                         uint64_t seed);

// Post-deployment attack: fill m_inject of the plan's placeholders with
// abnormal ids. All non-placeholder entries stay untouched.
Sequence craft_poisoned(const Sequence& source, const PerturbationPlan& plan,
                        const std::vector<int>& abnormal_pool, int m_inject,
                        uint64_t seed);

// Poison every member of X_p; the result is a poisoned_test split.
SequenceDataset poison_dataset(const SequenceDataset& x_p,
                               const PerturbationPlan& plan,
                               const std::vector<int>& abnormal_pool,
                               int m_inject, uint64_t seed);

// Default candidate set: the most frequent normal ids of the training split.
std::vector<int> frequent_normal_ids(const SequenceDataset& train,
                                     int max_count);

}  // namespace ocsad
