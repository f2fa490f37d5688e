#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ocsad/common.hpp"

namespace ocsad {

// The token universe: dense event ids 0..V-1 partitioned into normal and
// abnormal sets. Abnormal ids never appear in training data.
struct EventVocab {
  std::vector<int> normal_ids;    // sorted
  std::vector<int> abnormal_ids;  // sorted

  int size() const {
    return static_cast<int>(normal_ids.size() + abnormal_ids.size());
  }
  bool is_normal(int id) const;
  bool is_abnormal(int id) const;

  // Checks disjointness, density over 0..V-1 and |normal_ids| >= 2.
  void validate() const;

  static EventVocab dense(int n_normal, int n_abnormal);
};

enum class Label { normal, abnormal };
enum class Origin { benign, perturbed, poisoned };
enum class Split { train, val, benign_test, poisoned_test };

std::string to_string(Label l);
std::string to_string(Origin o);
std::string to_string(Split s);

// Fixed-length event-id sequence.
struct Sequence {
  std::vector<int> entries;
  Label label = Label::normal;
  Origin origin = Origin::benign;

  int length() const { return static_cast<int>(entries.size()); }
  bool operator==(const Sequence& other) const = default;
};

struct SequenceDataset {
  std::vector<Sequence> sequences;
  int k = 0;
  EventVocab vocab;
  Split split = Split::train;

  size_t size() const { return sequences.size(); }
  void validate() const;
};

struct GenConfig {
  int v_normal = 120;
  int v_abnormal = 25;
  int k = 40;
  int n_train = 90000;
  int n_val = 5000;
  int n_test_normal = 5000;
  int n_test_abnormal = 500;
  double transition_temperature = 0.4;
};

struct SyntheticCorpus {
  SequenceDataset train;
  SequenceDataset val;
  SequenceDataset benign_test;
  EventVocab vocab;
};

// Loads one sequence per line (ASCII decimal ids, single spaces). An optional
// label file carries one {0,1} token per line, 0 = normal. Errors name the
// offending line.
SequenceDataset load_dataset(const std::string& path, const EventVocab& vocab,
                             int k, Split split,
                             const std::string& labels_path = "",
                             Origin origin = Origin::benign);

// Seeded pure generator. Normal sequences come from a first-order Markov
// chain over normal ids whose row-stochastic transition matrix is sampled
// once per corpus; abnormal test sequences are normal draws with 1-6 entries
// replaced by abnormal ids at random positions.
SyntheticCorpus generate_synthetic_corpus(const GenConfig& cfg, uint64_t seed);

struct DatasetStats {
  std::map<std::string, size_t> count_by_label;
  std::map<std::string, size_t> count_by_origin;
  int k = 0;
  int v = 0;
};

DatasetStats dataset_stats(const SequenceDataset& ds);

// File I/O for the external formats (sequence, label and vocab files).
void save_sequences(const std::string& path, const SequenceDataset& ds);
void save_labels(const std::string& path, const SequenceDataset& ds);
void save_vocab(const std::string& path, const EventVocab& vocab);
EventVocab load_vocab(const std::string& path);

}  // namespace ocsad
