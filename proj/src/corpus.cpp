#include "ocsad/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ocsad {

bool EventVocab::is_normal(int id) const {
  return std::binary_search(normal_ids.begin(), normal_ids.end(), id);
}

bool EventVocab::is_abnormal(int id) const {
  return std::binary_search(abnormal_ids.begin(), abnormal_ids.end(), id);
}

void EventVocab::validate() const {
  require(normal_ids.size() >= 2, ErrorKind::config,
          "vocab needs at least 2 normal ids");
  std::vector<int> all = normal_ids;
  all.insert(all.end(), abnormal_ids.begin(), abnormal_ids.end());
  std::sort(all.begin(), all.end());
  for (size_t i = 0; i < all.size(); ++i) {
    require(all[i] == static_cast<int>(i), ErrorKind::vocab,
            "vocab ids must be exactly 0..V-1 with disjoint normal/abnormal "
            "sets");
  }
}

EventVocab EventVocab::dense(int n_normal, int n_abnormal) {
  EventVocab v;
  for (int i = 0; i < n_normal; ++i) v.normal_ids.push_back(i);
  for (int i = 0; i < n_abnormal; ++i) v.abnormal_ids.push_back(n_normal + i);
  v.validate();
  return v;
}

std::string to_string(Label l) {
  return l == Label::normal ? "normal" : "abnormal";
}

std::string to_string(Origin o) {
  switch (o) {
    case Origin::benign: return "benign";
    case Origin::perturbed: return "perturbed";
    default: return "poisoned";
  }
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::benign_test: return "benign_test";
    default: return "poisoned_test";
  }
}

void SequenceDataset::validate() const {
  vocab.validate();
  int v = vocab.size();
  for (size_t i = 0; i < sequences.size(); ++i) {
    const Sequence& s = sequences[i];
    require(s.length() == k, ErrorKind::length,
            "sequence " + std::to_string(i) + " has length " +
                std::to_string(s.length()) + ", expected " + std::to_string(k));
    bool has_abnormal_id = false;
    for (int id : s.entries) {
      require(id >= 0 && id < v, ErrorKind::vocab,
              "sequence " + std::to_string(i) + " has id " +
                  std::to_string(id) + " outside [0," + std::to_string(v) +
                  ")");
      if (vocab.is_abnormal(id)) has_abnormal_id = true;
    }
    if (s.origin == Origin::poisoned) {
      require(has_abnormal_id, ErrorKind::vocab,
              "poisoned sequence " + std::to_string(i) +
                  " carries no abnormal id");
    }
  }
  if (split == Split::poisoned_test) {
    for (const Sequence& s : sequences) {
      require(s.label == Label::abnormal, ErrorKind::config,
              "poisoned_test split must be all abnormal");
    }
  }
}

namespace {

int parse_id(const std::string& tok, size_t line_no) {
  int value = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    fail(ErrorKind::parse, "line " + std::to_string(line_no) +
                               ": non-integer token '" + tok + "'");
  }
  return value;
}

}  // namespace

SequenceDataset load_dataset(const std::string& path, const EventVocab& vocab,
                             int k, Split split,
                             const std::string& labels_path, Origin origin) {
  vocab.validate();
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open " + path);

  SequenceDataset ds;
  ds.k = k;
  ds.vocab = vocab;
  ds.split = split;

  const int v = vocab.size();
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Sequence seq;
    seq.origin = origin;
    seq.label =
        split == Split::poisoned_test ? Label::abnormal : Label::normal;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      int id = parse_id(tok, line_no);
      require(id >= 0 && id < v, ErrorKind::vocab,
              "line " + std::to_string(line_no) + ": id " +
                  std::to_string(id) + " outside vocab of size " +
                  std::to_string(v));
      seq.entries.push_back(id);
    }
    require(seq.length() == k, ErrorKind::length,
            "line " + std::to_string(line_no) + ": got " +
                std::to_string(seq.length()) + " ids, expected " +
                std::to_string(k));
    ds.sequences.push_back(std::move(seq));
  }

  if (!labels_path.empty()) {
    std::ifstream lin(labels_path);
    require(lin.good(), ErrorKind::io, "cannot open " + labels_path);
    size_t idx = 0;
    size_t lline = 0;
    while (std::getline(lin, line)) {
      ++lline;
      if (line.empty()) continue;
      require(idx < ds.sequences.size(), ErrorKind::parse,
              "label file longer than sequence file");
      if (line == "0") {
        ds.sequences[idx].label = Label::normal;
      } else if (line == "1") {
        ds.sequences[idx].label = Label::abnormal;
      } else {
        fail(ErrorKind::parse, "label line " + std::to_string(lline) +
                                   ": expected 0 or 1, got '" + line + "'");
      }
      ++idx;
    }
    require(idx == ds.sequences.size(), ErrorKind::parse,
            "label file shorter than sequence file");
  }

  ds.validate();
  return ds;
}

namespace {

// Row-stochastic transition matrix: softmax of seeded Gaussian logits.
// Lower temperature concentrates the rows and makes the chain easier to fit.
std::vector<std::vector<double>> sample_transitions(int n, double temperature,
                                                    Rng& rng) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(n));
  for (auto& row : rows) {
    double max_logit = -1e300;
    for (double& x : row) {
      x = rng.normal() / temperature;
      max_logit = std::max(max_logit, x);
    }
    double z = 0.0;
    for (double& x : row) {
      x = std::exp(x - max_logit);
      z += x;
    }
    for (double& x : row) x /= z;
  }
  return rows;
}

int sample_categorical(const std::vector<double>& probs, Rng& rng) {
  double u = rng.real01();
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

Sequence draw_normal_sequence(const EventVocab& vocab,
                              const std::vector<std::vector<double>>& trans,
                              int k, Rng& rng) {
  Sequence s;
  s.entries.reserve(k);
  int state = rng.index(vocab.normal_ids.size());
  s.entries.push_back(vocab.normal_ids[state]);
  for (int t = 1; t < k; ++t) {
    state = sample_categorical(trans[state], rng);
    s.entries.push_back(vocab.normal_ids[state]);
  }
  return s;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const GenConfig& cfg,
                                          uint64_t seed) {
  require(cfg.v_normal >= 2, ErrorKind::config, "v_normal must be >= 2");
  require(cfg.v_abnormal >= 0 && cfg.k >= 1, ErrorKind::config,
          "invalid corpus shape");
  require(cfg.n_train >= 0 && cfg.n_val >= 0 && cfg.n_test_normal >= 0 &&
              cfg.n_test_abnormal >= 0,
          ErrorKind::config, "counts must be >= 0");
  require(cfg.n_test_abnormal == 0 || cfg.v_abnormal >= 1, ErrorKind::config,
          "abnormal test sequences need v_abnormal >= 1");
  require(cfg.transition_temperature > 0.0, ErrorKind::config,
          "transition_temperature must be positive");

  SyntheticCorpus corpus;
  corpus.vocab = EventVocab::dense(cfg.v_normal, cfg.v_abnormal);

  Rng trans_rng = substream(seed, 1);
  auto trans =
      sample_transitions(cfg.v_normal, cfg.transition_temperature, trans_rng);

  auto make_split = [&](int n, Split split, uint64_t tag) {
    SequenceDataset ds;
    ds.k = cfg.k;
    ds.vocab = corpus.vocab;
    ds.split = split;
    Rng rng = substream(seed, tag);
    ds.sequences.reserve(n);
    for (int i = 0; i < n; ++i) {
      ds.sequences.push_back(draw_normal_sequence(corpus.vocab, trans, cfg.k, rng));
    }
    return ds;
  };

  corpus.train = make_split(cfg.n_train, Split::train, 2);
  corpus.val = make_split(cfg.n_val, Split::val, 3);
  corpus.benign_test = make_split(cfg.n_test_normal, Split::benign_test, 4);

  // Abnormal test sequences: normal draws with 1..6 random entries replaced
  // by abnormal ids.
  Rng abn_rng = substream(seed, 5);
  int max_replace = std::min(6, cfg.k);
  for (int i = 0; i < cfg.n_test_abnormal; ++i) {
    Sequence s = draw_normal_sequence(corpus.vocab, trans, cfg.k, abn_rng);
    int n_replace = 1 + abn_rng.index(max_replace);
    std::vector<int> positions =
        abn_rng.sample_without_replacement(cfg.k, n_replace);
    for (int pos : positions) {
      s.entries[pos] =
          corpus.vocab.abnormal_ids[abn_rng.index(cfg.v_abnormal)];
    }
    s.label = Label::abnormal;
    corpus.benign_test.sequences.push_back(std::move(s));
  }

  corpus.train.validate();
  corpus.val.validate();
  corpus.benign_test.validate();
  return corpus;
}

DatasetStats dataset_stats(const SequenceDataset& ds) {
  DatasetStats st;
  st.k = ds.k;
  st.v = ds.vocab.size();
  for (const Sequence& s : ds.sequences) {
    st.count_by_label[to_string(s.label)]++;
    st.count_by_origin[to_string(s.origin)]++;
  }
  return st;
}

void save_sequences(const std::string& path, const SequenceDataset& ds) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot write " + path);
  for (const Sequence& s : ds.sequences) {
    for (int i = 0; i < s.length(); ++i) {
      if (i) out << ' ';
      out << s.entries[i];
    }
    out << '\n';
  }
}

void save_labels(const std::string& path, const SequenceDataset& ds) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot write " + path);
  for (const Sequence& s : ds.sequences) {
    out << (s.label == Label::abnormal ? '1' : '0') << '\n';
  }
}

void save_vocab(const std::string& path, const EventVocab& vocab) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot write " + path);
  out << "normal:";
  for (int id : vocab.normal_ids) out << ' ' << id;
  out << "\nabnormal:";
  for (int id : vocab.abnormal_ids) out << ' ' << id;
  out << '\n';
}

EventVocab load_vocab(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open " + path);
  EventVocab vocab;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string head;
    ss >> head;
    std::vector<int>* target = nullptr;
    if (head == "normal:") {
      target = &vocab.normal_ids;
    } else if (head == "abnormal:") {
      target = &vocab.abnormal_ids;
    } else {
      fail(ErrorKind::parse, "vocab line " + std::to_string(line_no) +
                                 ": expected 'normal:' or 'abnormal:'");
    }
    std::string tok;
    while (ss >> tok) target->push_back(parse_id(tok, line_no));
  }
  std::sort(vocab.normal_ids.begin(), vocab.normal_ids.end());
  std::sort(vocab.abnormal_ids.begin(), vocab.abnormal_ids.end());
  vocab.validate();
  return vocab;
}

}  // namespace ocsad
