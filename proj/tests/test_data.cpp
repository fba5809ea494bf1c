#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "dgn/data.hpp"
#include "dgn/errors.hpp"
#include "doctest.h"

using namespace dgn;

namespace {

EegDataset skeleton(int n_subjects, int per_subject) {
  EegDataset ds;
  ds.name = "skeleton";
  ds.n_channels = 1;
  ds.n_timesteps = 2;
  ds.n_classes = 2;
  ds.sampling_rate_hz = 1.0f;
  for (int s = 0; s < n_subjects; ++s) {
    for (int i = 0; i < per_subject; ++i) {
      EegSample sm;
      sm.subject_id = s;
      sm.label = i % 2;
      sm.data = {0.0f, 1.0f};
      ds.samples.push_back(std::move(sm));
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("PERCLOS thresholds") {
  CHECK(perclos_label(0.2) == 0);
  CHECK(perclos_label(0.35) == 0);
  CHECK(perclos_label(0.3501) == 1);
  CHECK(perclos_label(0.5) == 1);
  CHECK(perclos_label(0.7) == 1);
  CHECK(perclos_label(0.71) == 2);
  CHECK(perclos_label(1.0) == 2);
  CHECK_THROWS_AS(perclos_label(0.0), std::invalid_argument);
  CHECK_THROWS_AS(perclos_label(-0.2), std::invalid_argument);
  CHECK_THROWS_AS(perclos_label(1.01), std::invalid_argument);
}

TEST_CASE("EEGD round trip") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "dgn_test_rt.eegd").string();
  SyntheticSpec spec;
  spec.n_subjects = 3;
  spec.samples_per_subject = 4;
  spec.n_channels = 2;
  spec.n_timesteps = 16;
  EegDataset ds = generate_synthetic(spec);
  save_dataset(ds, path);
  EegDataset back = load_dataset(path);
  CHECK(back.n_channels == ds.n_channels);
  CHECK(back.n_timesteps == ds.n_timesteps);
  CHECK(back.n_classes == ds.n_classes);
  CHECK(back.sampling_rate_hz == ds.sampling_rate_hz);
  REQUIRE(back.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].subject_id == ds.samples[i].subject_id);
    CHECK(back.samples[i].label == ds.samples[i].label);
    REQUIRE(back.samples[i].data == ds.samples[i].data);
  }
  CHECK(file_fingerprint(path) == file_fingerprint(path));
  fs::remove(path);
}

TEST_CASE("EEGD rejects truncation, bad magic, and trailing bytes") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "dgn_test_bad.eegd").string();
  SyntheticSpec spec;
  spec.n_subjects = 2;
  spec.samples_per_subject = 2;
  spec.n_channels = 2;
  spec.n_timesteps = 8;
  EegDataset ds = generate_synthetic(spec);
  save_dataset(ds, path);
  std::vector<char> bytes;
  {
    std::ifstream f(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }

  auto rewrite = [&](const std::vector<char>& b) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(b.data(), static_cast<std::streamsize>(b.size()));
  };

  std::vector<char> cut(bytes.begin(), bytes.begin() + static_cast<long>(bytes.size() / 3));
  rewrite(cut);
  CHECK_THROWS_AS(load_dataset(path), FormatError);

  std::vector<char> padded = bytes;
  padded.push_back('x');
  rewrite(padded);
  CHECK_THROWS_AS(load_dataset(path), FormatError);

  std::vector<char> magic = bytes;
  magic[0] = 'Z';
  rewrite(magic);
  try {
    load_dataset(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 0);
  }
  fs::remove(path);
}

TEST_CASE("synthetic generation is deterministic and label-balanced") {
  SyntheticSpec spec;
  spec.n_subjects = 6;
  spec.samples_per_subject = 9;
  spec.n_channels = 3;
  spec.n_timesteps = 32;
  EegDataset a = generate_synthetic(spec);
  EegDataset b = generate_synthetic(spec);
  REQUIRE(a.samples.size() == 54);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    REQUIRE(a.samples[i].data == b.samples[i].data);
    CHECK(a.samples[i].label == b.samples[i].label);
  }
  std::vector<int> counts(3, 0);
  for (const EegSample& s : a.samples) counts[static_cast<std::size_t>(s.label)]++;
  CHECK(counts[0] == 18);
  CHECK(counts[1] == 18);
  CHECK(counts[2] == 18);
  spec.seed = 9999;
  EegDataset c = generate_synthetic(spec);
  CHECK(c.samples[0].data != a.samples[0].data);
}

TEST_CASE("intra folds: 885 samples split 531/177/177") {
  EegDataset ds = skeleton(5, 177);
  REQUIRE(ds.samples.size() == 885);
  FoldPlan plan = make_intra_folds(ds, 5, 2026);
  REQUIRE(plan.folds.size() == 5);
  std::vector<int> seen(885, 0);
  for (const Fold& f : plan.folds) {
    CHECK(f.train_idx.size() == 531);
    CHECK(f.val_idx.size() == 177);
    CHECK(f.test_idx.size() == 177);
    for (int i : f.test_idx) seen[static_cast<std::size_t>(i)]++;
  }
  for (int c : seen) CHECK(c == 1);  // every sample tested exactly once
}

TEST_CASE("intra folds stay within one sample of 60/20/20") {
  for (int n : {23, 50, 101, 120, 997}) {
    EegDataset ds = skeleton(1, n);
    FoldPlan plan = make_intra_folds(ds, 5, 7);
    for (const Fold& f : plan.folds) {
      const double total = static_cast<double>(n);
      CHECK(std::abs(static_cast<double>(f.train_idx.size()) - 0.6 * total) <= 1.0);
      CHECK(std::abs(static_cast<double>(f.val_idx.size()) - 0.2 * total) <= 1.0);
      CHECK(std::abs(static_cast<double>(f.test_idx.size()) - 0.2 * total) <= 1.0);
      std::set<int> all(f.train_idx.begin(), f.train_idx.end());
      all.insert(f.val_idx.begin(), f.val_idx.end());
      all.insert(f.test_idx.begin(), f.test_idx.end());
      CHECK(all.size() == f.train_idx.size() + f.val_idx.size() + f.test_idx.size());
    }
  }
}

TEST_CASE("inter folds keep test subjects unseen") {
  EegDataset ds = skeleton(10, 12);
  FoldPlan plan = make_inter_folds(ds, 5, 2026);
  REQUIRE(plan.folds.size() == 5);
  std::set<int> tested_subjects;
  for (const Fold& f : plan.folds) {
    std::set<int> test_subj, seen_subj;
    for (int i : f.test_idx) test_subj.insert(ds.samples[static_cast<std::size_t>(i)].subject_id);
    for (int i : f.train_idx) seen_subj.insert(ds.samples[static_cast<std::size_t>(i)].subject_id);
    for (int i : f.val_idx) seen_subj.insert(ds.samples[static_cast<std::size_t>(i)].subject_id);
    for (int s : test_subj) {
      CHECK(seen_subj.count(s) == 0);
      tested_subjects.insert(s);
    }
    CHECK(!f.val_idx.empty());
  }
  CHECK(tested_subjects.size() == 10);  // every subject tested somewhere
  EegDataset small = skeleton(4, 3);
  CHECK_THROWS_AS(make_inter_folds(small, 5, 1), std::invalid_argument);
}

TEST_CASE("fold planning is seed-deterministic") {
  EegDataset ds = skeleton(6, 20);
  FoldPlan a = make_intra_folds(ds, 5, 42);
  FoldPlan b = make_intra_folds(ds, 5, 42);
  FoldPlan c = make_intra_folds(ds, 5, 43);
  for (std::size_t f = 0; f < a.folds.size(); ++f) {
    CHECK(a.folds[f].train_idx == b.folds[f].train_idx);
    CHECK(a.folds[f].test_idx == b.folds[f].test_idx);
  }
  bool differs = false;
  for (std::size_t f = 0; f < a.folds.size(); ++f) {
    if (a.folds[f].test_idx != c.folds[f].test_idx) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("zscore standardizes each channel") {
  SyntheticSpec spec;
  spec.n_subjects = 2;
  spec.samples_per_subject = 3;
  spec.n_channels = 2;
  spec.n_timesteps = 64;
  EegDataset ds = generate_synthetic(spec);
  EegDataset z = zscore_per_channel(ds, true);
  for (const EegSample& s : z.samples) {
    for (int c = 0; c < 2; ++c) {
      double mean = 0.0, var = 0.0;
      for (int t = 0; t < 64; ++t) mean += s.data[static_cast<std::size_t>(c) * 64 + t];
      mean /= 64.0;
      for (int t = 0; t < 64; ++t) {
        const double d = s.data[static_cast<std::size_t>(c) * 64 + t] - mean;
        var += d * d;
      }
      var /= 64.0;
      CHECK(mean == doctest::Approx(0.0).epsilon(1e-4));
      CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    }
  }
  EegDataset same = zscore_per_channel(ds, false);
  CHECK(same.samples[0].data == ds.samples[0].data);
}

TEST_CASE("subject gains separate subjects when shift is positive") {
  SyntheticSpec spec;
  spec.n_subjects = 4;
  spec.samples_per_subject = 2;
  spec.n_channels = 2;
  spec.n_timesteps = 128;
  spec.subject_shift = 0.5;
  EegDataset ds = generate_synthetic(spec);
  // Same label, different subjects: per-channel power must differ.
  const EegSample* a = nullptr;
  const EegSample* b = nullptr;
  for (const EegSample& s : ds.samples) {
    if (s.label == 0 && s.subject_id == 0) a = &s;
    if (s.label == 0 && s.subject_id == 3) b = &s;
  }
  REQUIRE(a != nullptr);
  REQUIRE(b != nullptr);
  auto power = [](const EegSample& s, int c) {
    double p = 0.0;
    for (int t = 0; t < 128; ++t) {
      const double v = s.data[static_cast<std::size_t>(c) * 128 + t];
      p += v * v;
    }
    return p / 128.0;
  };
  CHECK(power(*a, 0) != doctest::Approx(power(*b, 0)).epsilon(0.01));
}
