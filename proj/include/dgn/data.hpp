#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dgn {

struct EegSample {
  int subject_id = 0;
  int label = 0;
  std::vector<float> data;  // channel-major, n_channels * n_timesteps
};

struct EegDataset {
  std::string name;
  int n_channels = 0;
  int n_timesteps = 0;
  int n_classes = 0;
  float sampling_rate_hz = 0.0f;
  std::vector<EegSample> samples;

  void validate() const;
  std::vector<int> subject_ids() const;  // distinct, ascending
};

// PERCLOS thresholds: (0,0.35] awake, (0.35,0.7] tired, (0.7,1] drowsy.
int perclos_label(double p);

void save_dataset(const EegDataset& dataset, const std::string& path);
EegDataset load_dataset(const std::string& path);
std::uint64_t file_fingerprint(const std::string& path);  // FNV-1a over bytes

struct SyntheticSpec {
  std::string name = "synthetic";
  int n_subjects = 10;
  int samples_per_subject = 120;
  int n_channels = 17;
  int n_timesteps = 1600;
  int n_classes = 3;
  float sampling_rate_hz = 200.0f;
  std::uint64_t seed = 2026;
  double class_separation = 3.0;  // band-amplitude shift per class
  double subject_shift = 0.4;     // per-subject channel gain spread
};

// Band-limited sinusoids whose amplitudes in two designated bands shift
// monotonically with the class index, scaled by per-subject channel gains,
// plus unit-variance noise. Fully determined by the spec.
EegDataset generate_synthetic(const SyntheticSpec& spec);

enum class Protocol { kIntra, kInter };

const char* protocol_name(Protocol p);
Protocol protocol_from_name(const std::string& name);

struct Fold {
  std::vector<int> train_idx, val_idx, test_idx;
};

struct FoldPlan {
  Protocol protocol = Protocol::kIntra;
  std::vector<Fold> folds;
};

// Sample-level split: shuffled indices partitioned into k test blocks, the
// remainder split 3:1 into train:val (60/20/20 overall for k=5).
FoldPlan make_intra_folds(const EegDataset& dataset, int k, std::uint64_t seed);

// Subject-level split: each fold's test subjects appear in no train or
// validation sample of that fold; at least one validation subject.
FoldPlan make_inter_folds(const EegDataset& dataset, int k, std::uint64_t seed);

// Per-sample per-channel standardization (population variance); identity
// when disabled. Zero-variance channels are left centered at zero.
EegDataset zscore_per_channel(const EegDataset& dataset, bool enabled);

}  // namespace dgn
