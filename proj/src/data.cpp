#include "dgn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <set>
#include <stdexcept>

#include "dgn/errors.hpp"
#include "dgn/rng.hpp"

namespace dgn {

void EegDataset::validate() const {
  if (n_channels < 1 || n_timesteps < 1 || n_classes < 1) {
    throw std::invalid_argument("EegDataset: nonpositive dimensions");
  }
  const std::size_t expected = static_cast<std::size_t>(n_channels) * n_timesteps;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const EegSample& s = samples[i];
    if (s.data.size() != expected) {
      throw std::invalid_argument("EegDataset: sample " + std::to_string(i) + " holds " +
                                  std::to_string(s.data.size()) + " values, expected " +
                                  std::to_string(expected));
    }
    if (s.label < 0 || s.label >= n_classes) {
      throw std::invalid_argument("EegDataset: sample " + std::to_string(i) + " label " +
                                  std::to_string(s.label) + " out of range");
    }
    for (float v : s.data) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("EegDataset: non-finite value in sample " + std::to_string(i));
      }
    }
  }
}

std::vector<int> EegDataset::subject_ids() const {
  std::set<int> ids;
  for (const EegSample& s : samples) ids.insert(s.subject_id);
  return std::vector<int>(ids.begin(), ids.end());
}

int perclos_label(double p) {
  if (!(p > 0.0) || p > 1.0) {
    throw std::invalid_argument("perclos_label: p must be in (0,1], got " + std::to_string(p));
  }
  if (p <= 0.35) return 0;  // awake
  if (p <= 0.7) return 1;   // tired
  return 2;                 // drowsy
}

// --- EEGD container ----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'E', 'E', 'G', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

std::string path_stem(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace

void save_dataset(const EegDataset& dataset, const std::string& path) {
  dataset.validate();
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(dataset.samples.size()));
  put_u32(out, static_cast<std::uint32_t>(dataset.n_channels));
  put_u32(out, static_cast<std::uint32_t>(dataset.n_timesteps));
  put_u32(out, static_cast<std::uint32_t>(dataset.n_classes));
  put_f32(out, dataset.sampling_rate_hz);
  for (const EegSample& s : dataset.samples) {
    put_u32(out, static_cast<std::uint32_t>(s.subject_id));
    put_u32(out, static_cast<std::uint32_t>(s.label));
    for (float v : s.data) put_f32(out, v);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("short write to " + path);
}

EegDataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  std::size_t off = 0;
  auto need = [&](std::size_t n, const char* what) {
    if (off + n > bytes.size()) throw FormatError(std::string("truncated ") + what, off);
  };
  auto get_u32 = [&](const char* what) {
    need(4, what);
    std::uint32_t v = static_cast<std::uint32_t>(bytes[off]) |
                      (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
                      (static_cast<std::uint32_t>(bytes[off + 2]) << 16) |
                      (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
    off += 4;
    return v;
  };
  auto get_f32 = [&](const char* what) {
    const std::uint32_t bits = get_u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  };

  need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad EEGD magic", 0);
  off += 4;
  const std::uint32_t version = get_u32("version");
  if (version != kVersion) throw FormatError("unsupported EEGD version " + std::to_string(version), 4);

  EegDataset ds;
  ds.name = path_stem(path);
  const std::uint32_t n_samples = get_u32("sample count");
  ds.n_channels = static_cast<int>(get_u32("channel count"));
  ds.n_timesteps = static_cast<int>(get_u32("timestep count"));
  ds.n_classes = static_cast<int>(get_u32("class count"));
  ds.sampling_rate_hz = get_f32("sampling rate");
  if (ds.n_channels < 1 || ds.n_timesteps < 1 || ds.n_classes < 1) {
    throw FormatError("nonpositive header dimensions", 12);
  }
  const std::size_t per_sample = static_cast<std::size_t>(ds.n_channels) * ds.n_timesteps;
  ds.samples.reserve(n_samples);
  for (std::uint32_t i = 0; i < n_samples; ++i) {
    EegSample s;
    s.subject_id = static_cast<int>(get_u32("subject id"));
    s.label = static_cast<int>(get_u32("label"));
    need(per_sample * 4, "sample payload");
    s.data.resize(per_sample);
    for (std::size_t j = 0; j < per_sample; ++j) s.data[j] = get_f32("sample value");
    ds.samples.push_back(std::move(s));
  }
  if (off != bytes.size()) throw FormatError("trailing bytes after last sample", off);
  if (!ds.samples.empty()) ds.validate();
  return ds;
}

std::uint64_t file_fingerprint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[8192];
  while (f.read(buf, sizeof buf) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      h ^= static_cast<std::uint8_t>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (!f) break;
  }
  return h;
}

// --- synthetic generation ----------------------------------------------------

EegDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_subjects < 1 || spec.samples_per_subject < 1 || spec.n_channels < 1 ||
      spec.n_timesteps < 1 || spec.n_classes < 1 || spec.sampling_rate_hz <= 0.0f) {
    throw std::invalid_argument("generate_synthetic: nonpositive spec field");
  }
  if (spec.class_separation < 0.0) {
    throw std::invalid_argument("generate_synthetic: negative class_separation");
  }
  EegDataset ds;
  ds.name = spec.name;
  ds.n_channels = spec.n_channels;
  ds.n_timesteps = spec.n_timesteps;
  ds.n_classes = spec.n_classes;
  ds.sampling_rate_hz = spec.sampling_rate_hz;

  // Two designated bands carry the class signal with opposite amplitude
  // trends; two more are class-independent background rhythm.
  const double band_freqs[4] = {10.0, 5.0, 2.0, 19.0};
  const double fs = static_cast<double>(spec.sampling_rate_hz);
  const double tau = 2.0 * 3.14159265358979323846;

  for (int subj = 0; subj < spec.n_subjects; ++subj) {
    CounterRng gain_rng = derive_rng(spec.seed, RngStream::kSynthesis,
                                     0x100000000ull + static_cast<std::uint64_t>(subj));
    std::vector<double> gains(static_cast<std::size_t>(spec.n_channels));
    for (double& g : gains) g = 1.0 + spec.subject_shift * gain_rng.uniform(-1.0, 1.0);

    for (int s = 0; s < spec.samples_per_subject; ++s) {
      EegSample sample;
      sample.subject_id = subj;
      sample.label = s % spec.n_classes;  // balanced within +-1 per subject
      sample.data.resize(static_cast<std::size_t>(spec.n_channels) * spec.n_timesteps);

      const double cls = spec.n_classes > 1
                             ? static_cast<double>(sample.label) / (spec.n_classes - 1)
                             : 0.0;
      double amps[4];
      amps[0] = 1.0 + spec.class_separation * cls;
      amps[1] = 1.0 + spec.class_separation * (1.0 - cls);
      amps[2] = 0.8;
      amps[3] = 0.5;

      CounterRng rng = derive_rng(
          spec.seed, RngStream::kSynthesis,
          static_cast<std::uint64_t>(subj) * 1000003ull + static_cast<std::uint64_t>(s));
      for (int c = 0; c < spec.n_channels; ++c) {
        double phase[4], freq[4];
        for (int bnd = 0; bnd < 4; ++bnd) {
          phase[bnd] = rng.uniform(0.0, tau);
          freq[bnd] = band_freqs[bnd] * (1.0 + 0.05 * rng.uniform(-1.0, 1.0));
        }
        float* row = sample.data.data() + static_cast<std::size_t>(c) * spec.n_timesteps;
        for (int t = 0; t < spec.n_timesteps; ++t) {
          double v = 0.0;
          for (int bnd = 0; bnd < 4; ++bnd) {
            v += amps[bnd] * std::sin(tau * freq[bnd] * t / fs + phase[bnd]);
          }
          row[t] = static_cast<float>(gains[static_cast<std::size_t>(c)] * v + rng.normal());
        }
      }
      ds.samples.push_back(std::move(sample));
    }
  }
  return ds;
}

// --- fold planning -------------------------------------------------------------

const char* protocol_name(Protocol p) { return p == Protocol::kIntra ? "intra" : "inter"; }

Protocol protocol_from_name(const std::string& name) {
  if (name == "intra") return Protocol::kIntra;
  if (name == "inter") return Protocol::kInter;
  throw std::invalid_argument("unknown protocol: " + name);
}

namespace {

template <typename T>
void seeded_shuffle(std::vector<T>& v, CounterRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[static_cast<std::size_t>(rng.next_below(i))]);
  }
}

}  // namespace

FoldPlan make_intra_folds(const EegDataset& dataset, int k, std::uint64_t seed) {
  const int n = static_cast<int>(dataset.samples.size());
  if (k < 2) throw std::invalid_argument("make_intra_folds: need k >= 2");
  if (n < k) {
    throw std::invalid_argument("make_intra_folds: " + std::to_string(n) +
                                " samples cannot fill " + std::to_string(k) + " folds");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  CounterRng rng = derive_rng(seed, RngStream::kShuffle, 0);
  seeded_shuffle(order, rng);

  FoldPlan plan;
  plan.protocol = Protocol::kIntra;
  for (int f = 0; f < k; ++f) {
    const int lo = static_cast<int>(static_cast<std::int64_t>(f) * n / k);
    const int hi = static_cast<int>(static_cast<std::int64_t>(f + 1) * n / k);
    Fold fold;
    fold.test_idx.assign(order.begin() + lo, order.begin() + hi);
    std::vector<int> rest;
    rest.insert(rest.end(), order.begin(), order.begin() + lo);
    rest.insert(rest.end(), order.begin() + hi, order.end());
    const int n_val = (static_cast<int>(rest.size()) + 2) / 4;  // 3:1 train:val
    fold.train_idx.assign(rest.begin(), rest.end() - n_val);
    fold.val_idx.assign(rest.end() - n_val, rest.end());
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

FoldPlan make_inter_folds(const EegDataset& dataset, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("make_inter_folds: need k >= 2");
  std::vector<int> subjects = dataset.subject_ids();
  const int ns = static_cast<int>(subjects.size());
  if (ns < k) {
    throw std::invalid_argument("make_inter_folds: " + std::to_string(ns) +
                                " subjects cannot fill " + std::to_string(k) + " folds");
  }
  CounterRng rng = derive_rng(seed, RngStream::kShuffle, 1);
  seeded_shuffle(subjects, rng);

  FoldPlan plan;
  plan.protocol = Protocol::kInter;
  for (int f = 0; f < k; ++f) {
    const int lo = static_cast<int>(static_cast<std::int64_t>(f) * ns / k);
    const int hi = static_cast<int>(static_cast<std::int64_t>(f + 1) * ns / k);
    std::set<int> test_subj(subjects.begin() + lo, subjects.begin() + hi);
    std::vector<int> rest;
    rest.insert(rest.end(), subjects.begin(), subjects.begin() + lo);
    rest.insert(rest.end(), subjects.begin() + hi, subjects.end());
    if (rest.size() < 2) {
      throw std::invalid_argument("make_inter_folds: too few remaining subjects for train+val");
    }
    const int n_val = std::max(1, (static_cast<int>(rest.size()) + 2) / 4);
    std::set<int> val_subj(rest.end() - n_val, rest.end());
    Fold fold;
    for (int i = 0; i < static_cast<int>(dataset.samples.size()); ++i) {
      const int subj = dataset.samples[static_cast<std::size_t>(i)].subject_id;
      if (test_subj.count(subj)) {
        fold.test_idx.push_back(i);
      } else if (val_subj.count(subj)) {
        fold.val_idx.push_back(i);
      } else {
        fold.train_idx.push_back(i);
      }
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

EegDataset zscore_per_channel(const EegDataset& dataset, bool enabled) {
  if (!enabled) return dataset;
  EegDataset out = dataset;
  int degenerate = 0;
  for (EegSample& s : out.samples) {
    for (int c = 0; c < out.n_channels; ++c) {
      float* row = s.data.data() + static_cast<std::size_t>(c) * out.n_timesteps;
      double mean = 0.0;
      for (int t = 0; t < out.n_timesteps; ++t) mean += row[t];
      mean /= out.n_timesteps;
      double var = 0.0;
      for (int t = 0; t < out.n_timesteps; ++t) {
        const double d = row[t] - mean;
        var += d * d;
      }
      var /= out.n_timesteps;
      if (var == 0.0) {
        ++degenerate;
        for (int t = 0; t < out.n_timesteps; ++t) row[t] = 0.0f;
        continue;
      }
      const double istd = 1.0 / std::sqrt(var);
      for (int t = 0; t < out.n_timesteps; ++t) {
        row[t] = static_cast<float>((row[t] - mean) * istd);
      }
    }
  }
  if (degenerate > 0) {
    std::cerr << "zscore_per_channel: " << degenerate
              << " zero-variance channel(s) left centered at 0\n";
  }
  return out;
}

}  // namespace dgn
