#include "dgn/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <vector>

#include "dgn/data.hpp"
#include "dgn/gradcheck.hpp"
#include "dgn/model.hpp"
#include "dgn/ops.hpp"
#include "dgn/reference.hpp"
#include "dgn/rng.hpp"

namespace dgn {

namespace {

struct OpCheck {
  const char* name;
  std::vector<Shape> shapes;
  TensorFn fn;
};

EegDataset skeleton_dataset(int n_samples, int n_subjects, int n_classes) {
  EegDataset ds;
  ds.name = "skeleton";
  ds.n_channels = 1;
  ds.n_timesteps = 1;
  ds.n_classes = n_classes;
  ds.sampling_rate_hz = 1.0f;
  for (int i = 0; i < n_samples; ++i) {
    EegSample s;
    s.subject_id = i % n_subjects;
    s.label = i % n_classes;
    s.data = {0.0f};
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace

int run_selfcheck(std::ostream& out) {
  bool ok = true;
  auto line = [&](const char* what, bool pass, const std::string& detail) {
    out << (pass ? "PASS" : "FAIL") << "  " << what;
    if (!detail.empty()) out << "  " << detail;
    out << "\n";
    if (!pass) ok = false;
  };

  // Gradient checks, one op at a time.
  std::vector<OpCheck> checks;
  checks.push_back({"relu", {{3, 4}}, [](const std::vector<Tensor>& in) {
                      return ops::relu(in[0]);
                    }});
  checks.push_back({"gelu", {{3, 4}}, [](const std::vector<Tensor>& in) {
                      return ops::gelu(in[0]);
                    }});
  checks.push_back({"leaky_relu", {{3, 4}}, [](const std::vector<Tensor>& in) {
                      return ops::leaky_relu(in[0], 0.01);
                    }});
  checks.push_back({"softmax_lastdim", {{4, 5}}, [](const std::vector<Tensor>& in) {
                      return ops::softmax_lastdim(in[0]);
                    }});
  checks.push_back({"linear", {{2, 3}, {4, 3}, {4}}, [](const std::vector<Tensor>& in) {
                      return ops::linear(in[0], in[1], in[2]);
                    }});
  checks.push_back(
      {"conv1d_grouped k7 g4", {{2, 4, 12}, {8, 1, 7}, {8}}, [](const std::vector<Tensor>& in) {
         return ops::conv1d_grouped(in[0], in[1], in[2], 4, 3);
       }});
  checks.push_back(
      {"conv1d_grouped k3 g1", {{2, 3, 9}, {4, 3, 3}, {4}}, [](const std::vector<Tensor>& in) {
         return ops::conv1d_grouped(in[0], in[1], in[2], 1, 1);
       }});
  checks.push_back({"batchnorm1d train", {{4, 3, 5}, {3}, {3}}, [](const std::vector<Tensor>& in) {
                      Tensor rm = Tensor::zeros({3});
                      Tensor rv = Tensor::full({3}, 1.0);
                      return ops::batchnorm1d(in[0], in[1], in[2], rm, rv, true);
                    }});
  checks.push_back({"layernorm_lastdim", {{3, 2, 4}, {2, 4}, {2, 4}},
                    [](const std::vector<Tensor>& in) {
                      return ops::layernorm_lastdim(in[0], in[1], in[2]);
                    }});
  checks.push_back({"avg_pool_time", {{2, 3, 2, 6}}, [](const std::vector<Tensor>& in) {
                      return ops::avg_pool_time(in[0]);
                    }});
  checks.push_back({"concat_channels", {{2, 2, 5}, {2, 3, 5}}, [](const std::vector<Tensor>& in) {
                      return ops::concat_channels(in[0], in[1]);
                    }});
  checks.push_back({"dropout p=0.5", {{6, 8}}, [](const std::vector<Tensor>& in) {
                      CounterRng rng(99, RngStream::kDropout);  // same mask every call
                      return ops::dropout(in[0], 0.5, true, rng);
                    }});
  checks.push_back({"cross_entropy_loss", {{4, 3}}, [](const std::vector<Tensor>& in) {
                      return ops::cross_entropy_loss(in[0], {0, 2, 1, 2});
                    }});
  checks.push_back({"bidirectional_delta", {{2, 3, 8}}, [](const std::vector<Tensor>& in) {
                      return bidirectional_delta(in[0], 2);
                    }});

  for (const OpCheck& c : checks) {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      worst = std::max(worst, grad_check(c.fn, c.shapes, seed).max_rel_error);
    }
    std::ostringstream detail;
    detail << "max rel grad error " << std::scientific << std::setprecision(2) << worst;
    line(c.name, worst <= 1e-4, detail.str());
  }

  // Convolution brute-force oracle, exact equality.
  {
    CounterRng rng(7, RngStream::kSynthesis);
    int failures = 0;
    const int cases = 200;
    for (int i = 0; i < cases; ++i) {
      const int B = 1 + static_cast<int>(rng.next_below(3));
      const int G = 1 + static_cast<int>(rng.next_below(4));
      const int Cin = G * (1 + static_cast<int>(rng.next_below(2)));
      const int Cout = G * (1 + static_cast<int>(rng.next_below(2)));
      const int K = 1 + static_cast<int>(rng.next_below(5));
      const int T = K + static_cast<int>(rng.next_below(6));
      const int P = static_cast<int>(rng.next_below(3));
      Tensor x = Tensor::zeros({B, Cin, T});
      Tensor w = Tensor::zeros({Cout, Cin / G, K});
      Tensor b = Tensor::zeros({Cout});
      for (double& v : x.values()) v = rng.uniform(-2.0, 2.0);
      for (double& v : w.values()) v = rng.uniform(-2.0, 2.0);
      for (double& v : b.values()) v = rng.uniform(-2.0, 2.0);
      Tensor got = ops::conv1d_grouped(x, w, b, G, P);
      Tensor want = conv1d_grouped_reference(x, w, b, G, P);
      if (got.values() != want.values()) ++failures;
    }
    line("conv oracle", failures == 0,
         std::to_string(cases - failures) + "/" + std::to_string(cases) + " exact");
  }

  // Delta identities.
  {
    CounterRng rng(11, RngStream::kSynthesis);
    bool pass = true;
    Tensor x = Tensor::zeros({2, 3, 16});
    for (double& v : x.values()) v = rng.uniform(-2.0, 2.0);
    const int S = 1;
    Tensor d = bidirectional_delta(x, S);
    const int C = 3, To = 16 - S;
    for (int b = 0; b < 2 && pass; ++b) {
      for (int c = 0; c < C && pass; ++c) {
        for (int t = 0; t < To; ++t) {
          const double pos = d.values()[(static_cast<std::size_t>(b) * 2 * C + c) * To + t];
          const double neg = d.values()[(static_cast<std::size_t>(b) * 2 * C + C + c) * To + t];
          const double raw =
              store_round(x.values()[(static_cast<std::size_t>(b) * C + c) * 16 + t + S] -
                              x.values()[(static_cast<std::size_t>(b) * C + c) * 16 + t],
                          current_precision());
          if (pos * neg != 0.0 || pos - neg != raw) {
            pass = false;
            break;
          }
        }
      }
    }
    ModelConfig cfg;
    cfg.n_channels = 3;
    cfg.n_timesteps = 16;
    cfg.n_classes = 2;
    cfg.hidden_depth = 2;
    cfg.mlp_hidden = 8;
    pass = pass && param_count(cfg) > 0;
    line("delta identities", pass, "pos*neg==0, pos-neg==dx, zero params");
  }

  // Fold-plan invariants on randomized skeleton datasets.
  {
    CounterRng rng(13, RngStream::kSynthesis);
    bool pass = true;
    for (int i = 0; i < 50 && pass; ++i) {
      const int n = 40 + static_cast<int>(rng.next_below(200));
      const int subs = 5 + static_cast<int>(rng.next_below(10));
      EegDataset ds = skeleton_dataset(n, subs, 2);
      FoldPlan intra = make_intra_folds(ds, 5, rng.next_u64());
      std::vector<int> seen(static_cast<std::size_t>(n), 0);
      for (const Fold& f : intra.folds) {
        std::set<int> all;
        for (int ix : f.train_idx) all.insert(ix);
        for (int ix : f.val_idx) all.insert(ix);
        for (int ix : f.test_idx) {
          all.insert(ix);
          ++seen[static_cast<std::size_t>(ix)];
        }
        if (static_cast<int>(all.size()) != n) pass = false;
        if (std::abs(static_cast<double>(f.train_idx.size()) - 0.6 * n) > 1.0 + 1e-9) pass = false;
        if (std::abs(static_cast<double>(f.val_idx.size()) - 0.2 * n) > 1.0 + 1e-9) pass = false;
        if (std::abs(static_cast<double>(f.test_idx.size()) - 0.2 * n) > 1.0 + 1e-9) pass = false;
      }
      for (int s : seen) {
        if (s != 1) pass = false;
      }
      FoldPlan inter = make_inter_folds(ds, 5, rng.next_u64());
      for (const Fold& f : inter.folds) {
        std::set<int> trainval_subj, test_subj;
        for (int ix : f.train_idx) trainval_subj.insert(ds.samples[static_cast<std::size_t>(ix)].subject_id);
        for (int ix : f.val_idx) trainval_subj.insert(ds.samples[static_cast<std::size_t>(ix)].subject_id);
        for (int ix : f.test_idx) test_subj.insert(ds.samples[static_cast<std::size_t>(ix)].subject_id);
        for (int s : test_subj) {
          if (trainval_subj.count(s)) pass = false;
        }
      }
    }
    line("fold invariants", pass, "50 randomized datasets");
  }

  out << (ok ? "selfcheck: all checks passed\n" : "selfcheck: FAILURES detected\n");
  return ok ? 0 : 1;
}

}  // namespace dgn
