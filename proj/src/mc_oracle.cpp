#include "levy_sigkernel/mc_oracle.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "levy_sigkernel/csv.hpp"
#include "levy_sigkernel/errors.hpp"
#include "levy_sigkernel/parallel.hpp"

namespace levy_sigkernel {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
constexpr std::size_t kChunk = 1024;
constexpr double kMaxJumpsPerInterval = 1e6;

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

// Triplet cut at time t.
LevyTriplet restrict_to(const LevyTriplet& triplet, double t) {
  triplet.validate();
  const double T = triplet.horizon();
  if (!(t > 0.0) || t > T * (1.0 + 1e-12)) {
    throw OutOfRange("time " + std::to_string(t) + " outside (0, " + std::to_string(T) + "]");
  }
  LevyTriplet out = triplet;
  out.time_grid = {0.0};
  out.intervals.clear();
  for (std::size_t i = 0; i + 1 < triplet.time_grid.size() && triplet.time_grid[i] < t; ++i) {
    out.time_grid.push_back(std::min(triplet.time_grid[i + 1], t));
    out.intervals.push_back(triplet.intervals[i]);
  }
  out.time_grid.back() = t;
  return out;
}

struct IntervalSampler {
  TruncatedTensor drift;  // compensated drift, state depth
  Eigen::MatrixXd diffusion_root;
  JumpKind kind = JumpKind::None;
  double rate = 0.0;
  std::vector<double> weights;
  std::vector<TruncatedTensor> atoms;
  Eigen::MatrixXd jump_root;
};

IntervalSampler make_sampler(const TripletInterval& iv) {
  IntervalSampler s;
  s.drift = iv.drift;
  s.diffusion_root = psd_sqrt(iv.diffusion);
  s.kind = iv.jumps.kind;
  if (s.kind == JumpKind::Atomic) {
    for (const auto& atom : iv.jumps.atoms) {
      if (atom.weight <= 0.0) continue;
      s.rate += atom.weight;
      s.weights.push_back(atom.weight);
      s.atoms.push_back(atom.x);
      if (norm_max(atom.x) <= 1.0) s.drift -= atom.x * atom.weight;
    }
  } else if (s.kind == JumpKind::GaussianCP) {
    s.rate = iv.jumps.intensity;
    s.jump_root = psd_sqrt(iv.jumps.covariance);
  }
  return s;
}

// Welford summaries of a vector statistic, merged along a fixed tree.
struct Moments {
  double n = 0.0;
  std::vector<double> mean, m2;

  explicit Moments(std::size_t size = 0) : mean(size, 0.0), m2(size, 0.0) {}

  void add(const std::vector<double>& x) {
    n += 1.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double delta = x[i] - mean[i];
      mean[i] += delta / n;
      m2[i] += delta * (x[i] - mean[i]);
    }
  }

  static Moments merge(const Moments& a, const Moments& b) {
    if (a.n == 0.0) return b;
    if (b.n == 0.0) return a;
    Moments out(a.mean.size());
    out.n = a.n + b.n;
    for (std::size_t i = 0; i < a.mean.size(); ++i) {
      const double delta = b.mean[i] - a.mean[i];
      out.mean[i] = a.mean[i] + delta * (b.n / out.n);
      out.m2[i] = a.m2[i] + b.m2[i] + delta * delta * (a.n * b.n / out.n);
    }
    return out;
  }
};

Moments tree_reduce(const std::vector<Moments>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return Moments::merge(tree_reduce(parts, lo, mid), tree_reduce(parts, mid, hi));
}

// Runs stat(path index) over n paths in fixed chunks and reduces.
template <class Stat>
Moments chunked_moments(std::size_t n, std::size_t size, int threads, Stat stat) {
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<Moments> parts(n_chunks, Moments(size));
  parallel_for(n_chunks, threads, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) parts[c].add(stat(i));
  });
  return tree_reduce(parts, 0, n_chunks);
}

SignatureEstimate to_estimate(const Moments& m, int dim, int depth) {
  SignatureEstimate e;
  e.n_paths = static_cast<std::size_t>(m.n);
  e.mean = TruncatedTensor(dim, depth);
  e.se = TruncatedTensor(dim, depth);
  for (std::size_t i = 0; i < m.mean.size(); ++i) {
    e.mean.data()[i] = m.mean[i];
    e.se.data()[i] = m.n > 1.0 ? std::sqrt(m.m2[i] / (m.n - 1.0) / m.n) : 0.0;
  }
  e.level_se = level_norms(e.se);
  return e;
}

std::vector<double> coefficients(const TruncatedTensor& x) {
  return std::vector<double>(x.data().begin(), x.data().end());
}

void check_counts(std::size_t n_paths, const SimulationOptions& options) {
  if (n_paths < 1) throw InvalidParameter("n_paths must be >= 1");
  if (options.steps_per_interval < 1) throw InvalidParameter("steps_per_interval must be >= 1");
}

}  // namespace

Philox4x32::Block Philox4x32::block(Block ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

Philox4x32 Philox4x32::stream(std::uint64_t seed, std::uint64_t path, std::uint32_t interval,
                              std::uint32_t id) {
  if (path >> 32) throw InvalidParameter("path index exceeds 2^32");
  return Philox4x32({static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
                    {0u, interval, static_cast<std::uint32_t>(path), id});
}

Philox4x32::result_type Philox4x32::operator()() {
  if (used_ == 4) {
    buffer_ = block(counter_, key_);
    ++counter_[0];
    used_ = 0;
  }
  return buffer_[static_cast<std::size_t>(used_++)];
}

PathIncrements simulate_path(const LevyTriplet& triplet, std::uint64_t index,
                             const SimulationOptions& options) {
  if (options.steps_per_interval < 1) throw InvalidParameter("steps_per_interval must be >= 1");
  const int d = triplet.dim;
  PathIncrements out;
  for (std::size_t i = 0; i < triplet.intervals.size(); ++i) {
    const IntervalSampler s = make_sampler(triplet.intervals[i]);
    const double t0 = triplet.time_grid[i], t1 = triplet.time_grid[i + 1];
    if (s.rate * (t1 - t0) > kMaxJumpsPerInterval) {
      throw Unsupported("simulate_path: jump intensity too large to simulate explicitly");
    }
    auto rng = Philox4x32::stream(options.seed, index, static_cast<std::uint32_t>(i), options.stream_id);
    std::normal_distribution<double> normal;
    auto gaussian = [&](const Eigen::MatrixXd& root) {
      Eigen::VectorXd z(d);
      for (int k = 0; k < d; ++k) z[k] = normal(rng);
      return Eigen::VectorXd(root * z);
    };

    // Jump times on [t0, t1).
    std::vector<double> jumps;
    if (s.rate > 0.0) {
      std::exponential_distribution<double> gap(s.rate);
      for (double tau = t0 + gap(rng); tau < t1; tau += gap(rng)) jumps.push_back(tau);
    }
    std::discrete_distribution<std::size_t> pick(s.weights.begin(), s.weights.end());

    auto continuous = [&](double dt) {
      if (dt <= 0.0) return;
      TruncatedTensor x = s.drift * dt;
      const Eigen::VectorXd w = gaussian(s.diffusion_root) * std::sqrt(dt);
      for (int k = 0; k < d; ++k) x.level(1)[static_cast<std::size_t>(k)] += w[k];
      out.push_back(std::move(x));
    };
    auto jump = [&] {
      if (s.kind == JumpKind::Atomic) {
        out.push_back(s.atoms[pick(rng)]);
      } else {
        TruncatedTensor x(d, triplet.state_depth);
        const Eigen::VectorXd w = gaussian(s.jump_root);
        for (int k = 0; k < d; ++k) x.level(1)[static_cast<std::size_t>(k)] = w[k];
        out.push_back(std::move(x));
      }
    };

    const int steps = options.steps_per_interval;
    std::size_t next = 0;
    for (int k = 0; k < steps; ++k) {
      const double a = t0 + (t1 - t0) * k / steps;
      const double b = k + 1 == steps ? t1 : t0 + (t1 - t0) * (k + 1) / steps;
      double cursor = a;
      while (next < jumps.size() && jumps[next] < b) {
        continuous(jumps[next] - cursor);
        jump();
        cursor = jumps[next++];
      }
      continuous(b - cursor);
    }
  }
  return out;
}

std::vector<PathIncrements> simulate_paths(const LevyTriplet& triplet, std::size_t n_paths,
                                           const SimulationOptions& options) {
  check_counts(n_paths, options);
  triplet.validate();
  std::vector<PathIncrements> out(n_paths);
  parallel_for(n_paths, options.threads, [&](std::size_t i) { out[i] = simulate_path(triplet, i, options); });
  return out;
}

TruncatedTensor path_signature(const PathIncrements& increments, int depth) {
  if (increments.empty()) throw InvalidParameter("path_signature: no increments");
  auto out = TruncatedTensor::scalar(increments.front().dim(), depth, 1.0);
  for (const auto& x : increments) out = tensor_mul(out, exp_tensor(truncate(x, depth)), depth);
  return out;
}

SignatureEstimate estimate_expected_signature(const LevyTriplet& triplet, double t, int depth,
                                              std::size_t n_paths,
                                              const SimulationOptions& options) {
  check_counts(n_paths, options);
  const LevyTriplet cut = restrict_to(triplet, t);
  const std::size_t size = TruncatedTensor(triplet.dim, depth).size();
  const Moments m = chunked_moments(n_paths, size, options.threads, [&](std::size_t i) {
    return coefficients(path_signature(simulate_path(cut, i, options), depth));
  });
  return to_estimate(m, triplet.dim, depth);
}

KernelEstimate estimate_kernel(const LevyTriplet& a, const LevyTriplet& b, double t, int depth,
                               std::size_t n_paths, const SimulationOptions& options) {
  if (a.dim != b.dim) throw DimMismatch("estimate_kernel: dimensions differ");
  SimulationOptions oa = options, ob = options;
  oa.stream_id = 2 * options.stream_id;
  ob.stream_id = 2 * options.stream_id + 1;
  const auto ea = estimate_expected_signature(a, t, depth, n_paths, oa);
  const auto eb = estimate_expected_signature(b, t, depth, n_paths, ob);
  // Second pass: the same paths projected on the other mean.
  auto projected = [&](const LevyTriplet& tr, const SimulationOptions& o, const TruncatedTensor& other) {
    const LevyTriplet cut = restrict_to(tr, t);
    const Moments m = chunked_moments(n_paths, 1, o.threads, [&](std::size_t i) {
      return std::vector<double>{inner_product(path_signature(simulate_path(cut, i, o), depth), other)};
    });
    return n_paths > 1 ? m.m2[0] / (m.n - 1.0) / m.n : 0.0;
  };
  KernelEstimate out;
  out.value = inner_product(ea.mean, eb.mean);
  out.se = std::sqrt(projected(a, oa, eb.mean) + projected(b, ob, ea.mean));
  return out;
}

void write_signature_csv(std::ostream& out, const SignatureEstimate& estimate) {
  write_csv_row(out, {"word", "mean", "se"});
  const int d = estimate.mean.dim();
  for (int n = 0; n <= estimate.mean.depth(); ++n) {
    const auto mean = estimate.mean.level(n);
    const auto se = estimate.se.level(n);
    for (std::size_t i = 0; i < mean.size(); ++i) {
      std::string word;
      for (int letter : index_word(i, n, d)) {
        if (!word.empty()) word += '.';
        word += std::to_string(letter);
      }
      write_csv_row(out, {word, format_double(mean[i]), format_double(se[i])});
    }
  }
}

}  // namespace levy_sigkernel
