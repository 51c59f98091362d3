#include "inbo/bm_sim.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "inbo/rng.hpp"

namespace inbo {

namespace {

struct StepSchedule {
  std::vector<std::int64_t> steps;  // time_grid[k] / dt, validated
  std::int64_t total = 0;
};

StepSchedule validate_config(const BMConfig& cfg) {
  if (cfg.n_paths <= 0) throw ConfigError("n_paths must be positive");
  if (!(cfg.step_dt > 0.0)) throw ConfigError("step_dt must be positive");
  if (cfg.max_reflect_attempts <= 0) throw ConfigError("max_reflect_attempts must be positive");
  if (cfg.time_grid.empty()) throw ConfigError("time_grid must be nonempty");
  StepSchedule sched;
  sched.steps.reserve(cfg.time_grid.size());
  double prev = -1.0;
  for (double t : cfg.time_grid) {
    if (t < 0.0) throw ConfigError("time_grid entries must be nonnegative");
    if (t <= prev) throw ConfigError("time_grid must be strictly increasing");
    prev = t;
    const double ratio = t / cfg.step_dt;
    const std::int64_t k = std::llround(ratio);
    if (std::fabs(ratio - static_cast<double>(k)) > 1e-6 * std::max(1.0, ratio)) {
      std::ostringstream os;
      os << "time_grid entry " << t << " is not an integer multiple of step_dt";
      throw ConfigError(os.str());
    }
    if (!sched.steps.empty() && k <= sched.steps.back()) {
      throw ConfigError("time_grid entries collapse to the same step count");
    }
    sched.steps.push_back(k);
  }
  sched.total = sched.steps.back();
  if (sched.total > 10'000'000) throw ConfigError("time_grid end exceeds 1e7 steps");
  return sched;
}

// Branchy wrap for values at most a few turns outside [0, 2*pi); avoids fmod
// in the hot loop.
inline double fast_wrap(double a) {
  while (a < 0.0) a += kTwoPi;
  while (a >= kTwoPi) a -= kTwoPi;
  return a;
}

// Local chart models for the hot loop. Each prepares per-step coefficients
// once and reuses them across reflection resamples. They must agree with the
// public geometry operations (tested against them).
struct PlaneModel {
  const PlanarDomainIndex* index;
  double bound_sq = 0.0;  // (10 sqrt(dt lambda_max(g^-1)))^2, lambda_max = 1

  struct Ctx {};
  void init(double dt) { bound_sq = 100.0 * dt; }
  Ctx prepare(const Vec2&, double, double) const { return {}; }
  Vec2 propose(const Vec2& x, const Ctx&, double sqrt_dt, NormalSampler& rng) const {
    return Vec2(x.x() + sqrt_dt * rng.next(), x.y() + sqrt_dt * rng.next());
  }
  double step_bound_sq(const Ctx&) const { return bound_sq; }
  bool inside(const Vec2& p) const { return index->contains(p); }
  static Vec2 reduce(const Vec2& p) { return p; }
};

struct TorusModel {
  BittenTorus torus;

  struct Ctx {
    double drift_theta_dt;
    double sd_theta;  // sqrt_dt / r
    double sd_phi;    // sqrt_dt / |R + r cos theta|
    double bound_sq;
  };
  void init(double) {}
  Ctx prepare(const Vec2& x, double dt, double sqrt_dt) const {
    const double r = torus.tube_radius;
    const double a = torus.major_radius + r * std::cos(x.x());
    Ctx ctx;
    ctx.drift_theta_dt = -0.5 * std::sin(x.x()) / (r * a) * dt;
    ctx.sd_theta = sqrt_dt / r;
    ctx.sd_phi = sqrt_dt / std::fabs(a);
    const double lambda_max = std::max(1.0 / (r * r), 1.0 / (a * a));
    ctx.bound_sq = 100.0 * dt * lambda_max;
    return ctx;
  }
  Vec2 propose(const Vec2& x, const Ctx& ctx, double, NormalSampler& rng) const {
    return Vec2(x.x() + ctx.drift_theta_dt + ctx.sd_theta * rng.next(),
                x.y() + ctx.sd_phi * rng.next());
  }
  double step_bound_sq(const Ctx& ctx) const { return ctx.bound_sq; }
  bool inside(const Vec2& p) const {
    if (!torus.has_bite()) return true;
    const double u = fast_wrap(p.y() - torus.bite_lo);
    const double width = torus.bite_width();
    return !(u > kBoundaryTol && u < width - kBoundaryTol);
  }
  static Vec2 reduce(const Vec2& p) { return Vec2(fast_wrap(p.x()), fast_wrap(p.y())); }
};

struct PathFailure {
  int path = -1;
  std::int64_t step = 0;
};

template <class Model>
void run_paths(const Model& model, const Vec2& start, const BMConfig& cfg,
               const StepSchedule& sched, int start_index, int path_begin,
               int path_end, std::vector<Eigen::Matrix2Xd>& snapshots,
               std::uint64_t& large_steps, std::uint64_t& reflect_resamples,
               PathFailure& failure) {
  const double dt = cfg.step_dt;
  const double sqrt_dt = std::sqrt(dt);
  for (int n = path_begin; n < path_end; ++n) {
    NormalSampler rng(stream_key(cfg.seed, static_cast<std::uint64_t>(start_index),
                                 static_cast<std::uint64_t>(n)));
    Vec2 x = Model::reduce(start);
    std::size_t k = 0;
    while (k < sched.steps.size() && sched.steps[k] == 0) {
      snapshots[k].col(n) = x;
      ++k;
    }
    for (std::int64_t s = 1; s <= sched.total && k < sched.steps.size(); ++s) {
      const auto ctx = model.prepare(x, dt, sqrt_dt);
      Vec2 proposal = model.propose(x, ctx, sqrt_dt, rng);
      int attempts = 0;
      while (!model.inside(proposal)) {
        if (++attempts > cfg.max_reflect_attempts) {
          failure = PathFailure{n, s};
          return;
        }
        proposal = model.propose(x, ctx, sqrt_dt, rng);
      }
      reflect_resamples += static_cast<std::uint64_t>(attempts);
      // the raw proposal step is the chart displacement; reduction only wraps
      if ((proposal - x).squaredNorm() > model.step_bound_sq(ctx)) ++large_steps;
      x = Model::reduce(proposal);
      if (s == sched.steps[k]) {
        snapshots[k].col(n) = x;
        ++k;
      }
    }
  }
}

template <class Model>
void simulate_all(const Model& model, const Vec2& start, const BMConfig& cfg,
                  const StepSchedule& sched, int start_index,
                  PathEnsemble& out) {
  const int n_paths = cfg.n_paths;
  unsigned hw = std::thread::hardware_concurrency();
  int n_threads = static_cast<int>(std::min<unsigned>(hw == 0 ? 1 : hw, 8));
  n_threads = std::min(n_threads, n_paths);

  std::vector<std::uint64_t> large(n_threads, 0), resamples(n_threads, 0);
  std::vector<PathFailure> failures(n_threads);
  std::vector<std::thread> workers;
  const int chunk = (n_paths + n_threads - 1) / n_threads;
  for (int w = 0; w < n_threads; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(n_paths, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([&, w, lo, hi] {
      run_paths(model, start, cfg, sched, start_index, lo, hi, out.snapshots,
                large[w], resamples[w], failures[w]);
    });
  }
  for (auto& t : workers) t.join();
  for (int w = 0; w < n_threads; ++w) {
    out.n_large_steps += large[w];
    out.n_reflect_resamples += resamples[w];
    if (failures[w].path >= 0) {
      std::ostringstream os;
      os << "reflection resampling exhausted after " << cfg.max_reflect_attempts
         << " attempts (start " << start_index << ", path " << failures[w].path
         << ", step " << failures[w].step
         << "); start may sit in a sliver region or step_dt is too large";
      throw ReflectionError(os.str());
    }
  }
  out.n_steps_total =
      static_cast<std::uint64_t>(sched.total) * static_cast<std::uint64_t>(n_paths);
}

}  // namespace

PathEnsemble simulate_ensemble(const ManifoldSpec& spec, const Vec2& start,
                               const BMConfig& cfg, int start_index) {
  const StepSchedule sched = validate_config(cfg);
  if (!contains(spec, start)) throw DomainError("simulate_ensemble: start point outside domain");

  PathEnsemble out;
  out.start = reduce_to_chart(spec, start);
  out.start_index = start_index;
  out.config = cfg;
  out.snapshots.assign(cfg.time_grid.size(), Eigen::Matrix2Xd(2, cfg.n_paths));

  if (spec.is_plane()) {
    PlanarDomainIndex index(spec.plane_spec().boundary);
    PlaneModel model{&index};
    model.init(cfg.step_dt);
    simulate_all(model, out.start, cfg, sched, start_index, out);
  } else {
    TorusModel model{spec.torus_spec()};
    model.init(cfg.step_dt);
    simulate_all(model, out.start, cfg, sched, start_index, out);
  }
  return out;
}

int time_index(const std::vector<double>& time_grid, double t) {
  for (std::size_t k = 0; k < time_grid.size(); ++k) {
    if (std::fabs(time_grid[k] - t) <= 1e-9 * std::max(1.0, std::fabs(t))) {
      return static_cast<int>(k);
    }
  }
  std::ostringstream os;
  os << "time " << t << " is not in the snapshot grid";
  throw LookupError(os.str());
}

const Eigen::Matrix2Xd& snapshot(const PathEnsemble& ensemble, double t) {
  return ensemble.snapshots[static_cast<std::size_t>(
      time_index(ensemble.config.time_grid, t))];
}

// --- cache ---

namespace {

constexpr std::uint64_t kCacheMagic = 0x31534e45'4f424e49ull;  // "INBOENS1"

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw IoError("ensemble cache truncated");
  return v;
}

}  // namespace

std::uint64_t ensemble_cache_key(const ManifoldSpec& spec, const Vec2& start,
                                 const BMConfig& cfg, int start_index) {
  std::ostringstream os;
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g,", v);
    os << buf;
  };
  os << spec.canonical_string() << "|start:";
  put(start.x());
  put(start.y());
  os << "|idx:" << start_index << "|cfg:" << cfg.n_paths << ",";
  put(cfg.step_dt);
  os << cfg.seed << "," << cfg.max_reflect_attempts << "|t:";
  for (double t : cfg.time_grid) put(t);
  return fnv1a64(os.str());
}

std::filesystem::path ensemble_cache_path(const std::filesystem::path& dir,
                                          std::uint64_t key) {
  char name[32];
  std::snprintf(name, sizeof name, "ens_%016llx.bin",
                static_cast<unsigned long long>(key));
  return dir / name;
}

void save_ensemble(const PathEnsemble& ensemble, const ManifoldSpec& spec,
                   const std::filesystem::path& file) {
  const std::uint64_t key = ensemble_cache_key(spec, ensemble.start,
                                               ensemble.config, ensemble.start_index);
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open cache file for writing: " + file.string());
  write_pod(os, kCacheMagic);
  write_pod(os, key);
  write_pod(os, static_cast<std::int32_t>(ensemble.start_index));
  write_pod(os, static_cast<std::int32_t>(ensemble.config.n_paths));
  write_pod(os, static_cast<std::int32_t>(ensemble.config.time_grid.size()));
  write_pod(os, ensemble.config.step_dt);
  write_pod(os, ensemble.config.seed);
  write_pod(os, static_cast<std::int32_t>(ensemble.config.max_reflect_attempts));
  write_pod(os, ensemble.start.x());
  write_pod(os, ensemble.start.y());
  for (double t : ensemble.config.time_grid) write_pod(os, t);
  for (const auto& snap : ensemble.snapshots) {
    os.write(reinterpret_cast<const char*>(snap.data()),
             static_cast<std::streamsize>(sizeof(double) * 2 * snap.cols()));
  }
  write_pod(os, ensemble.n_steps_total);
  write_pod(os, ensemble.n_large_steps);
  write_pod(os, ensemble.n_reflect_resamples);
  if (!os) throw IoError("failed writing cache file: " + file.string());
}

PathEnsemble load_ensemble(const ManifoldSpec& spec, const Vec2& start,
                           const BMConfig& cfg, int start_index,
                           const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot open cache file: " + file.string());
  if (read_pod<std::uint64_t>(is) != kCacheMagic) {
    throw InputError("not an ensemble cache file: " + file.string());
  }
  const std::uint64_t stored_key = read_pod<std::uint64_t>(is);
  const std::uint64_t want_key = ensemble_cache_key(spec, start, cfg, start_index);
  if (stored_key != want_key) {
    throw InputError("ensemble cache hash mismatch for " + file.string());
  }
  PathEnsemble out;
  out.start_index = read_pod<std::int32_t>(is);
  out.config.n_paths = read_pod<std::int32_t>(is);
  const int k = read_pod<std::int32_t>(is);
  out.config.step_dt = read_pod<double>(is);
  out.config.seed = read_pod<std::uint64_t>(is);
  out.config.max_reflect_attempts = read_pod<std::int32_t>(is);
  out.start.x() = read_pod<double>(is);
  out.start.y() = read_pod<double>(is);
  out.config.time_grid.resize(k);
  for (int i = 0; i < k; ++i) out.config.time_grid[i] = read_pod<double>(is);
  out.snapshots.assign(k, Eigen::Matrix2Xd(2, out.config.n_paths));
  for (auto& snap : out.snapshots) {
    is.read(reinterpret_cast<char*>(snap.data()),
            static_cast<std::streamsize>(sizeof(double) * 2 * snap.cols()));
    if (!is) throw IoError("ensemble cache truncated: " + file.string());
  }
  out.n_steps_total = read_pod<std::uint64_t>(is);
  out.n_large_steps = read_pod<std::uint64_t>(is);
  out.n_reflect_resamples = read_pod<std::uint64_t>(is);
  return out;
}

}  // namespace inbo
