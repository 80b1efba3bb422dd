#include "conetest/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <thread>

#include "conetest/rng.hpp"

namespace conetest {

namespace {

constexpr char kCacheMagic[8] = {'D', 'C', 'N', 'U', 'L', 'L', '0', '1'};
constexpr std::uint32_t kCacheVersion = 1;

void hash_bytes(std::uint64_t& h, const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;  // FNV-1a
  }
}

void hash_matrix(std::uint64_t& h, const Matrix& m) {
  const std::int64_t r = m.rows(), c = m.cols();
  hash_bytes(h, &r, sizeof r);
  hash_bytes(h, &c, sizeof c);
  if (m.size() > 0) hash_bytes(h, m.data(), sizeof(double) * m.size());
}

}  // namespace

double NullDistribution::critical_value(double alpha) const {
  if (samples.empty()) return 0.0;
  const int n = static_cast<int>(samples.size());
  int idx = static_cast<int>(std::ceil((1.0 - alpha) * (n + 1)));
  idx = std::clamp(idx, 1, n);
  return samples[idx - 1];
}

double NullDistribution::p_value(double t) const {
  const auto it = std::lower_bound(samples.begin(), samples.end(), t);
  const auto count = samples.end() - it;
  return (1.0 + static_cast<double>(count)) / (1.0 + samples.size());
}

double statistic_value(const Vector& y, const std::vector<ConeSpec>& coneFamily,
                       const Matrix& nullBasis) {
  const Vector fitS = nullBasis * (nullBasis.transpose() * y);
  const double sse0 = (y - fitS).squaredNorm();
  if (sse0 <= 1e-12 * y.squaredNorm())
    throw ConeError("degenerate: y in S, zero residual under H0");
  double best = 0.0;
  for (const auto& cone : coneFamily) {
    const ProjectionResult p = project_cone(y, cone);
    best = std::max(best, (p.fit - fitS).squaredNorm() / sse0);
  }
  return best;
}

TestOutcome statistic_T(const Vector& y, const std::vector<ConeSpec>& coneFamily,
                        const Matrix& nullBasis) {
  if (coneFamily.empty()) throw ConeError("empty cone family");
  TestOutcome out;
  out.fitS = nullBasis * (nullBasis.transpose() * y);
  out.sse0 = (y - out.fitS).squaredNorm();
  if (out.sse0 <= 1e-12 * y.squaredNorm())
    throw ConeError("degenerate: y in S, zero residual under H0");

  out.components.reserve(coneFamily.size());
  for (size_t j = 0; j < coneFamily.size(); ++j) {
    const ProjectionResult p = project_cone(y, coneFamily[j]);
    out.coneFits.push_back(p.fit);
    out.components.push_back((p.fit - out.fitS).squaredNorm() / out.sse0);
    if (out.components[j] > out.components[out.argmaxCone])
      out.argmaxCone = static_cast<int>(j);
  }
  out.T = out.components[out.argmaxCone];
  out.argmaxLabel = coneFamily[out.argmaxCone].label;
  return out;
}

int simulation_workers() {
  if (const char* env = std::getenv("CONETEST_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {
thread_local bool g_insideParallelFor = false;
}

void parallel_for(int count, const std::function<void(int)>& fn) {
  const int workers = std::min(simulation_workers(), std::max(count, 1));
  // Nested calls (a parallel power study running parallel null simulations)
  // execute serially inside the owning worker.
  if (workers <= 1 || g_insideParallelFor) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      g_insideParallelFor = true;
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

namespace {

NullDistribution simulate_null(const std::vector<ConeSpec>& coneFamily,
                               const Matrix& nullBasis, int nsim,
                               std::uint64_t seed, NullProvenance provenance,
                               const Vector* residuals) {
  if (nsim < 1) throw ConeError("nsim must be at least 1");
  const int n = static_cast<int>(nullBasis.rows());
  NullDistribution dist;
  dist.samples.resize(nsim);
  dist.seed = seed;
  dist.nsim = nsim;
  dist.provenance = provenance;

  parallel_for(nsim, [&](int i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    Vector eps(n);
    if (residuals == nullptr) {
      for (int j = 0; j < n; ++j) eps(j) = rng.next_normal();
    } else {
      const auto m = static_cast<std::uint64_t>(residuals->size());
      for (int j = 0; j < n; ++j)
        eps(j) = (*residuals)(static_cast<Eigen::Index>(rng.next_below(m)));
    }
    dist.samples[i] = statistic_value(eps, coneFamily, nullBasis);
  });
  std::sort(dist.samples.begin(), dist.samples.end());
  return dist;
}

}  // namespace

NullDistribution simulate_null_knownG(const std::vector<ConeSpec>& coneFamily,
                                      const Matrix& nullBasis, int nsim,
                                      std::uint64_t seed) {
  NullDistribution d = simulate_null(coneFamily, nullBasis, nsim, seed,
                                     NullProvenance::KnownG, nullptr);
  d.coneSetHash = cone_set_hash(coneFamily, nullBasis, NullMode::KnownGaussian,
                                nullptr, nsim, seed);
  return d;
}

Vector standardized_residuals(const Vector& y, const Matrix& nullBasis) {
  const int n = static_cast<int>(y.size());
  if (n < static_cast<int>(nullBasis.cols()) + 2)
    throw ConeError("need n >= k + 2 observations to standardize residuals");
  Vector r = y - nullBasis * (nullBasis.transpose() * y);
  r.array() -= r.mean();
  const double sd = std::sqrt(r.squaredNorm() / n);
  if (sd <= 1e-12 * std::max(1.0, y.norm()))
    throw ConeError("zero residual variance");
  return r / sd;
}

NullDistribution simulate_null_bootstrap(const std::vector<ConeSpec>& coneFamily,
                                         const Matrix& nullBasis,
                                         const Vector& residuals, int nsim,
                                         std::uint64_t seed) {
  NullDistribution d = simulate_null(coneFamily, nullBasis, nsim, seed,
                                     NullProvenance::Bootstrap, &residuals);
  d.coneSetHash = cone_set_hash(coneFamily, nullBasis, NullMode::Bootstrap,
                                &residuals, nsim, seed);
  return d;
}

TestOutcome run_test(const Dataset& data, const std::vector<ConeSpec>& coneFamily,
                     const Matrix& nullBasis, double alpha, int nsim,
                     std::uint64_t seed, NullMode mode,
                     const NullDistribution* cachedNull) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConeError("alpha must be in (0,1)");
  TestOutcome out = statistic_T(data.y, coneFamily, nullBasis);

  NullDistribution local;
  const NullDistribution* dist = cachedNull;
  if (dist == nullptr) {
    if (mode == NullMode::KnownGaussian) {
      local = simulate_null_knownG(coneFamily, nullBasis, nsim, seed);
    } else {
      const Vector r = standardized_residuals(data.y, nullBasis);
      local = simulate_null_bootstrap(coneFamily, nullBasis, r, nsim, seed);
    }
    dist = &local;
  }

  out.alpha = alpha;
  out.pValue = dist->p_value(out.T);
  out.criticalValue = dist->critical_value(alpha);
  out.nullProvenance = dist->provenance;
  out.reject = out.T > out.criticalValue;
  return out;
}

std::uint64_t cone_set_hash(const std::vector<ConeSpec>& coneFamily,
                            const Matrix& nullBasis, NullMode mode,
                            const Vector* residuals, int nsim,
                            std::uint64_t seed) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  const std::uint32_t tag = mode == NullMode::KnownGaussian ? 1u : 2u;
  hash_bytes(h, &tag, sizeof tag);
  hash_bytes(h, &nsim, sizeof nsim);
  hash_bytes(h, &seed, sizeof seed);
  hash_matrix(h, nullBasis);
  for (const auto& cone : coneFamily) {
    hash_matrix(h, cone.A);
    hash_matrix(h, cone.B);
    if (cone.generators) hash_matrix(h, *cone.generators);
  }
  if (residuals != nullptr && residuals->size() > 0)
    hash_bytes(h, residuals->data(), sizeof(double) * residuals->size());
  return h;
}

void save_null_distribution(const NullDistribution& dist,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConeError("cannot write null cache: " + path);
  out.write(kCacheMagic, sizeof kCacheMagic);
  const std::uint32_t version = kCacheVersion;
  const std::uint64_t nsim = static_cast<std::uint64_t>(dist.nsim);
  const std::uint8_t prov =
      dist.provenance == NullProvenance::KnownG ? 0 : 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&dist.coneSetHash),
            sizeof dist.coneSetHash);
  out.write(reinterpret_cast<const char*>(&dist.seed), sizeof dist.seed);
  out.write(reinterpret_cast<const char*>(&nsim), sizeof nsim);
  out.write(reinterpret_cast<const char*>(&prov), sizeof prov);
  out.write(reinterpret_cast<const char*>(dist.samples.data()),
            static_cast<std::streamsize>(sizeof(double) * dist.samples.size()));
  if (!out) throw ConeError("failed writing null cache: " + path);
}

std::optional<NullDistribution> load_null_distribution(
    const std::string& path, std::uint64_t expectedHash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t hash = 0, seed = 0, nsim = 0;
  std::uint8_t prov = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&hash), sizeof hash);
  in.read(reinterpret_cast<char*>(&seed), sizeof seed);
  in.read(reinterpret_cast<char*>(&nsim), sizeof nsim);
  in.read(reinterpret_cast<char*>(&prov), sizeof prov);
  if (!in || std::memcmp(magic, kCacheMagic, sizeof magic) != 0 ||
      version != kCacheVersion || hash != expectedHash)
    return std::nullopt;
  NullDistribution dist;
  dist.coneSetHash = hash;
  dist.seed = seed;
  dist.nsim = static_cast<int>(nsim);
  dist.provenance = prov == 0 ? NullProvenance::KnownG : NullProvenance::Bootstrap;
  dist.samples.resize(nsim);
  in.read(reinterpret_cast<char*>(dist.samples.data()),
          static_cast<std::streamsize>(sizeof(double) * nsim));
  if (!in) return std::nullopt;
  return dist;
}

}  // namespace conetest
