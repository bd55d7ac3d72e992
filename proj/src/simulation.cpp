#include "svcscale/simulation.hpp"

#include "svcscale/complexity.hpp"
#include "svcscale/eigenbasis.hpp"
#include "svcscale/esf.hpp"
#include "svcscale/fbgwr.hpp"
#include "svcscale/gwr.hpp"
#include "svcscale/reesf.hpp"
#include "svcscale/spatial.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

namespace svcscale {

namespace {

constexpr double kSvcMean0 = 1.0;
constexpr double kSvcMean1 = -2.0;
constexpr double kSvcMean2 = 0.5;
constexpr double kSvcAmplitude1 = 3.0;
constexpr double kNoiseSd = 2.0;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Runs `compute` over units 0..unitCount-1 on `threads` workers and calls
// `flush` strictly in unit order on the calling thread, so every output and
// floating-point reduction is schedule-invariant. Workers claim units in
// order and stop claiming once an abort is requested; claimed units always
// finish. Returns true when every unit was flushed.
template <typename Result>
bool run_units_ordered(int unitCount, int threads, const std::function<bool()>& abortRequested,
                       const std::function<Result(int)>& compute,
                       const std::function<void(int, Result&&)>& flush) {
  threads = std::max(1, threads);
  if (threads == 1 || unitCount <= 1) {
    for (int u = 0; u < unitCount; ++u) {
      if (abortRequested && abortRequested()) return false;
      flush(u, compute(u));
    }
    return true;
  }

  std::mutex mtx;
  std::condition_variable cv;
  std::vector<std::optional<Result>> slots(static_cast<size_t>(unitCount));
  std::atomic<int> nextUnit{0};
  std::atomic<bool> aborted{false};
  int flushed = 0;       // guarded by mtx
  int activeWorkers = 0; // guarded by mtx
  const int window = threads * 4;  // backpressure bound on run-ahead

  auto worker = [&] {
    while (true) {
      if (abortRequested && abortRequested()) aborted.store(true);
      if (aborted.load()) break;
      const int u = nextUnit.fetch_add(1);
      if (u >= unitCount) break;
      {
        std::unique_lock<std::mutex> lk(mtx);
        cv.wait(lk, [&] { return u < flushed + window || aborted.load(); });
      }
      Result r = compute(u);
      {
        std::lock_guard<std::mutex> lk(mtx);
        slots[static_cast<size_t>(u)] = std::move(r);
      }
      cv.notify_all();
    }
    {
      std::lock_guard<std::mutex> lk(mtx);
      --activeWorkers;
    }
    cv.notify_all();
  };

  std::vector<std::thread> pool;
  {
    std::lock_guard<std::mutex> lk(mtx);
    activeWorkers = threads;
  }
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);

  {
    std::unique_lock<std::mutex> lk(mtx);
    while (flushed < unitCount) {
      cv.wait(lk, [&] {
        return slots[static_cast<size_t>(flushed)].has_value() || activeWorkers == 0;
      });
      if (slots[static_cast<size_t>(flushed)].has_value()) {
        Result r = std::move(*slots[static_cast<size_t>(flushed)]);
        slots[static_cast<size_t>(flushed)].reset();
        lk.unlock();
        flush(flushed, std::move(r));
        lk.lock();
        ++flushed;
        cv.notify_all();
      } else if (activeWorkers == 0) {
        break;  // aborted; the next unit in order was never claimed
      }
    }
  }
  for (auto& t : pool) t.join();
  return flushed == unitCount;
}

}  // namespace

void PredictorGenSpec::validate() const {
  if (!(bandwidth >= 0.0) || !std::isfinite(bandwidth))
    throw ConfigError("predictor bandwidth must be nonnegative");
  if (!std::isfinite(spatialRatio)) throw ConfigError("spatial ratio must be finite");
}

VectorXd spatial_moving_average(const MatrixXd& dist, double bandwidth, const VectorXd& eps) {
  if (bandwidth <= 0.0) return eps;
  const ProximityMatrix C = proximity_matrix(dist, bandwidth, true);
  return C.C * eps;
}

VectorXd standardized_moving_average(const MatrixXd& dist, double bandwidth,
                                     const VectorXd& eps) {
  VectorXd field = spatial_moving_average(dist, bandwidth, eps);
  const Index n = field.size();
  field.array() -= field.mean();
  const double sd = std::sqrt(field.squaredNorm() / static_cast<double>(std::max<Index>(n - 1, 1)));
  if (sd > 1e-300) field /= sd;
  return field;
}

VectorXd predictor_from_noise(const MatrixXd& dist, const PredictorGenSpec& spec,
                              const VectorXd& epsNoise, const VectorXd& epsSpatial) {
  spec.validate();
  return (1.0 - spec.spatialRatio) * epsNoise +
         spec.spatialRatio * standardized_moving_average(dist, spec.bandwidth, epsSpatial);
}

VectorXd generate_predictor(const MatrixXd& coords, const PredictorGenSpec& spec,
                            SubstreamRng& rng) {
  const Index n = coords.rows();
  const VectorXd epsNoise = rng.normals(n);
  const VectorXd epsSpatial = rng.normals(n);
  return predictor_from_noise(distance_matrix(coords), spec, epsNoise, epsSpatial);
}

MatrixXd svc_surfaces_from_noise(const MatrixXd& dist, const SvcGenSpec& gen, const VectorXd& e0,
                                 const VectorXd& e1, const VectorXd& e2) {
  const Index n = dist.rows();
  MatrixXd b(n, 3);
  b.col(0) = VectorXd::Constant(n, kSvcMean0) + standardized_moving_average(dist, gen.b0, e0);
  b.col(1) = VectorXd::Constant(n, kSvcMean1) +
             kSvcAmplitude1 * standardized_moving_average(dist, gen.b1, e1);
  b.col(2) = VectorXd::Constant(n, kSvcMean2) + standardized_moving_average(dist, gen.b2, e2);
  return b;
}

GeneratedSvcData generate_svc_dataset(Index n, const SvcGenSpec& gen, const PredictorGenSpec& pred,
                                      const StreamFactory& streams) {
  if (n < 10) throw ConfigError("dataset generator needs N >= 10");
  GeneratedSvcData out;

  SubstreamRng coordRng = streams.make(StreamPurpose::Coords);
  MatrixXd coords(n, 2);
  for (Index i = 0; i < n; ++i) {
    coords(i, 0) = coordRng.normal();
    coords(i, 1) = coordRng.normal();
  }
  out.dist = distance_matrix(coords);

  SubstreamRng p1 = streams.make(StreamPurpose::Predictor1);
  SubstreamRng p2 = streams.make(StreamPurpose::Predictor2);
  const VectorXd x1 = predictor_from_noise(out.dist, pred, p1.normals(n), p1.normals(n));
  const VectorXd x2 = predictor_from_noise(out.dist, pred, p2.normals(n), p2.normals(n));

  SubstreamRng s0 = streams.make(StreamPurpose::Svc0);
  SubstreamRng s1 = streams.make(StreamPurpose::Svc1);
  SubstreamRng s2 = streams.make(StreamPurpose::Svc2);
  out.trueB = svc_surfaces_from_noise(out.dist, gen, s0.normals(n), s1.normals(n), s2.normals(n));

  SubstreamRng noise = streams.make(StreamPurpose::Disturbance);
  MatrixXd X(n, 3);
  X.col(0).setOnes();
  X.col(1) = x1;
  X.col(2) = x2;
  VectorXd y = out.trueB.col(0) + x1.cwiseProduct(out.trueB.col(1)) +
               x2.cwiseProduct(out.trueB.col(2)) + kNoiseSd * noise.normals(n);

  out.data = SpatialDataset::make(std::move(coords), std::move(X), std::move(y));
  return out;
}

AccuracyMetrics rmse_profile(const std::vector<MatrixXd>& trueB,
                             const std::vector<MatrixXd>& estB) {
  if (trueB.empty() || trueB.size() != estB.size())
    throw DataError("rmse_profile needs matching non-empty replicate lists");
  const Index n = trueB.front().rows();
  const Index k = trueB.front().cols();
  MatrixXd sumSq = MatrixXd::Zero(n, k);
  MatrixXd sumAbs = MatrixXd::Zero(n, k);
  MatrixXd sumErr = MatrixXd::Zero(n, k);
  for (size_t r = 0; r < trueB.size(); ++r) {
    if (trueB[r].rows() != n || trueB[r].cols() != k || estB[r].rows() != n ||
        estB[r].cols() != k)
      throw DataError("rmse_profile shape mismatch");
    const MatrixXd err = estB[r] - trueB[r];
    sumSq += err.cwiseProduct(err);
    sumAbs += err.cwiseAbs();
    sumErr += err;
  }
  const double reps = static_cast<double>(trueB.size());
  AccuracyMetrics m;
  m.siteRmse = (sumSq / reps).cwiseSqrt();
  m.siteMae = sumAbs / reps;
  m.siteBias = sumErr / reps;
  m.rmse = m.siteRmse.colwise().mean();
  m.mae = m.siteMae.colwise().mean();
  m.bias = m.siteBias.colwise().mean();
  return m;
}

// ---------------------------------------------------------------------------
// Complexity experiment
// ---------------------------------------------------------------------------

namespace {

struct ComplexityCombo {
  std::string model;
  double p1;
  double p2;  // NaN when unused
};

std::vector<ComplexityCombo> complexity_combos(const ComplexityConfig& c) {
  std::vector<ComplexityCombo> combos;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double b : c.gwrBandwidths) combos.push_back({"gwr", b, nan});
  for (double f : c.gwraFractions) combos.push_back({"gwra", f, nan});
  for (double q : c.esfRatios) combos.push_back({"esf", q, nan});
  for (double a : c.reesfAlphas)
    for (double s : c.reesfSigmas) combos.push_back({"reesf", a, s});
  return combos;
}

struct ComplexityUnit {
  std::vector<double> pStar;
  std::vector<int> singular;
  double gwrSeconds = 0, gwraSeconds = 0, esfSeconds = 0, reesfSeconds = 0;
};

}  // namespace

ComplexityReport run_complexity_experiment(const ComplexityConfig& config,
                                           const ExperimentSinks& sinks) {
  const auto combos = complexity_combos(config);
  const int cellCount =
      static_cast<int>(config.predictorBandwidths.size() * config.spatialRatios.size());
  const int unitCount = cellCount * config.replicates;
  const Index k = 3;

  auto cellSpec = [&](int cell) {
    const int nb = static_cast<int>(config.spatialRatios.size());
    return std::pair<double, double>(config.predictorBandwidths[static_cast<size_t>(cell / nb)],
                                     config.spatialRatios[static_cast<size_t>(cell % nb)]);
  };

  auto compute = [&](int unit) {
    const int cell = unit / config.replicates;
    const int rep = unit % config.replicates;
    const auto [bx, rx] = cellSpec(cell);
    const StreamFactory streams(config.masterSeed, static_cast<uint64_t>(cell),
                                static_cast<uint64_t>(rep));

    SubstreamRng coordRng = streams.make(StreamPurpose::Coords);
    MatrixXd coords(config.n, 2);
    for (Index i = 0; i < config.n; ++i) {
      coords(i, 0) = coordRng.normal();
      coords(i, 1) = coordRng.normal();
    }
    const MatrixXd dist = distance_matrix(coords);

    PredictorGenSpec pred{bx, rx};
    SubstreamRng p1 = streams.make(StreamPurpose::Predictor1);
    SubstreamRng p2 = streams.make(StreamPurpose::Predictor2);
    MatrixXd X(config.n, k);
    X.col(0).setOnes();
    X.col(1) = predictor_from_noise(dist, pred, p1.normals(config.n), p1.normals(config.n));
    X.col(2) = predictor_from_noise(dist, pred, p2.normals(config.n), p2.normals(config.n));
    const SpatialDataset data =
        SpatialDataset::make(coords, X, VectorXd::Zero(config.n));

    const MatrixXd sortedNN = sorted_neighbor_distances(dist);

    ComplexityUnit result;
    result.pStar.reserve(combos.size());
    result.singular.reserve(combos.size());

    double t0 = now_seconds();
    for (double b : config.gwrBandwidths) {
      const ComplexityResult r =
          effective_parameters(data, dist, sortedNN, nullptr, nullptr, GwrComplexity{b});
      result.pStar.push_back(r.pStar);
      result.singular.push_back(r.singularCount);
    }
    result.gwrSeconds = now_seconds() - t0;

    t0 = now_seconds();
    for (double f : config.gwraFractions) {
      const ComplexityResult r =
          effective_parameters(data, dist, sortedNN, nullptr, nullptr, GwraComplexity{f});
      result.pStar.push_back(r.pStar);
      result.singular.push_back(r.singularCount);
    }
    result.gwraSeconds = now_seconds() - t0;

    t0 = now_seconds();
    const EigenBasis basis = build_model_basis(dist);
    for (double q : config.esfRatios) {
      const ComplexityResult r =
          effective_parameters(data, dist, sortedNN, &basis, nullptr, EsfComplexity{q});
      result.pStar.push_back(r.pStar);
      result.singular.push_back(r.singularCount);
    }
    result.esfSeconds = now_seconds() - t0;

    t0 = now_seconds();
    const ReEsfSystem system(data, basis);
    for (double a : config.reesfAlphas)
      for (double s : config.reesfSigmas) {
        ReEsfComplexity spec;
        spec.alpha = VectorXd::Constant(k, a);
        spec.sigma = VectorXd::Constant(k, s);
        const ComplexityResult r =
            effective_parameters(data, dist, sortedNN, &basis, &system, spec);
        result.pStar.push_back(r.pStar);
        result.singular.push_back(r.singularCount);
      }
    result.reesfSeconds = now_seconds() - t0;
    return result;
  };

  if (sinks.rawCsv)
    *sinks.rawCsv << "cell,b_x,r_x,model,param1,param2,replicate,p_star,singular_count\n";

  std::vector<double> sumPStar(combos.size(), 0.0);
  std::vector<long> sumSingular(combos.size(), 0);
  double sumGwrSec = 0, sumGwraSec = 0, sumEsfSec = 0, sumReesfSec = 0;
  ComplexityReport report;
  report.masterSeed = config.masterSeed;
  report.replicates = config.replicates;

  auto finalizeCell = [&](int cell) {
    const auto [bx, rx] = cellSpec(cell);
    for (size_t c = 0; c < combos.size(); ++c) {
      ComplexityCellRow row;
      row.cell = cell;
      row.bx = bx;
      row.rx = rx;
      row.model = combos[c].model;
      row.p1 = combos[c].p1;
      row.p2 = combos[c].p2;
      row.replicates = config.replicates;
      row.meanPStar = sumPStar[c] / config.replicates;
      row.meanSingular = static_cast<double>(sumSingular[c]) / config.replicates;
      report.cells.push_back(row);
      if (sinks.cellsCsv) {
        *sinks.cellsCsv << cell << ',' << fmt(bx) << ',' << fmt(rx) << ',' << row.model << ','
                        << fmt(row.p1) << ',' << (std::isnan(row.p2) ? "" : fmt(row.p2)) << ','
                        << row.replicates << ',' << fmt(row.meanPStar) << ','
                        << fmt(row.meanSingular) << '\n';
      }
    }
    report.timings.push_back({cell, "gwr", sumGwrSec / config.replicates});
    report.timings.push_back({cell, "gwra", sumGwraSec / config.replicates});
    report.timings.push_back({cell, "esf", sumEsfSec / config.replicates});
    report.timings.push_back({cell, "reesf", sumReesfSec / config.replicates});
    if (sinks.timesCsv) {
      for (size_t t = report.timings.size() - 4; t < report.timings.size(); ++t)
        *sinks.timesCsv << report.timings[t].cell << ',' << report.timings[t].model << ','
                        << fmt(report.timings[t].meanSeconds) << '\n';
    }
    std::fill(sumPStar.begin(), sumPStar.end(), 0.0);
    std::fill(sumSingular.begin(), sumSingular.end(), 0L);
    sumGwrSec = sumGwraSec = sumEsfSec = sumReesfSec = 0;
  };

  if (sinks.cellsCsv)
    *sinks.cellsCsv
        << "cell,b_x,r_x,model,param1,param2,replicates,mean_p_star,mean_singular_count\n";
  if (sinks.timesCsv) *sinks.timesCsv << "cell,model,mean_seconds\n";

  auto flush = [&](int unit, ComplexityUnit&& r) {
    const int cell = unit / config.replicates;
    const int rep = unit % config.replicates;
    const auto [bx, rx] = cellSpec(cell);
    for (size_t c = 0; c < combos.size(); ++c) {
      sumPStar[c] += r.pStar[c];
      sumSingular[c] += r.singular[c];
      if (sinks.rawCsv) {
        *sinks.rawCsv << cell << ',' << fmt(bx) << ',' << fmt(rx) << ',' << combos[c].model << ','
                      << fmt(combos[c].p1) << ','
                      << (std::isnan(combos[c].p2) ? "" : fmt(combos[c].p2)) << ',' << rep << ','
                      << fmt(r.pStar[c]) << ',' << r.singular[c] << '\n';
      }
    }
    sumGwrSec += r.gwrSeconds;
    sumGwraSec += r.gwraSeconds;
    sumEsfSec += r.esfSeconds;
    sumReesfSec += r.reesfSeconds;
    if (rep == config.replicates - 1) finalizeCell(cell);
  };

  report.completed = run_units_ordered<ComplexityUnit>(unitCount, config.threads,
                                                       config.abortRequested, compute, flush);
  return report;
}

// ---------------------------------------------------------------------------
// Accuracy experiment
// ---------------------------------------------------------------------------

std::vector<AccuracyCellSpec> make_accuracy_grid(
    const std::vector<Index>& sizes, const std::vector<std::array<double, 3>>& svcTriples,
    const std::vector<double>& bxs, const std::vector<double>& rxs) {
  std::vector<AccuracyCellSpec> cells;
  for (Index n : sizes)
    for (const auto& tri : svcTriples)
      for (double bx : bxs)
        for (double rx : rxs) cells.push_back({n, tri, bx, rx});
  return cells;
}

namespace {

struct AccuracyUnit {
  MatrixXd trueB;
  std::vector<char> ok;
  std::vector<MatrixXd> est;
  std::vector<double> seconds;
  std::vector<long> singular;
};

SvcFit fit_model(ModelTag model, const SpatialDataset& data, const BackfitGeometry& geometry,
                 const EigenBasis* basis, CalibrationCriterion criterion) {
  switch (model) {
    case ModelTag::Gwr:
      return gwr_fit(data, KernelSpec::calibrated(KernelMode::FixedDistance), criterion,
                     geometry.dist, geometry.sortedNeighborDist);
    case ModelTag::Gwra:
      return gwr_fit(data, KernelSpec::calibrated(KernelMode::AdaptiveNeighbor), criterion,
                     geometry.dist, geometry.sortedNeighborDist);
    case ModelTag::FbGwr:
      return fbgwr_fit(data, KernelMode::FixedDistance, criterion, geometry);
    case ModelTag::FbGwra:
      return fbgwr_fit(data, KernelMode::AdaptiveNeighbor, criterion, geometry);
    case ModelTag::Esf:
      return esf_fit(data, *basis);
    case ModelTag::ReEsf:
      return reesf_fit(data, *basis);
  }
  throw FitError("unknown model");
}

}  // namespace

AccuracyReport run_accuracy_experiment(const AccuracyConfig& config,
                                       const ExperimentSinks& sinks) {
  const int cellCount = static_cast<int>(config.cells.size());
  const int unitCount = cellCount * config.replicates;
  const size_t nModels = config.models.size();
  const bool needsBasis =
      std::any_of(config.models.begin(), config.models.end(),
                  [](ModelTag m) { return m == ModelTag::Esf || m == ModelTag::ReEsf; });
  const bool needsNeighbors =
      std::any_of(config.models.begin(), config.models.end(),
                  [](ModelTag m) { return m == ModelTag::Gwra || m == ModelTag::FbGwra; });

  auto compute = [&](int unit) {
    const int cell = unit / config.replicates;
    const int rep = unit % config.replicates;
    const AccuracyCellSpec& spec = config.cells[static_cast<size_t>(cell)];
    const StreamFactory streams(config.masterSeed, static_cast<uint64_t>(cell),
                                static_cast<uint64_t>(rep));
    const SvcGenSpec gen{spec.svcBandwidths[0], spec.svcBandwidths[1], spec.svcBandwidths[2]};
    const PredictorGenSpec pred{spec.bx, spec.rx};
    GeneratedSvcData d = generate_svc_dataset(spec.n, gen, pred, streams);

    BackfitGeometry geometry;
    geometry.dist = std::move(d.dist);
    if (needsNeighbors) geometry.sortedNeighborDist = sorted_neighbor_distances(geometry.dist);
    std::optional<EigenBasis> basis;
    if (needsBasis) basis.emplace(build_model_basis(geometry.dist));

    AccuracyUnit result;
    result.trueB = std::move(d.trueB);
    result.ok.resize(nModels, 0);
    result.est.resize(nModels);
    result.seconds.resize(nModels, 0.0);
    result.singular.resize(nModels, 0);
    for (size_t m = 0; m < nModels; ++m) {
      const double t0 = now_seconds();
      try {
        const SvcFit fit = fit_model(config.models[m], d.data, geometry,
                                     basis ? &*basis : nullptr, config.criterion);
        result.est[m] = fit.B;
        result.singular[m] = static_cast<long>(fit.singularSites.size());
        result.ok[m] = 1;
      } catch (const std::exception&) {
        result.ok[m] = 0;
      }
      result.seconds[m] = now_seconds() - t0;
    }
    return result;
  };

  if (sinks.rawCsv) *sinks.rawCsv << "cell,replicate,model,coef,site,true_beta,est_beta\n";
  if (sinks.cellsCsv)
    *sinks.cellsCsv << "cell,n,b0,b1,b2,b_x,r_x,model,coef,replicates_used,failures,"
                       "singular_sites,rmse,mae,bias\n";
  if (sinks.timesCsv) *sinks.timesCsv << "cell,model,mean_seconds\n";

  // Per-cell accumulators, reset when a cell completes.
  struct ModelAccum {
    MatrixXd sumSq, sumAbs, sumErr;
    int used = 0, failures = 0;
    long singular = 0;
    double seconds = 0.0;
  };
  std::vector<ModelAccum> accum(nModels);
  AccuracyReport report;
  report.masterSeed = config.masterSeed;
  report.replicates = config.replicates;

  auto resetAccum = [&](Index n, Index k) {
    for (auto& a : accum) {
      a.sumSq = MatrixXd::Zero(n, k);
      a.sumAbs = MatrixXd::Zero(n, k);
      a.sumErr = MatrixXd::Zero(n, k);
      a.used = a.failures = 0;
      a.singular = 0;
      a.seconds = 0.0;
    }
  };

  int currentCell = -1;
  auto finalizeCell = [&](int cell) {
    const AccuracyCellSpec& spec = config.cells[static_cast<size_t>(cell)];
    for (size_t m = 0; m < nModels; ++m) {
      const ModelAccum& a = accum[m];
      AccuracyCellModelRow row;
      row.cell = cell;
      row.spec = spec;
      row.model = config.models[m];
      row.replicatesUsed = a.used;
      row.failures = a.failures;
      row.singularSites = a.singular;
      row.meanSeconds = a.seconds / std::max(1, a.used + a.failures);
      const Index k = a.sumSq.cols();
      row.rmse = VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
      row.mae = row.rmse;
      row.bias = row.rmse;
      if (a.used > 0) {
        const double used = static_cast<double>(a.used);
        row.rmse = (a.sumSq / used).cwiseSqrt().colwise().mean();
        row.mae = (a.sumAbs / used).colwise().mean();
        row.bias = (a.sumErr / used).colwise().mean();
      }
      report.rows.push_back(row);
      if (sinks.cellsCsv) {
        for (Index c = 0; c < k; ++c) {
          *sinks.cellsCsv << cell << ',' << spec.n << ',' << fmt(spec.svcBandwidths[0]) << ','
                          << fmt(spec.svcBandwidths[1]) << ',' << fmt(spec.svcBandwidths[2]) << ','
                          << fmt(spec.bx) << ',' << fmt(spec.rx) << ','
                          << to_string(config.models[m]) << ',' << c << ',' << row.replicatesUsed
                          << ',' << row.failures << ',' << row.singularSites << ','
                          << fmt(row.rmse[c]) << ',' << fmt(row.mae[c]) << ',' << fmt(row.bias[c])
                          << '\n';
        }
      }
      if (sinks.timesCsv)
        *sinks.timesCsv << cell << ',' << to_string(config.models[m]) << ','
                        << fmt(row.meanSeconds) << '\n';
    }
  };

  auto flush = [&](int unit, AccuracyUnit&& r) {
    const int cell = unit / config.replicates;
    const int rep = unit % config.replicates;
    if (cell != currentCell) {
      currentCell = cell;
      resetAccum(r.trueB.rows(), r.trueB.cols());
    }
    for (size_t m = 0; m < nModels; ++m) {
      ModelAccum& a = accum[m];
      a.seconds += r.seconds[m];
      if (!r.ok[m]) {
        ++a.failures;
        continue;
      }
      const MatrixXd err = r.est[m] - r.trueB;
      a.sumSq += err.cwiseProduct(err);
      a.sumAbs += err.cwiseAbs();
      a.sumErr += err;
      ++a.used;
      a.singular += r.singular[m];
      if (sinks.rawCsv) {
        for (Index c = 0; c < r.trueB.cols(); ++c)
          for (Index s = 0; s < r.trueB.rows(); ++s)
            *sinks.rawCsv << cell << ',' << rep << ',' << to_string(config.models[m]) << ',' << c
                          << ',' << s << ',' << fmt(r.trueB(s, c)) << ',' << fmt(r.est[m](s, c))
                          << '\n';
      }
    }
    if (rep == config.replicates - 1) finalizeCell(cell);
  };

  report.completed = run_units_ordered<AccuracyUnit>(unitCount, config.threads,
                                                     config.abortRequested, compute, flush);
  return report;
}

// ---------------------------------------------------------------------------
// Timing benchmark
// ---------------------------------------------------------------------------

std::vector<BenchRow> run_timing_benchmark(const BenchConfig& config) {
  const std::vector<ModelTag> models = {ModelTag::Gwr,    ModelTag::Gwra, ModelTag::FbGwr,
                                        ModelTag::FbGwra, ModelTag::Esf,  ModelTag::ReEsf};
  std::vector<BenchRow> rows;
  for (size_t s = 0; s < config.sizes.size(); ++s) {
    const Index n = config.sizes[s];
    std::vector<double> seconds(models.size(), 0.0);
    for (int rep = 0; rep < config.replicates; ++rep) {
      const StreamFactory streams(config.masterSeed, static_cast<uint64_t>(s),
                                  static_cast<uint64_t>(rep));
      GeneratedSvcData d = generate_svc_dataset(n, config.svc, config.pred, streams);
      // Shared per-dataset geometry is preprocessing, not model cost.
      BackfitGeometry geometry;
      geometry.dist = std::move(d.dist);
      geometry.sortedNeighborDist = sorted_neighbor_distances(geometry.dist);
      const EigenBasis basis = build_model_basis(geometry.dist);
      for (size_t m = 0; m < models.size(); ++m) {
        const double t0 = now_seconds();
        const SvcFit fit = fit_model(models[m], d.data, geometry, &basis, config.criterion);
        seconds[m] += now_seconds() - t0;
        (void)fit;
      }
    }
    for (size_t m = 0; m < models.size(); ++m)
      rows.push_back({n, models[m], seconds[m] / std::max(1, config.replicates)});
  }
  return rows;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "n,model,mean_seconds\n";
  for (const auto& r : rows)
    os << r.n << ',' << to_string(r.model) << ',' << fmt(r.meanSeconds) << '\n';
}

}  // namespace svcscale
