#pragma once

#include "svcscale/rng.hpp"
#include "svcscale/types.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>

namespace svcscale {

// Eq.-style predictor generator settings: x = (1-r)*noise + r*MA(b)*noise.
struct PredictorGenSpec {
  double bandwidth = 0.0;    // b_x; 0 makes the spatial term plain noise
  double spatialRatio = 0.0; // r_x

  void validate() const;
};

// Bandwidths of the three coefficient surfaces; the means (1, -2, 0.5),
// the amplitude 3 of the middle surface and the noise scale 2 are fixed.
struct SvcGenSpec {
  double b0 = 1.0;
  double b1 = 1.0;
  double b2 = 1.0;
};

enum class StreamPurpose : uint64_t {
  Coords = 1,
  Predictor1 = 2,
  Predictor2 = 3,
  Svc0 = 4,
  Svc1 = 5,
  Svc2 = 6,
  Disturbance = 7,
};

// Derives one independent generator per (cell, replicate, purpose) from the
// master seed; parallel schedules cannot perturb any stream.
class StreamFactory {
 public:
  StreamFactory(uint64_t master, uint64_t cell, uint64_t replicate)
      : master_(master), cell_(cell), replicate_(replicate) {}
  SubstreamRng make(StreamPurpose purpose) const {
    return SubstreamRng(master_, cell_, replicate_, static_cast<uint64_t>(purpose));
  }

 private:
  uint64_t master_, cell_, replicate_;
};

// Row-standardized moving average of eps with range b; b = 0 returns eps
// unchanged (pure-noise degenerate case).
VectorXd spatial_moving_average(const MatrixXd& dist, double bandwidth, const VectorXd& eps);

// Moving average centered and scaled to unit sample variance. The
// generators use this form so that the ratio parameter really is the share
// of spatially dependent variation and surface amplitudes are comparable
// across bandwidths. An all-zero field stays zero.
VectorXd standardized_moving_average(const MatrixXd& dist, double bandwidth,
                                     const VectorXd& eps);

VectorXd generate_predictor(const MatrixXd& coords, const PredictorGenSpec& spec,
                            SubstreamRng& rng);
VectorXd predictor_from_noise(const MatrixXd& dist, const PredictorGenSpec& spec,
                              const VectorXd& epsNoise, const VectorXd& epsSpatial);

struct GeneratedSvcData {
  SpatialDataset data;
  MatrixXd trueB;  // N x 3
  MatrixXd dist;
};

// Coefficient surfaces from given noise vectors (test hook: zero noise
// yields the deterministic skeleton).
MatrixXd svc_surfaces_from_noise(const MatrixXd& dist, const SvcGenSpec& gen, const VectorXd& e0,
                                 const VectorXd& e1, const VectorXd& e2);

GeneratedSvcData generate_svc_dataset(Index n, const SvcGenSpec& gen, const PredictorGenSpec& pred,
                                      const StreamFactory& streams);

struct AccuracyMetrics {
  MatrixXd siteRmse;  // N x K, per-site across replicates
  MatrixXd siteMae;
  MatrixXd siteBias;
  VectorXd rmse;  // per coefficient, averaged over sites
  VectorXd mae;
  VectorXd bias;
};

AccuracyMetrics rmse_profile(const std::vector<MatrixXd>& trueB,
                             const std::vector<MatrixXd>& estB);

// ---------------------------------------------------------------------------
// Experiment drivers
// ---------------------------------------------------------------------------

// Streams the deterministic outputs while the run progresses; the time sink
// is the only non-reproducible file.
struct ExperimentSinks {
  std::ostream* rawCsv = nullptr;
  std::ostream* cellsCsv = nullptr;
  std::ostream* timesCsv = nullptr;
};

struct ComplexityConfig {
  Index n = 400;
  int replicates = 200;
  uint64_t masterSeed = 1;
  std::vector<double> predictorBandwidths = {0.0, 0.2, 0.6, 1.0};
  std::vector<double> spatialRatios = {0.2, 0.6, 1.0, 2.0};
  std::vector<double> gwrBandwidths = {0.2, 0.6, 1.0, 2.0};
  std::vector<double> gwraFractions = {0.1, 0.3, 0.5, 1.0};
  std::vector<double> esfRatios = {0.2, 0.4, 0.6, 0.8};
  std::vector<double> reesfAlphas = {0.2, 0.6, 1.0, 2.0};
  std::vector<double> reesfSigmas = {0.1, 1.0};
  int threads = 1;
  std::function<bool()> abortRequested;
};

struct ComplexityCellRow {
  int cell = 0;
  double bx = 0.0, rx = 0.0;
  std::string model;  // gwr | gwra | esf | reesf
  double p1 = 0.0;    // b | neighbor fraction | q | alpha
  double p2 = std::numeric_limits<double>::quiet_NaN();  // sigma for reesf
  int replicates = 0;
  double meanPStar = 0.0;
  double meanSingular = 0.0;
};

struct ModelTiming {
  int cell = 0;
  std::string model;
  double meanSeconds = 0.0;
};

struct ComplexityReport {
  std::vector<ComplexityCellRow> cells;
  std::vector<ModelTiming> timings;
  uint64_t masterSeed = 0;
  int replicates = 0;
  bool completed = true;
};

ComplexityReport run_complexity_experiment(const ComplexityConfig& config,
                                           const ExperimentSinks& sinks = {});

struct AccuracyCellSpec {
  Index n = 0;
  std::array<double, 3> svcBandwidths{};
  double bx = 0.0;
  double rx = 0.0;
};

std::vector<AccuracyCellSpec> make_accuracy_grid(const std::vector<Index>& sizes,
                                                 const std::vector<std::array<double, 3>>& svcTriples,
                                                 const std::vector<double>& bxs,
                                                 const std::vector<double>& rxs);

struct AccuracyConfig {
  std::vector<AccuracyCellSpec> cells;
  std::vector<ModelTag> models = {ModelTag::Gwr,    ModelTag::Gwra, ModelTag::FbGwr,
                                  ModelTag::FbGwra, ModelTag::Esf,  ModelTag::ReEsf};
  CalibrationCriterion criterion = CalibrationCriterion::Aicc;
  int replicates = 200;
  uint64_t masterSeed = 1;
  int threads = 1;
  std::function<bool()> abortRequested;
};

struct AccuracyCellModelRow {
  int cell = 0;
  AccuracyCellSpec spec;
  ModelTag model = ModelTag::Gwr;
  VectorXd rmse, mae, bias;  // per coefficient
  int replicatesUsed = 0;
  int failures = 0;
  long singularSites = 0;
  double meanSeconds = 0.0;
};

struct AccuracyReport {
  std::vector<AccuracyCellModelRow> rows;
  uint64_t masterSeed = 0;
  int replicates = 0;
  bool completed = true;
};

AccuracyReport run_accuracy_experiment(const AccuracyConfig& config,
                                       const ExperimentSinks& sinks = {});

struct BenchConfig {
  std::vector<Index> sizes;
  int replicates = 5;
  uint64_t masterSeed = 1;
  SvcGenSpec svc{1.0, 0.2, 1.0};
  PredictorGenSpec pred{0.6, 0.4};
  CalibrationCriterion criterion = CalibrationCriterion::Aicc;
};

struct BenchRow {
  Index n = 0;
  ModelTag model = ModelTag::Gwr;
  double meanSeconds = 0.0;
};

// Times all six model fits per dataset; the per-dataset geometry (distance
// matrix, neighbor ranking, eigenbasis) is shared preprocessing outside the
// timers. Always serial.
std::vector<BenchRow> run_timing_benchmark(const BenchConfig& config);

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);

}  // namespace svcscale
