#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "dosdef/telemetry.hpp"

namespace dosdef {

enum class Dim { Runtime, Memory, Util, InputTokens, OutputTokens };

// Consumption features: the dimensions most correlated with resource load.
inline constexpr std::array<Dim, 3> kConsumptionDims{Dim::Runtime, Dim::Util, Dim::OutputTokens};
// Tendency features: the dimensions that characterize request shape.
inline constexpr std::array<Dim, 4> kTendencyDims{Dim::Runtime, Dim::Memory, Dim::InputTokens,
                                                  Dim::OutputTokens};

std::vector<double> project(const ResourceVector& v, std::span<const Dim> dims);

// ||current|| / ||reference|| (L2). Scales linearly with the current vector.
double consumption_index(std::span<const double> current, std::span<const double> reference);

// Cosine similarity of the mean-centered vectors; in [-1, 1]. Invariant under
// per-vector scaling and constant shifts.
double tendency_index(std::span<const double> current, std::span<const double> reference);

struct IqrThresholds {
    double lower = 0.0;
    double upper = 0.0;
    double lambda = 0.0;

    bool contains(double x) const { return x >= lower && x <= upper; }
};

// Linear-interpolation quantile over a sorted sample.
double quantile_linear(std::span<const double> sorted, double p);

// Tukey-style fences: upper = (1+l)*Q3 - l*Q1, lower = (1+l)*Q1 - l*Q3.
// Requires at least 4 samples.
IqrThresholds iqr_thresholds(std::vector<double> samples, double lambda);

enum class Region { A, B, C, D, E, F };
enum class ActionClass { Reward, MildPenalty, DosPenalty };

struct RiskVerdict {
    double i_c = 1.0;
    double i_t = 1.0;
    Region region = Region::B;
    ActionClass action = ActionClass::Reward;
};

// Historical benign average for one cluster.
struct ReferenceProfile {
    ResourceVector centroid;
    std::int64_t sample_count = 1;
    int cluster_id = 0;
};

struct ClassifierConfig {
    int clusters = 2;
    double lambda = 1.5;
    double ema_beta = 0.1;
    int warmup_requests = 40;
    // Outlier test on both fence sides; one-sided treats only values above the
    // upper fence as abnormal.
    bool two_sided = true;
    // Divide each consumption component by the reference centroid before
    // taking norms. Off by default: raw component values.
    bool normalize_consumption = false;
    // Region boundary overrides. When unset, the high tendency boundary is the
    // lower tendency fence and the low boundary sits one fence width below it.
    std::optional<double> region_tendency_low;
    std::optional<double> region_tendency_high;
};

ActionClass action_for(double i_c, double i_t, const IqrThresholds& thr_c, const IqrThresholds& thr_t,
                       bool two_sided = true);

Region region_for(double i_c, double i_t, const IqrThresholds& thr_c, const IqrThresholds& thr_t,
                  std::optional<double> tendency_low = std::nullopt,
                  std::optional<double> tendency_high = std::nullopt);

// Scores one finished request: nearest profile by tendency, consumption ratio
// against it, then action and region from the thresholds.
RiskVerdict classify(const ResourceVector& v, std::span<const ReferenceProfile> profiles,
                     const IqrThresholds& thr_c, const IqrThresholds& thr_t,
                     const ClassifierConfig& cfg = {});

// Moves the nearest centroid toward v by factor beta. Only Reward-class
// requests may update the reference.
void update_reference(std::vector<ReferenceProfile>& profiles, const ResourceVector& v,
                      const RiskVerdict& verdict, double beta);

// Owns the reference profiles, benign index history and thresholds. Mutated
// only between scheduling rounds; read-only during a round.
class Classifier {
public:
    explicit Classifier(ClassifierConfig cfg = {});

    bool ready() const { return ready_; }

    // Feeds one benign warmup sample. Finalizes profiles and thresholds once
    // warmup_requests samples have been seen.
    void observe_warmup(const ResourceVector& v);

    RiskVerdict classify(const ResourceVector& v) const;

    // Reward-class bookkeeping applied at round boundaries: EMA centroid
    // update and the running benign output-length mean.
    void absorb(const ResourceVector& v, const RiskVerdict& verdict);

    double avg_benign_output() const { return avg_benign_output_; }

    const std::vector<ReferenceProfile>& profiles() const { return profiles_; }
    const IqrThresholds& consumption_thresholds() const { return thr_c_; }
    const IqrThresholds& tendency_thresholds() const { return thr_t_; }
    const ClassifierConfig& config() const { return cfg_; }

    nlohmann::ordered_json state_to_json() const;
    static Classifier state_from_json(const nlohmann::json& j);

private:
    void finalize_warmup();

    ClassifierConfig cfg_;
    bool ready_ = false;
    std::vector<ResourceVector> warmup_;
    std::vector<ReferenceProfile> profiles_;
    IqrThresholds thr_c_;
    IqrThresholds thr_t_;
    double avg_benign_output_ = 0.0;
    std::int64_t benign_count_ = 0;
};

const char* to_string(Region r);
const char* to_string(ActionClass a);
std::optional<Region> region_from_string(const std::string& s);
std::optional<ActionClass> action_from_string(const std::string& s);

} // namespace dosdef
