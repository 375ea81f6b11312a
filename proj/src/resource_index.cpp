#include "dosdef/resource_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dosdef {

namespace {

double component(const ResourceVector& v, Dim d) {
    switch (d) {
    case Dim::Runtime: return v.runtime_s;
    case Dim::Memory: return v.peak_memory_gb;
    case Dim::Util: return v.peak_util_pct;
    case Dim::InputTokens: return static_cast<double>(v.input_tokens);
    case Dim::OutputTokens: return static_cast<double>(v.output_tokens);
    }
    throw UsageError("project: unknown dimension");
}

double l2_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

std::vector<double> centered(std::span<const double> x) {
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - mean;
    return out;
}

} // namespace

std::vector<double> project(const ResourceVector& v, std::span<const Dim> dims) {
    if (dims.empty()) throw UsageError("project: empty dimension subset");
    std::vector<double> out;
    out.reserve(dims.size());
    for (Dim d : dims) out.push_back(component(v, d));
    return out;
}

double consumption_index(std::span<const double> current, std::span<const double> reference) {
    if (current.size() != reference.size())
        throw UsageError("consumption_index: dimension mismatch");
    const double ref_norm = l2_norm(reference);
    if (ref_norm == 0.0)
        throw DegenerateReferenceError("consumption_index: reference norm is zero");
    return l2_norm(current) / ref_norm;
}

double tendency_index(std::span<const double> current, std::span<const double> reference) {
    if (current.size() != reference.size())
        throw UsageError("tendency_index: dimension mismatch");
    const auto c = centered(current);
    const auto r = centered(reference);
    const double cn = l2_norm(c);
    const double rn = l2_norm(r);
    if (cn == 0.0 || rn == 0.0)
        throw DegenerateTendencyError("tendency_index: constant vector centers to zero");
    double dot = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) dot += c[i] * r[i];
    return dot / (cn * rn);
}

double quantile_linear(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw UsageError("quantile_linear: empty sample");
    if (sorted.size() == 1) return sorted[0];
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - std::floor(h);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

IqrThresholds iqr_thresholds(std::vector<double> samples, double lambda) {
    if (samples.size() < 4)
        throw InsufficientHistoryError("iqr_thresholds: need at least 4 samples");
    if (lambda < 0.0) throw UsageError("iqr_thresholds: lambda must be >= 0");
    std::sort(samples.begin(), samples.end());
    const double q1 = quantile_linear(samples, 0.25);
    const double q3 = quantile_linear(samples, 0.75);
    IqrThresholds t;
    t.lambda = lambda;
    t.upper = (1.0 + lambda) * q3 - lambda * q1;
    t.lower = (1.0 + lambda) * q1 - lambda * q3;
    return t;
}

ActionClass action_for(double i_c, double i_t, const IqrThresholds& thr_c, const IqrThresholds& thr_t,
                       bool two_sided) {
    const bool c_inside = two_sided ? thr_c.contains(i_c) : i_c <= thr_c.upper;
    const bool t_inside = two_sided ? thr_t.contains(i_t) : i_t <= thr_t.upper;
    if (c_inside && t_inside) return ActionClass::Reward;
    if (c_inside || t_inside) return ActionClass::MildPenalty;
    return ActionClass::DosPenalty;
}

Region region_for(double i_c, double i_t, const IqrThresholds& thr_c, const IqrThresholds& thr_t,
                  std::optional<double> tendency_low, std::optional<double> tendency_high) {
    // The consumption boundary is the upper fence. The high tendency boundary
    // defaults to the lower tendency fence (below it a request no longer looks
    // benign) and the low boundary sits one fence width further down.
    const double c_alpha = thr_c.upper;
    const double t_hi = tendency_high.value_or(thr_t.lower);
    const double t_lo = tendency_low.value_or(thr_t.lower - (thr_t.upper - thr_t.lower));
    const bool high_consumption = i_c > c_alpha;
    if (i_t < t_lo) return high_consumption ? Region::D : Region::A;
    if (i_t > t_hi) return high_consumption ? Region::F : Region::C;
    return high_consumption ? Region::E : Region::B;
}

RiskVerdict classify(const ResourceVector& v, std::span<const ReferenceProfile> profiles,
                     const IqrThresholds& thr_c, const IqrThresholds& thr_t,
                     const ClassifierConfig& cfg) {
    if (profiles.empty()) throw UsageError("classify: no reference profiles");

    const auto vt = project(v, kTendencyDims);
    const ReferenceProfile* best = nullptr;
    double best_it = -std::numeric_limits<double>::infinity();
    for (const auto& p : profiles) {
        const double it = tendency_index(vt, project(p.centroid, kTendencyDims));
        if (it > best_it) {
            best_it = it;
            best = &p;
        }
    }

    auto vc = project(v, kConsumptionDims);
    auto rc = project(best->centroid, kConsumptionDims);
    if (cfg.normalize_consumption) {
        for (std::size_t i = 0; i < vc.size(); ++i) {
            if (rc[i] == 0.0)
                throw DegenerateReferenceError("classify: zero centroid component");
            vc[i] /= rc[i];
            rc[i] = 1.0;
        }
    }

    RiskVerdict verdict;
    verdict.i_c = consumption_index(vc, rc);
    verdict.i_t = best_it;
    verdict.action = action_for(verdict.i_c, verdict.i_t, thr_c, thr_t, cfg.two_sided);
    verdict.region = region_for(verdict.i_c, verdict.i_t, thr_c, thr_t, cfg.region_tendency_low,
                                cfg.region_tendency_high);
    return verdict;
}

void update_reference(std::vector<ReferenceProfile>& profiles, const ResourceVector& v,
                      const RiskVerdict& verdict, double beta) {
    if (verdict.action != ActionClass::Reward)
        throw UsageError("update_reference: only Reward-class requests update the reference");
    if (profiles.empty()) throw UsageError("update_reference: no reference profiles");

    const auto vt = project(v, kTendencyDims);
    ReferenceProfile* best = nullptr;
    double best_it = -std::numeric_limits<double>::infinity();
    for (auto& p : profiles) {
        const double it = tendency_index(vt, project(p.centroid, kTendencyDims));
        if (it > best_it) {
            best_it = it;
            best = &p;
        }
    }

    auto& c = best->centroid;
    c.runtime_s += beta * (v.runtime_s - c.runtime_s);
    c.peak_memory_gb += beta * (v.peak_memory_gb - c.peak_memory_gb);
    c.peak_util_pct += beta * (v.peak_util_pct - c.peak_util_pct);
    c.input_tokens += static_cast<std::int64_t>(
        std::llround(beta * static_cast<double>(v.input_tokens - c.input_tokens)));
    c.output_tokens += static_cast<std::int64_t>(
        std::llround(beta * static_cast<double>(v.output_tokens - c.output_tokens)));
    best->sample_count += 1;
}

Classifier::Classifier(ClassifierConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.clusters < 1) throw UsageError("Classifier: clusters must be >= 1");
    if (cfg_.warmup_requests < 4)
        throw UsageError("Classifier: warmup_requests must be >= 4");
}

void Classifier::observe_warmup(const ResourceVector& v) {
    if (ready_) throw UsageError("Classifier: warmup already finished");
    warmup_.push_back(v);
    if (static_cast<int>(warmup_.size()) >= cfg_.warmup_requests) finalize_warmup();
}

namespace {

ResourceVector mean_vector(const std::vector<const ResourceVector*>& members) {
    ResourceVector m;
    double in = 0.0, out = 0.0;
    for (const auto* v : members) {
        m.runtime_s += v->runtime_s;
        m.peak_memory_gb += v->peak_memory_gb;
        m.peak_util_pct += v->peak_util_pct;
        in += static_cast<double>(v->input_tokens);
        out += static_cast<double>(v->output_tokens);
    }
    const double n = static_cast<double>(members.size());
    m.runtime_s /= n;
    m.peak_memory_gb /= n;
    m.peak_util_pct /= n;
    m.input_tokens = static_cast<std::int64_t>(std::llround(in / n));
    m.output_tokens = static_cast<std::int64_t>(std::llround(out / n));
    return m;
}

} // namespace

void Classifier::finalize_warmup() {
    const int k = std::min<int>(cfg_.clusters, static_cast<int>(warmup_.size()));

    // Fixed-K clustering by tendency similarity: seed with the most dissimilar
    // pair, then alternate max-tendency assignment and centroid means.
    std::vector<ResourceVector> centroids;
    centroids.push_back(warmup_.front());
    while (static_cast<int>(centroids.size()) < k) {
        const ResourceVector* farthest = nullptr;
        double lowest = std::numeric_limits<double>::infinity();
        for (const auto& v : warmup_) {
            double best_it = -std::numeric_limits<double>::infinity();
            for (const auto& c : centroids)
                best_it = std::max(best_it, tendency_index(project(v, kTendencyDims),
                                                           project(c, kTendencyDims)));
            if (best_it < lowest) {
                lowest = best_it;
                farthest = &v;
            }
        }
        centroids.push_back(*farthest);
    }

    std::vector<int> assignment(warmup_.size(), 0);
    for (int iter = 0; iter < 20; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < warmup_.size(); ++i) {
            int best = 0;
            double best_it = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < centroids.size(); ++c) {
                const double it = tendency_index(project(warmup_[i], kTendencyDims),
                                                 project(centroids[c], kTendencyDims));
                if (it > best_it) {
                    best_it = it;
                    best = static_cast<int>(c);
                }
            }
            if (assignment[i] != best) {
                assignment[i] = best;
                changed = true;
            }
        }
        std::vector<std::vector<const ResourceVector*>> members(centroids.size());
        for (std::size_t i = 0; i < warmup_.size(); ++i)
            members[assignment[i]].push_back(&warmup_[i]);
        for (std::size_t c = 0; c < centroids.size(); ++c)
            if (!members[c].empty()) centroids[c] = mean_vector(members[c]);
        if (!changed) break;
    }

    profiles_.clear();
    std::vector<std::int64_t> counts(centroids.size(), 0);
    for (int a : assignment) counts[a] += 1;
    int next_id = 0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (counts[c] == 0) continue; // empty clusters are dropped
        profiles_.push_back(ReferenceProfile{centroids[c], counts[c], next_id++});
    }

    // Index history against the final profiles feeds both threshold pairs.
    std::vector<double> ic_hist, it_hist;
    double lout_sum = 0.0;
    ClassifierConfig plain = cfg_; // thresholds not needed for index values
    for (const auto& v : warmup_) {
        const auto vt = project(v, kTendencyDims);
        const ReferenceProfile* best = nullptr;
        double best_it = -std::numeric_limits<double>::infinity();
        for (const auto& p : profiles_) {
            const double it = tendency_index(vt, project(p.centroid, kTendencyDims));
            if (it > best_it) {
                best_it = it;
                best = &p;
            }
        }
        auto vc = project(v, kConsumptionDims);
        auto rc = project(best->centroid, kConsumptionDims);
        if (plain.normalize_consumption) {
            for (std::size_t i = 0; i < vc.size(); ++i) {
                vc[i] /= rc[i];
                rc[i] = 1.0;
            }
        }
        ic_hist.push_back(consumption_index(vc, rc));
        it_hist.push_back(best_it);
        lout_sum += static_cast<double>(v.output_tokens);
    }
    thr_c_ = iqr_thresholds(ic_hist, cfg_.lambda);
    thr_t_ = iqr_thresholds(it_hist, cfg_.lambda);
    avg_benign_output_ = lout_sum / static_cast<double>(warmup_.size());
    benign_count_ = static_cast<std::int64_t>(warmup_.size());
    warmup_.clear();
    ready_ = true;
}

RiskVerdict Classifier::classify(const ResourceVector& v) const {
    if (!ready_)
        throw InsufficientHistoryError("Classifier: warmup not finished");
    return dosdef::classify(v, profiles_, thr_c_, thr_t_, cfg_);
}

void Classifier::absorb(const ResourceVector& v, const RiskVerdict& verdict) {
    if (verdict.action != ActionClass::Reward) return;
    update_reference(profiles_, v, verdict, cfg_.ema_beta);
    benign_count_ += 1;
    avg_benign_output_ +=
        (static_cast<double>(v.output_tokens) - avg_benign_output_) / static_cast<double>(benign_count_);
}

namespace {

nlohmann::ordered_json vector_to_json(const ResourceVector& v) {
    return {{"runtime_s", v.runtime_s},
            {"peak_memory_gb", v.peak_memory_gb},
            {"peak_util_pct", v.peak_util_pct},
            {"input_tokens", v.input_tokens},
            {"output_tokens", v.output_tokens}};
}

ResourceVector vector_from_json(const nlohmann::json& j) {
    ResourceVector v;
    v.runtime_s = j.at("runtime_s").get<double>();
    v.peak_memory_gb = j.at("peak_memory_gb").get<double>();
    v.peak_util_pct = j.at("peak_util_pct").get<double>();
    v.input_tokens = j.at("input_tokens").get<std::int64_t>();
    v.output_tokens = j.at("output_tokens").get<std::int64_t>();
    return v;
}

} // namespace

nlohmann::ordered_json Classifier::state_to_json() const {
    nlohmann::ordered_json j;
    j["ready"] = ready_;
    j["config"] = {{"clusters", cfg_.clusters},
                   {"lambda", cfg_.lambda},
                   {"ema_beta", cfg_.ema_beta},
                   {"warmup_requests", cfg_.warmup_requests},
                   {"two_sided", cfg_.two_sided},
                   {"normalize_consumption", cfg_.normalize_consumption}};
    auto profiles = nlohmann::ordered_json::array();
    for (const auto& p : profiles_) {
        profiles.push_back({{"cluster_id", p.cluster_id},
                            {"sample_count", p.sample_count},
                            {"centroid", vector_to_json(p.centroid)}});
    }
    j["profiles"] = profiles;
    j["consumption_thresholds"] = {{"lower", thr_c_.lower}, {"upper", thr_c_.upper}, {"lambda", thr_c_.lambda}};
    j["tendency_thresholds"] = {{"lower", thr_t_.lower}, {"upper", thr_t_.upper}, {"lambda", thr_t_.lambda}};
    j["avg_benign_output"] = avg_benign_output_;
    j["benign_count"] = benign_count_;
    return j;
}

Classifier Classifier::state_from_json(const nlohmann::json& j) {
    ClassifierConfig cfg;
    const auto& c = j.at("config");
    cfg.clusters = c.at("clusters").get<int>();
    cfg.lambda = c.at("lambda").get<double>();
    cfg.ema_beta = c.at("ema_beta").get<double>();
    cfg.warmup_requests = c.at("warmup_requests").get<int>();
    cfg.two_sided = c.at("two_sided").get<bool>();
    cfg.normalize_consumption = c.at("normalize_consumption").get<bool>();

    Classifier out(cfg);
    out.ready_ = j.at("ready").get<bool>();
    for (const auto& p : j.at("profiles")) {
        ReferenceProfile rp;
        rp.cluster_id = p.at("cluster_id").get<int>();
        rp.sample_count = p.at("sample_count").get<std::int64_t>();
        rp.centroid = vector_from_json(p.at("centroid"));
        out.profiles_.push_back(rp);
    }
    const auto& tc = j.at("consumption_thresholds");
    out.thr_c_ = IqrThresholds{tc.at("lower").get<double>(), tc.at("upper").get<double>(),
                               tc.at("lambda").get<double>()};
    const auto& tt = j.at("tendency_thresholds");
    out.thr_t_ = IqrThresholds{tt.at("lower").get<double>(), tt.at("upper").get<double>(),
                               tt.at("lambda").get<double>()};
    out.avg_benign_output_ = j.at("avg_benign_output").get<double>();
    out.benign_count_ = j.at("benign_count").get<std::int64_t>();
    return out;
}

const char* to_string(Region r) {
    switch (r) {
    case Region::A: return "A";
    case Region::B: return "B";
    case Region::C: return "C";
    case Region::D: return "D";
    case Region::E: return "E";
    case Region::F: return "F";
    }
    return "?";
}

const char* to_string(ActionClass a) {
    switch (a) {
    case ActionClass::Reward: return "reward";
    case ActionClass::MildPenalty: return "mild_penalty";
    case ActionClass::DosPenalty: return "dos_penalty";
    }
    return "?";
}

std::optional<Region> region_from_string(const std::string& s) {
    for (Region r : {Region::A, Region::B, Region::C, Region::D, Region::E, Region::F})
        if (s == to_string(r)) return r;
    return std::nullopt;
}

std::optional<ActionClass> action_from_string(const std::string& s) {
    for (ActionClass a : {ActionClass::Reward, ActionClass::MildPenalty, ActionClass::DosPenalty})
        if (s == to_string(a)) return a;
    return std::nullopt;
}

} // namespace dosdef
