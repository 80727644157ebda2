#pragma once

// Decomposable structure scores and the constraint-aware composite score.
//
// total = sum over nodes of a base local score (BIC, K2 or BDeu, natural log)
//       + a constraint term rewarding present mandatory edges, penalising
//         absent mandatory edges and present prohibited edges.

#include <cstddef>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ranbn/constraints.hpp"
#include "ranbn/dag.hpp"
#include "ranbn/telemetry.hpp"

namespace ranbn {

enum class BaseScore { Bic, K2, BDeu };
enum class ConstraintMode { Hard, Soft };

const char* to_string(BaseScore base);
const char* to_string(ConstraintMode mode);
BaseScore parse_base_score(std::string_view text);
ConstraintMode parse_constraint_mode(std::string_view text);

struct ScoreParams {
    static constexpr double kAuto = std::numeric_limits<double>::quiet_NaN();

    BaseScore base = BaseScore::Bic;
    double bdeu_ess = 1.0;
    // NaN = derive from the sample size N: reward = penalty = 2 ln N, prohibited = 10 ln N.
    double alpha_reward = kAuto;
    double alpha_penalty = kAuto;
    double beta_penalty = kAuto;
    ConstraintMode mode = ConstraintMode::Hard;

    // Copy with automatic constants filled in for a dataset of `n_rows`.
    ScoreParams resolved(std::size_t n_rows) const;
    void validate() const;
};

double bic_local(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents);
double k2_local(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents);
double bdeu_local(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents, double ess);

double bic_local(const DiscreteDataset& data, std::string_view child, std::span<const std::string> parents);
double k2_local(const DiscreteDataset& data, std::string_view child, std::span<const std::string> parents);
double bdeu_local(const DiscreteDataset& data, std::string_view child, std::span<const std::string> parents, double ess);

// Maximum-likelihood log-likelihood of child given parents (BIC without penalty).
double log_likelihood_local(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents);

double base_local(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents,
                  const ScoreParams& params);

// Memo of base local scores keyed by (child, sorted parent set). Safe for
// concurrent use. Bound to one dataset and one base score configuration.
class LocalScoreCache {
public:
    double get_or_compute(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents,
                          const ScoreParams& params);
    std::size_t hits() const;
    std::size_t misses() const;
    std::size_t size() const;

private:
    struct KeyHash {
        std::size_t operator()(const std::vector<std::size_t>& key) const noexcept;
    };
    mutable std::mutex mutex_;
    std::unordered_map<std::vector<std::size_t>, double, KeyHash> values_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
    bool bound_ = false;
    BaseScore base_ = BaseScore::Bic;
    double ess_ = 0.0;
};

// Constraint term. Mandatory edges contribute +alpha_reward when present and
// -alpha_penalty when absent; each present prohibited edge contributes
// -beta_penalty. Requires resolved constants.
double llm_score(const Dag& dag, const ConstraintSet& delta, const ScoreParams& params);

// Sum of base local scores over all dag nodes (matched to data by name).
double base_score(const Dag& dag, const DiscreteDataset& data, const ScoreParams& params,
                  LocalScoreCache* cache = nullptr);

double total_score(const Dag& dag, const DiscreteDataset& data, const ConstraintSet& delta, const ScoreParams& params,
                   LocalScoreCache* cache = nullptr);

}  // namespace ranbn
