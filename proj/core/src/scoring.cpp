#include "ranbn/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "ranbn/counts.hpp"
#include "ranbn/errors.hpp"

namespace ranbn {

namespace {

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::vector<std::size_t> columns_of(const DiscreteDataset& data, std::span<const std::string> names) {
    std::vector<std::size_t> cols;
    for (const auto& n : names) cols.push_back(data.index_of(n));
    std::sort(cols.begin(), cols.end());
    return cols;
}

bool edge_present(const Dag& dag, const NamedEdge& e) { return dag.has_edge(e.first, e.second); }

}  // namespace

const char* to_string(BaseScore base) {
    switch (base) {
        case BaseScore::Bic: return "BIC";
        case BaseScore::K2: return "K2";
        case BaseScore::BDeu: return "BDeu";
    }
    return "BIC";
}

const char* to_string(ConstraintMode mode) { return mode == ConstraintMode::Hard ? "hard" : "soft"; }

BaseScore parse_base_score(std::string_view text) {
    auto t = lower(text);
    if (t == "bic") return BaseScore::Bic;
    if (t == "k2") return BaseScore::K2;
    if (t == "bdeu") return BaseScore::BDeu;
    fail(ErrorKind::Parameter, "unknown score '" + std::string(text) + "'");
}

ConstraintMode parse_constraint_mode(std::string_view text) {
    auto t = lower(text);
    if (t == "hard") return ConstraintMode::Hard;
    if (t == "soft") return ConstraintMode::Soft;
    fail(ErrorKind::Parameter, "unknown constraint mode '" + std::string(text) + "'");
}

ScoreParams ScoreParams::resolved(std::size_t n_rows) const {
    ScoreParams p = *this;
    const double ln_n = std::log(static_cast<double>(std::max<std::size_t>(n_rows, 1)));
    if (std::isnan(p.alpha_reward)) p.alpha_reward = 2.0 * ln_n;
    if (std::isnan(p.alpha_penalty)) p.alpha_penalty = 2.0 * ln_n;
    if (std::isnan(p.beta_penalty)) p.beta_penalty = 10.0 * ln_n;
    return p;
}

void ScoreParams::validate() const {
    if (!(bdeu_ess > 0.0) || !std::isfinite(bdeu_ess)) fail(ErrorKind::Parameter, "BDeu equivalent sample size must be > 0");
    for (double v : {alpha_reward, alpha_penalty, beta_penalty}) {
        if (std::isnan(v)) continue;
        if (v < 0.0 || !std::isfinite(v)) fail(ErrorKind::Parameter, "constraint rewards/penalties must be finite and >= 0");
    }
}

double log_likelihood_local(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents) {
    auto fc = count_family(data, child, parents);
    double ll = 0.0;
    for (std::size_t q = 0; q < fc.parent_configs; ++q) {
        const auto total = fc.config_total(q);
        if (total == 0) continue;
        const double log_total = std::log(static_cast<double>(total));
        for (std::size_t s = 0; s < fc.child_states; ++s) {
            const auto n = fc.at(q, s);
            if (n > 0) ll += static_cast<double>(n) * (std::log(static_cast<double>(n)) - log_total);
        }
    }
    return ll;
}

double bic_local(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents) {
    const double ll = log_likelihood_local(data, child, parents);
    double q = 1.0;
    for (auto p : parents) q *= data.cardinality(p);
    const double r = data.cardinality(child);
    const double n = static_cast<double>(data.rows());
    const double penalty = n > 0 ? 0.5 * std::log(n) * (r - 1.0) * q : 0.0;
    return ll - penalty;
}

double k2_local(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents) {
    auto fc = count_family(data, child, parents);
    const double r = static_cast<double>(fc.child_states);
    const double lg_r = std::lgamma(r);
    double score = 0.0;
    for (std::size_t q = 0; q < fc.parent_configs; ++q) {
        const double total = static_cast<double>(fc.config_total(q));
        score += lg_r - std::lgamma(total + r);
        for (std::size_t s = 0; s < fc.child_states; ++s) score += std::lgamma(static_cast<double>(fc.at(q, s)) + 1.0);
    }
    return score;
}

double bdeu_local(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents, double ess) {
    if (!(ess > 0.0)) fail(ErrorKind::Parameter, "BDeu equivalent sample size must be > 0");
    auto fc = count_family(data, child, parents);
    const double q_count = static_cast<double>(fc.parent_configs);
    const double a_q = ess / q_count;
    const double a_qs = ess / (q_count * static_cast<double>(fc.child_states));
    const double lg_aq = std::lgamma(a_q);
    const double lg_aqs = std::lgamma(a_qs);
    double score = 0.0;
    for (std::size_t q = 0; q < fc.parent_configs; ++q) {
        const double total = static_cast<double>(fc.config_total(q));
        score += lg_aq - std::lgamma(total + a_q);
        for (std::size_t s = 0; s < fc.child_states; ++s)
            score += std::lgamma(static_cast<double>(fc.at(q, s)) + a_qs) - lg_aqs;
    }
    return score;
}

double bic_local(const DiscreteDataset& data, std::string_view child, std::span<const std::string> parents) {
    auto cols = columns_of(data, parents);
    return bic_local(data, data.index_of(child), cols);
}

double k2_local(const DiscreteDataset& data, std::string_view child, std::span<const std::string> parents) {
    auto cols = columns_of(data, parents);
    return k2_local(data, data.index_of(child), cols);
}

double bdeu_local(const DiscreteDataset& data, std::string_view child, std::span<const std::string> parents, double ess) {
    auto cols = columns_of(data, parents);
    return bdeu_local(data, data.index_of(child), cols, ess);
}

double base_local(const DiscreteDataset& data, std::size_t child, std::span<const std::size_t> parents,
                  const ScoreParams& params) {
    switch (params.base) {
        case BaseScore::Bic: return bic_local(data, child, parents);
        case BaseScore::K2: return k2_local(data, child, parents);
        case BaseScore::BDeu: return bdeu_local(data, child, parents, params.bdeu_ess);
    }
    return 0.0;
}

std::size_t LocalScoreCache::KeyHash::operator()(const std::vector<std::size_t>& key) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (auto k : key) h ^= k + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

double LocalScoreCache::get_or_compute(const DiscreteDataset& data, std::size_t child,
                                       std::span<const std::size_t> parents, const ScoreParams& params) {
    std::vector<std::size_t> key;
    key.reserve(parents.size() + 1);
    key.push_back(child);
    key.insert(key.end(), parents.begin(), parents.end());
    std::sort(key.begin() + 1, key.end());
    {
        std::lock_guard lock(mutex_);
        if (!bound_) {
            bound_ = true;
            base_ = params.base;
            ess_ = params.bdeu_ess;
        } else if (base_ != params.base || (base_ == BaseScore::BDeu && ess_ != params.bdeu_ess)) {
            fail(ErrorKind::Parameter, "local score cache reused with a different base score");
        }
        if (auto it = values_.find(key); it != values_.end()) {
            ++hits_;
            return it->second;
        }
    }
    std::span<const std::size_t> sorted_parents(key.data() + 1, key.size() - 1);
    const double value = base_local(data, child, sorted_parents, params);
    std::lock_guard lock(mutex_);
    ++misses_;
    values_.emplace(std::move(key), value);
    return value;
}

std::size_t LocalScoreCache::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

std::size_t LocalScoreCache::misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
}

std::size_t LocalScoreCache::size() const {
    std::lock_guard lock(mutex_);
    return values_.size();
}

double llm_score(const Dag& dag, const ConstraintSet& delta, const ScoreParams& params) {
    if (std::isnan(params.alpha_reward) || std::isnan(params.alpha_penalty) || std::isnan(params.beta_penalty))
        fail(ErrorKind::Parameter, "constraint score constants are unresolved; call ScoreParams::resolved first");
    double s = 0.0;
    for (const auto& e : delta.mandatory) s += edge_present(dag, e) ? params.alpha_reward : -params.alpha_penalty;
    for (const auto& e : delta.prohibited)
        if (edge_present(dag, e)) s -= params.beta_penalty;
    return s;
}

double base_score(const Dag& dag, const DiscreteDataset& data, const ScoreParams& params, LocalScoreCache* cache) {
    double s = 0.0;
    for (std::size_t v = 0; v < dag.size(); ++v) {
        const auto child = data.index_of(dag.nodes()[v]);
        std::vector<std::size_t> parents;
        for (auto p : dag.parents(v)) parents.push_back(data.index_of(dag.nodes()[p]));
        std::sort(parents.begin(), parents.end());
        s += cache ? cache->get_or_compute(data, child, parents, params) : base_local(data, child, parents, params);
    }
    return s;
}

double total_score(const Dag& dag, const DiscreteDataset& data, const ConstraintSet& delta, const ScoreParams& params,
                   LocalScoreCache* cache) {
    const auto p = params.resolved(data.rows());
    return base_score(dag, data, p, cache) + llm_score(dag, delta, p);
}

}  // namespace ranbn
