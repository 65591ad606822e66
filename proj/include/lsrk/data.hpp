#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lsrk/common.hpp"

namespace lsrk {

// Original time scale of ingested data; internal times always live on [0,1].
struct TimeRange {
    double lo = 0.0;
    double hi = 1.0;
    double span() const { return hi - lo; }
    double to_unit(double t) const { return (t - lo) / span(); }
    double from_unit(double u) const { return lo + u * span(); }
};

// One subject: M_i irregular observation times on [0,1], a d1 x M_i block of
// functional-predictor observations, M_i response observations, and d2
// time-constant covariates.
struct SubjectRecord {
    std::string subject_id;
    std::vector<double> times;  // ascending
    Eigen::MatrixXd u;          // d1 x M_i
    std::vector<double> v;      // length M_i
    std::vector<double> z;      // length d2

    int m() const { return static_cast<int>(times.size()); }
};

class LongitudinalDataset {
public:
    LongitudinalDataset(std::vector<SubjectRecord> subjects, int d1, int d2,
                        TimeRange time_range = TimeRange{})
        : subjects_(std::move(subjects)), d1_(d1), d2_(d2), time_range_(time_range) {
        validate();
    }

    int n() const { return static_cast<int>(subjects_.size()); }
    int d1() const { return d1_; }
    int d2() const { return d2_; }
    const TimeRange& time_range() const { return time_range_; }
    const std::vector<SubjectRecord>& subjects() const { return subjects_; }
    const SubjectRecord& subject(int i) const { return subjects_.at(static_cast<std::size_t>(i)); }

    int total_observations() const {
        int total = 0;
        for (const auto& s : subjects_) total += s.m();
        return total;
    }

    std::vector<int> group_sizes() const {
        std::vector<int> m;
        m.reserve(subjects_.size());
        for (const auto& s : subjects_) m.push_back(s.m());
        return m;
    }

    // Optional column names carried from ingestion; empty means defaults.
    std::vector<std::string> predictor_names;
    std::vector<std::string> covariate_names;
    std::string response_name;

private:
    void validate() const {
        if (subjects_.empty()) throw input_error("dataset: no subjects");
        if (d1_ < 0 || d2_ < 0) throw input_error("dataset: negative dimension");
        if (d1_ + d2_ == 0) throw input_error("dataset: needs at least one predictor or covariate");
        int total = 0;
        for (const auto& s : subjects_) {
            const int m = s.m();
            if (m < 1) throw input_error("dataset: subject '" + s.subject_id + "' has no observations");
            if (s.u.rows() != d1_ || s.u.cols() != m)
                throw input_error("dataset: subject '" + s.subject_id + "' has inconsistent predictor block");
            if (static_cast<int>(s.v.size()) != m)
                throw input_error("dataset: subject '" + s.subject_id + "' has inconsistent response length");
            if (static_cast<int>(s.z.size()) != d2_)
                throw input_error("dataset: subject '" + s.subject_id + "' has inconsistent covariate length");
            for (double t : s.times) {
                if (!std::isfinite(t) || t < 0.0 || t > 1.0)
                    throw input_error("dataset: subject '" + s.subject_id + "' has time outside [0,1]");
            }
            if (!std::is_sorted(s.times.begin(), s.times.end()))
                throw input_error("dataset: subject '" + s.subject_id + "' times not sorted");
            if (!all_finite(s.v) || !s.u.allFinite() || !all_finite(s.z))
                throw input_error("dataset: subject '" + s.subject_id + "' has non-finite values");
            total += m;
        }
        if (total < d1_ + d2_ + 1)
            throw input_error("dataset: fewer observations than unknowns (" + std::to_string(total) + ")");
    }

    std::vector<SubjectRecord> subjects_;
    int d1_;
    int d2_;
    TimeRange time_range_;
};

struct PooledObservation {
    int subject;        // 0-based subject index
    int index_within;   // 0-based observation index within the subject
    double t;
};

// Canonical knot ordering for every representer expansion: subjects in dataset
// order, observations in within-subject time order. Stable across calls.
inline std::vector<PooledObservation> pooled_observations(const LongitudinalDataset& data) {
    std::vector<PooledObservation> out;
    out.reserve(static_cast<std::size_t>(data.total_observations()));
    for (int i = 0; i < data.n(); ++i) {
        const auto& s = data.subject(i);
        for (int j = 0; j < s.m(); ++j) out.push_back(PooledObservation{i, j, s.times[static_cast<std::size_t>(j)]});
    }
    return out;
}

inline std::vector<double> pooled_times(const LongitudinalDataset& data) {
    std::vector<double> t;
    t.reserve(static_cast<std::size_t>(data.total_observations()));
    for (const auto& s : data.subjects()) t.insert(t.end(), s.times.begin(), s.times.end());
    return t;
}

inline LongitudinalDataset filter_subjects(const LongitudinalDataset& data,
                                           const std::function<bool(const SubjectRecord&)>& predicate) {
    std::vector<SubjectRecord> kept;
    for (const auto& s : data.subjects())
        if (predicate(s)) kept.push_back(s);
    if (static_cast<int>(kept.size()) < 2)
        throw input_error("filter_subjects: fewer than 2 subjects remain");
    LongitudinalDataset out(std::move(kept), data.d1(), data.d2(), data.time_range());
    out.predictor_names = data.predictor_names;
    out.covariate_names = data.covariate_names;
    out.response_name = data.response_name;
    return out;
}

}  // namespace lsrk
