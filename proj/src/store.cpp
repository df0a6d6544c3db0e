#include "krilc/store.hpp"

namespace krilc {

IterationStore::IterationStore(Index n_d, Vec y_d, Index first_iteration)
    : n_d_(n_d), first_(first_iteration), y_d_(std::move(y_d)) {
    if (n_d_ < 1) throw DomainError("store: n_d must be >= 1");
    if (y_d_.size() != n_d_ + 1) throw DomainError("store: reference must have n_d + 1 samples");
}

Index IterationStore::row(Index j) const {
    if (j < first_ || j >= first_ + static_cast<Index>(u_.size()))
        throw IndexError("store: iteration " + std::to_string(j) + " not available");
    return j - first_;
}

void IterationStore::append_iteration(const Vec& u, const Vec& y, const Vec& v) {
    if (in_progress_) throw SequencingError("store: cannot append while an iteration is in progress");
    if (u.size() != n_d_ || y.size() != n_d_ + 1 || v.size() != n_d_ + 1)
        throw DomainError("store: trajectory lengths do not match the horizon");
    Vec yy = y, vv = v;
    yy[0] = 0.0;
    vv[0] = 0.0;
    Vec e = y_d_ - yy;
    u_.push_back(u);
    y_.push_back(std::move(yy));
    v_.push_back(std::move(vv));
    e_.push_back(std::move(e));
}

void IterationStore::append_iteration_raw(const Vec& u, const Vec& y, const Vec& v, const Vec& e) {
    if (in_progress_) throw SequencingError("store: cannot append while an iteration is in progress");
    if (u.size() != n_d_ || y.size() != n_d_ + 1 || v.size() != n_d_ + 1 || e.size() != n_d_ + 1)
        throw DomainError("store: trajectory lengths do not match the horizon");
    u_.push_back(u);
    y_.push_back(y);
    v_.push_back(v);
    e_.push_back(e);
}

void IterationStore::begin_iteration() {
    if (in_progress_) throw SequencingError("store: iteration already in progress");
    u_.push_back(Vec::Zero(n_d_));
    y_.push_back(Vec::Zero(n_d_ + 1));
    v_.push_back(Vec::Zero(n_d_ + 1));
    e_.push_back(Vec::Zero(n_d_ + 1));
    in_progress_ = true;
}

void IterationStore::record_input(Index t, double u) {
    if (!in_progress_) throw SequencingError("store: no iteration in progress");
    if (t < 1 || t > n_d_) throw IndexError("store: input time out of range");
    u_.back()[t - 1] = u;
}

void IterationStore::record_output(Index t, double y_measured, double v) {
    if (!in_progress_) throw SequencingError("store: no iteration in progress");
    if (t < 1 || t > n_d_ + 1) throw IndexError("store: output time out of range");
    if (t == 1) {
        y_measured = 0.0;
        v = 0.0;
    }
    y_.back()[t - 1] = y_measured;
    v_.back()[t - 1] = v;
    e_.back()[t - 1] = y_d_[t - 1] - y_measured;
}

void IterationStore::finish_iteration() {
    if (!in_progress_) throw SequencingError("store: no iteration in progress");
    in_progress_ = false;
}

double IterationStore::u_at(Index j, Index t) const {
    if (j < first_ || t < 1 || t > n_d_) return 0.0;
    return u_[row(j)][t - 1];
}

double IterationStore::y_at(Index j, Index t) const {
    if (j < first_ || t < 1 || t > n_d_ + 1) return 0.0;
    return y_[row(j)][t - 1];
}

double IterationStore::v_at(Index j, Index t) const {
    if (j < first_ || t < 1 || t > n_d_ + 1) return 0.0;
    return v_[row(j)][t - 1];
}

double IterationStore::e_at(Index j, Index t) const {
    if (j < first_ || t < 1 || t > n_d_ + 1) return 0.0;
    return e_[row(j)][t - 1];
}

}  // namespace krilc
