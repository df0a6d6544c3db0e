#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "krilc/types.hpp"

namespace krilc {

// Input/output/noise/error trajectories indexed by (iteration, time).
// Time runs 1..n_d for inputs and 1..n_d+1 for outputs, noises and errors
// (the last controlled input still produces a measurable output one step
// later). Iteration indices start at `first_iteration` (0 when an initial
// experiment is stored). Conventions enforced at ingestion: u(0) = 0
// implicitly, y(1) = v(1) = 0, and e(t) = y_d(t) - y(t).
class IterationStore {
   public:
    IterationStore() = default;
    IterationStore(Index n_d, Vec y_d, Index first_iteration);

    Index n_d() const { return n_d_; }
    Index first_iteration() const { return first_; }
    Index end_iteration() const { return first_ + static_cast<Index>(u_.size()); }
    Index count() const { return static_cast<Index>(u_.size()); }
    const Vec& reference() const { return y_d_; }

    // Full-iteration ingestion; u has n_d entries, y and v have n_d+1.
    void append_iteration(const Vec& u, const Vec& y, const Vec& v);

    // Verbatim ingestion of persisted rows (errors kept as stored, not
    // recomputed, so reloads are bit-exact).
    void append_iteration_raw(const Vec& u, const Vec& y, const Vec& v, const Vec& e);

    // Sequential ingestion for an in-progress iteration.
    void begin_iteration();
    void record_input(Index t, double u);
    void record_output(Index t, double y_measured, double v);
    void finish_iteration();
    bool in_progress() const { return in_progress_; }

    // Zero-padded accessors: nonpositive times and iterations before
    // first_iteration() read as 0.
    double u_at(Index j, Index t) const;
    double y_at(Index j, Index t) const;
    double v_at(Index j, Index t) const;
    double e_at(Index j, Index t) const;
    double y_d_at(Index t) const { return (t >= 1 && t <= n_d_ + 1) ? y_d_[t - 1] : 0.0; }

    const Vec& u_row(Index j) const { return u_[row(j)]; }
    const Vec& y_row(Index j) const { return y_[row(j)]; }
    const Vec& v_row(Index j) const { return v_[row(j)]; }
    const Vec& e_row(Index j) const { return e_[row(j)]; }

    std::uint64_t seed = 0;
    std::string config_hash;

   private:
    Index row(Index j) const;

    Index n_d_ = 0;
    Index first_ = 1;
    Vec y_d_;
    std::vector<Vec> u_, y_, v_, e_;
    bool in_progress_ = false;
};

}  // namespace krilc
