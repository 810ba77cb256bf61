#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "torwalk/geometry.hpp"
#include "torwalk/point.hpp"
#include "torwalk/rng.hpp"
#include "torwalk/step_distribution.hpp"

namespace torwalk {

/// One walk, planar or toral. Single-owner: trials run with independent
/// states and streams. Toral positions are kept as window representatives.
struct WalkState {
    bool toral = false;
    std::int64_t K = 0;
    LatticePoint pos;
    std::int64_t time = 0;
    std::mt19937_64 rng;
    const StepDistribution* dist = nullptr;

    static WalkState planar(LatticePoint start, const StepDistribution& d,
                            std::mt19937_64 g) {
        return WalkState{false, 0, start, 0, std::move(g), &d};
    }
    static WalkState on_torus(TorusPoint start, const StepDistribution& d,
                              std::mt19937_64 g) {
        return WalkState{true, start.K, start.p, 0, std::move(g), &d};
    }

    void step() {
        pos = pos + dist->sample(rng);
        if (toral) pos = project_point(pos, K);
        ++time;
    }
};

struct HittingRecord {
    std::int64_t stop_time = 0;
    LatticePoint stop_position;
    bool censored = false;
    std::int64_t cap = 0;
};

template <typename Pred>
HittingRecord run_until_pred(WalkState& state, Pred&& hit, std::int64_t cap) {
    if (cap <= 0) throw std::invalid_argument("run_until: cap must be positive");
    std::int64_t t0 = state.time;
    while (true) {
        if (hit(state.pos)) return {state.time - t0, state.pos, false, cap};
        if (state.time - t0 >= cap) return {cap, state.pos, true, cap};
        state.step();
    }
}

HittingRecord run_until(WalkState& state, const Region& target, std::int64_t cap);
HittingRecord run_until(WalkState& state, LatticePoint target, std::int64_t cap);

/// One planar trajectory and its projection, driven by a shared step sequence;
/// all stopping times are evaluated on the fly. Resolution order is the
/// paper's escape-time chain for starts inside D(0,n).
struct CoupledRecord {
    HittingRecord planar_annulus;       // T_{bd D(0,n)_s}
    HittingRecord pullback_annulus;     // T_{pi^-1 bd D(0,n)_s}, from the planar path
    HittingRecord toral_annulus;        // same stop, from the projected path
    HittingRecord pullback_disc_comp;   // T_{pi^-1 (D(0,n)^c_K)}
    HittingRecord toral_disc_comp;      // from the projected path
    HittingRecord planar_disc_comp;     // T_{D(0,n)^c}

    bool chain_holds() const;       // annulus >= pullback annulus >= pullback comp >= planar comp >= 1
    bool projection_law_holds() const;  // pullback times equal toral times, exactly
};

CoupledRecord coupled_run(LatticePoint start, double n, double s, std::int64_t K,
                          const StepDistribution& dist, std::mt19937_64 rng,
                          std::int64_t cap);

/// Excursions bd D(x,r)_s -> D(x,R)^c_K -> bd D(x,r)_s on the torus.
struct Excursion {
    std::int64_t tau = 0;     // full excursion length
    std::int64_t sigma = 0;   // first leg, band to far set
    std::int64_t visits = 0;  // visits to the center point during the excursion
    std::int64_t visits_first_leg = 0;  // the part accrued before sigma
    std::int64_t cum = 0;     // running sum of tau up to and including this one
};

struct ExcursionRecord {
    LatticePoint center;  // window representative
    double r = 0, s = 0, R = 0;
    std::int64_t K = 0;
    std::int64_t tau0 = 0;  // initial leg: first hit of the band
    std::int64_t visits0 = 0;
    std::vector<Excursion> excursions;

    std::int64_t total_tau() const;
};

/// Runs until `count` complete excursions. R <= K/24 is enforced only when
/// lemma_geometry is set (the concentration lemma's hypothesis).
ExcursionRecord decompose_excursions(TorusPoint xhat, double r, double s, double R,
                                     WalkState& state, std::int64_t count,
                                     bool lemma_geometry = false);

struct LevelCensus {
    std::vector<std::int64_t> counts;  // counts[k] = N_{n,k}; counts[0] = visits to xhat
    bool band_faithful = true;
    std::int64_t completion_time = 0;  // R_n^xhat
    bool censored = false;
    int k_min = 1;  // ceil(rho * n): lowest level entering the success window
    bool successful = false;
};

/// Counts per-level upcrossing excursions until v_n top-level excursions
/// complete, tracks band-faithfulness step by step (wide band only for the
/// n -> n-1 downcrossing), then evaluates the success predicate.
LevelCensus census_levels(TorusPoint xhat, const LevelStructure& levels, WalkState& state,
                          std::int64_t cap, std::int64_t max_K = 100000);

struct CoverResult {
    std::int64_t K = 0;
    std::int64_t cover_time = 0;
    bool censored = false;
    std::int64_t cap = 0;
    TorusPoint last_point;
    std::vector<std::int64_t> visit_times;  // K*K, -1 while unvisited
    double pi_gamma = 0.0;

    std::int64_t window_lo() const { return -(K / 2); }
    std::size_t index_of(const TorusPoint& p) const {
        return static_cast<std::size_t>((p.p.x - window_lo()) * K + (p.p.y - window_lo()));
    }
    std::int64_t visit_time(const TorusPoint& p) const { return visit_times[index_of(p)]; }
    TorusPoint point_at(std::size_t idx) const {
        return TorusPoint(
            LatticePoint{window_lo() + static_cast<std::int64_t>(idx) / K,
                         window_lo() + static_cast<std::int64_t>(idx) % K},
            K);
    }
};

/// Walks from the origin until every torus point is visited, or the cap
/// cap_multiplier * (4/pi_Gamma) (K log K)^2 is reached (censoring, not failure).
CoverResult cover_run(std::int64_t K, const StepDistribution& dist, std::mt19937_64 rng,
                      double cap_multiplier = 64.0);

/// L_K(alpha): points with first visit at or after (4 alpha / pi_Gamma)(K log K)^2.
/// Censored runs are rejected when the threshold exceeds the censoring cap.
std::vector<TorusPoint> late_points(const CoverResult& cover, double alpha);

/// CSV exports: visit tables as "x,y,first_visit_time" (window coordinates,
/// -1 for unvisited under censoring), excursions as "j,tau,sigma,Y".
std::string visit_times_csv(const CoverResult& cover);
std::string excursions_csv(const ExcursionRecord& rec);

}  // namespace torwalk
