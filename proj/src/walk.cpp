#include "torwalk/walk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace torwalk {

HittingRecord run_until(WalkState& state, const Region& target, std::int64_t cap) {
    if (target.toral()) {
        if (!state.toral || state.K != target.K())
            throw std::invalid_argument("run_until: toral target needs a matching toral walk");
        return run_until_pred(
            state, [&](LatticePoint p) { return target.contains(TorusPoint(p, state.K)); },
            cap);
    }
    if (state.toral)
        throw std::invalid_argument("run_until: planar target needs a planar walk");
    return run_until_pred(state, [&](LatticePoint p) { return target.contains(p); }, cap);
}

HittingRecord run_until(WalkState& state, LatticePoint target, std::int64_t cap) {
    LatticePoint t = state.toral ? project_point(target, state.K) : target;
    return run_until_pred(state, [&](LatticePoint p) { return p == t; }, cap);
}

bool CoupledRecord::chain_holds() const {
    auto at_least = [](const HittingRecord& a, const HittingRecord& b) {
        // a >= b, treating a censored time as "beyond the cap"
        if (a.censored) return true;
        if (b.censored) return false;
        return a.stop_time >= b.stop_time;
    };
    return at_least(planar_annulus, pullback_annulus) &&
           at_least(pullback_annulus, pullback_disc_comp) &&
           at_least(pullback_disc_comp, planar_disc_comp) &&
           (planar_disc_comp.censored || planar_disc_comp.stop_time >= 1);
}

bool CoupledRecord::projection_law_holds() const {
    auto same = [](const HittingRecord& a, const HittingRecord& b) {
        return a.censored == b.censored && a.stop_time == b.stop_time;
    };
    return same(pullback_annulus, toral_annulus) &&
           same(pullback_disc_comp, toral_disc_comp);
}

CoupledRecord coupled_run(LatticePoint start, double n, double s, std::int64_t K,
                          const StepDistribution& dist, std::mt19937_64 rng,
                          std::int64_t cap) {
    if (!(n + s < static_cast<double>(K) / 4.0))
        throw std::invalid_argument("coupled_run: requires n + s < K/4");
    if (!lt_sq(norm_sq(start), n * n))
        throw std::invalid_argument("coupled_run: start must lie in D(0,n)");

    const double nsq = n * n;
    const double outsq = (n + s) * (n + s);
    LatticePoint planar = start;
    TorusPoint toral(start, K);

    CoupledRecord rec;
    struct Slot {
        HittingRecord* r;
        bool done = false;
    };
    Slot slots[6] = {{&rec.planar_annulus},      {&rec.pullback_annulus},
                     {&rec.toral_annulus},       {&rec.pullback_disc_comp},
                     {&rec.toral_disc_comp},     {&rec.planar_disc_comp}};

    auto check = [&](std::int64_t t) {
        __int128 dp = norm_sq(planar);
        __int128 dpull = norm_sq(project_point(planar, K));
        __int128 dtor = toral_dist_sq(toral, TorusPoint(LatticePoint{0, 0}, K));
        bool hit[6] = {!lt_sq(dp, nsq) && lt_sq(dp, outsq),
                       !lt_sq(dpull, nsq) && lt_sq(dpull, outsq),
                       !lt_sq(dtor, nsq) && lt_sq(dtor, outsq),
                       !lt_sq(dpull, nsq),
                       !lt_sq(dtor, nsq),
                       !lt_sq(dp, nsq)};
        for (int i = 0; i < 6; ++i)
            if (!slots[i].done && hit[i]) {
                slots[i].done = true;
                *slots[i].r = {t, (i == 2 || i == 4) ? toral.p : planar, false, cap};
            }
    };

    check(0);
    std::int64_t t = 0;
    while (t < cap) {
        bool all = true;
        for (const auto& sl : slots) all = all && sl.done;
        if (all) break;
        LatticePoint dx = dist.sample(rng);
        planar = planar + dx;
        toral.p = project_point(toral.p + dx, K);
        ++t;
        check(t);
    }
    for (auto& sl : slots)
        if (!sl.done) *sl.r = {cap, planar, true, cap};
    return rec;
}

std::int64_t ExcursionRecord::total_tau() const {
    std::int64_t s = tau0;
    for (const auto& e : excursions) s += e.tau;
    return s;
}

ExcursionRecord decompose_excursions(TorusPoint xhat, double r, double s, double R,
                                     WalkState& state, std::int64_t count,
                                     bool lemma_geometry) {
    if (!state.toral || state.K != xhat.K)
        throw std::invalid_argument("excursions: need a toral walk matching xhat's K");
    if (!(r >= 1.0 && r < R))
        throw std::invalid_argument("excursions: requires 1 <= r < R");
    if (!(r + s <= R))
        throw std::invalid_argument("excursions: band must lie inside D(x,R)");
    if (!(R < static_cast<double>(state.K) / 2.0))
        throw std::invalid_argument("excursions: requires R < K/2");
    if (lemma_geometry && !(R <= static_cast<double>(state.K) / 24.0))
        throw std::invalid_argument("excursions: lemma geometry requires R <= K/24");

    ExcursionRecord rec;
    rec.center = xhat.p;
    rec.r = r;
    rec.s = s;
    rec.R = R;
    rec.K = xhat.K;

    const double rsq = r * r, bandsq = (r + s) * (r + s), Rsq = R * R;
    auto dsq = [&] { return toral_dist_sq(TorusPoint(state.pos, state.K), xhat); };
    auto in_band = [&] {
        __int128 d = dsq();
        return !lt_sq(d, rsq) && lt_sq(d, bandsq);
    };
    auto in_far = [&] { return !lt_sq(dsq(), Rsq); };
    auto at_center = [&] { return state.pos == xhat.p; };

    // initial leg tau^(0): first band hit (0 when already there)
    std::int64_t leg = 0;
    if (at_center()) ++rec.visits0;
    while (!in_band()) {
        state.step();
        ++leg;
        if (at_center()) ++rec.visits0;
    }
    rec.tau0 = leg;

    std::int64_t cum = rec.tau0;
    rec.excursions.reserve(static_cast<std::size_t>(count));
    for (std::int64_t j = 0; j < count; ++j) {
        Excursion e;
        std::int64_t t = 0;
        while (!in_far()) {
            state.step();
            ++t;
            if (at_center()) ++e.visits;
        }
        e.sigma = t;
        e.visits_first_leg = e.visits;
        while (!in_band()) {
            state.step();
            ++t;
            if (at_center()) ++e.visits;
        }
        e.tau = t;
        cum += t;
        e.cum = cum;
        rec.excursions.push_back(e);
    }
    return rec;
}

LevelCensus census_levels(TorusPoint xhat, const LevelStructure& levels, WalkState& state,
                          std::int64_t cap, std::int64_t max_K) {
    if (!state.toral) throw std::invalid_argument("census: need a toral walk");
    if (!(levels.K_n <= static_cast<double>(max_K)))
        throw std::invalid_argument("census: K_n exceeds the desk-scale guard");
    if (static_cast<double>(state.K) != levels.K_n)
        throw std::invalid_argument("census: walk torus side must equal K_n");

    const int n = levels.n;
    LevelCensus census;
    census.counts.assign(static_cast<std::size_t>(n) + 1, 0);
    census.k_min = std::max(1, static_cast<int>(std::ceil(levels.rho * n)));

    const std::int64_t v_n_target =
        std::max<std::int64_t>(1, std::llround(levels.v[static_cast<std::size_t>(n)]));

    // Entrance bands: thin everywhere except the n -> n-1 downcrossing.
    std::vector<double> entry_outer_sq(n + 1), entry_inner_sq(n + 1);
    std::vector<double> escape_rsq(n + 1), escape_band_sq(n + 1);
    for (int k = 0; k <= n; ++k) {
        double rk = levels.radii[k], sk = levels.widths[k];
        double entry_width = (k == n - 1) ? levels.wide_down_width : sk;
        entry_inner_sq[k] = rk * rk;
        entry_outer_sq[k] = (rk + entry_width) * (rk + entry_width);
        escape_rsq[k] = rk * rk;
        escape_band_sq[k] = (rk + sk) * (rk + sk);
    }

    // Upcrossing counters: armed on entering D(x, r'_{k-1}), fire on reaching
    // D(x, r_k)^c. The top-level tracker (for R_n) arms on the plain radius.
    std::vector<char> armed(n + 1, 0);
    std::vector<double> arm_rsq(n + 1, 0.0);
    for (int k = 1; k <= n; ++k) {
        double inner = levels.r_prime(k - 1);
        arm_rsq[k] = inner * inner;
    }
    char top_armed = 0;
    std::int64_t top_count = 0;
    const double top_arm_sq = levels.radii[n - 1] * levels.radii[n - 1];
    const double top_fire_sq = levels.radii[n] * levels.radii[n];

    auto dist_sq = [&] { return toral_dist_sq(TorusPoint(state.pos, state.K), xhat); };

    __int128 d_old = dist_sq();
    if (state.pos == xhat.p) ++census.counts[0];
    for (int k = 1; k <= n; ++k)
        if (lt_sq(d_old, arm_rsq[k])) armed[k] = 1;
    if (lt_sq(d_old, top_arm_sq)) top_armed = 1;

    const std::int64_t t0 = state.time;
    while (top_count < v_n_target) {
        if (state.time - t0 >= cap) {
            census.censored = true;
            break;
        }
        state.step();
        __int128 d_new = dist_sq();

        if (state.pos == xhat.p) ++census.counts[0];

        if (census.band_faithful) {
            for (int k = 0; k <= n; ++k) {
                // escape from D(x, r_k) must land in the s_k band
                if (lt_sq(d_old, escape_rsq[k]) && !lt_sq(d_new, escape_rsq[k]) &&
                    !lt_sq(d_new, escape_band_sq[k])) {
                    census.band_faithful = false;
                    break;
                }
                // entrance to D(x, r'_k) must land at or beyond r_k
                if (!lt_sq(d_old, entry_outer_sq[k]) && lt_sq(d_new, entry_outer_sq[k]) &&
                    lt_sq(d_new, entry_inner_sq[k])) {
                    census.band_faithful = false;
                    break;
                }
            }
        }

        for (int k = 1; k <= n; ++k) {
            if (!armed[k] && lt_sq(d_new, arm_rsq[k])) armed[k] = 1;
            if (armed[k] && !lt_sq(d_new, escape_rsq[k])) {
                armed[k] = 0;
                ++census.counts[k];
            }
        }
        if (!top_armed && lt_sq(d_new, top_arm_sq)) top_armed = 1;
        if (top_armed && !lt_sq(d_new, top_fire_sq)) {
            top_armed = 0;
            ++top_count;
        }
        d_old = d_new;
    }
    census.completion_time = state.time - t0;

    bool counts_ok = census.counts[0] == 0;
    for (int k = census.k_min; k <= n - 1 && counts_ok; ++k) {
        double vk = levels.v[k];
        counts_ok = std::abs(static_cast<double>(census.counts[k]) - vk) <=
                    static_cast<double>(k);
    }
    census.successful =
        !census.censored && census.band_faithful && counts_ok;
    return census;
}

CoverResult cover_run(std::int64_t K, const StepDistribution& dist, std::mt19937_64 rng,
                      double cap_multiplier) {
    if (K < 1) throw std::invalid_argument("cover_run: K must be >= 1");
    CoverResult res;
    res.K = K;
    res.pi_gamma = dist.pi_gamma();
    res.visit_times.assign(static_cast<std::size_t>(K) * K, -1);
    res.last_point = TorusPoint(LatticePoint{0, 0}, K);
    if (K == 1) {
        res.visit_times[0] = 0;
        res.cover_time = 0;
        res.cap = 1;
        return res;
    }

    double lk = static_cast<double>(K) * std::log(static_cast<double>(K));
    res.cap = static_cast<std::int64_t>(
        std::ceil(cap_multiplier * (4.0 / dist.pi_gamma()) * lk * lk));

    // fold the step law onto the torus once; offsets then satisfy |d| < K
    const auto& entries = dist.entries();
    std::vector<std::int64_t> fx(entries.size()), fy(entries.size());
    std::vector<double> probs(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        fx[i] = ((entries[i].offset.x % K) + K) % K;
        fy[i] = ((entries[i].offset.y % K) + K) % K;
        probs[i] = entries[i].prob;
    }
    AliasSampler folded(probs);

    const std::int64_t lo = -(K / 2);
    std::int64_t ix = -lo, iy = -lo;  // grid coordinates of the origin
    res.visit_times[static_cast<std::size_t>(ix) * K + iy] = 0;
    std::int64_t unvisited = K * K - 1;
    std::int64_t t = 0;
    while (unvisited > 0 && t < res.cap) {
        std::size_t e = folded.sample_index(rng);
        ix += fx[e];
        if (ix >= K) ix -= K;
        iy += fy[e];
        if (iy >= K) iy -= K;
        ++t;
        auto& vt = res.visit_times[static_cast<std::size_t>(ix) * K + iy];
        if (vt < 0) {
            vt = t;
            if (--unvisited == 0) {
                res.cover_time = t;
                res.last_point = TorusPoint(LatticePoint{ix + lo, iy + lo}, K);
            }
        }
    }
    if (unvisited > 0) {
        res.censored = true;
        res.cover_time = res.cap;
    }
    return res;
}

std::string visit_times_csv(const CoverResult& cover) {
    std::string out = "x,y,first_visit_time\n";
    for (std::size_t i = 0; i < cover.visit_times.size(); ++i) {
        auto p = cover.point_at(i);
        out += std::to_string(p.p.x) + "," + std::to_string(p.p.y) + "," +
               std::to_string(cover.visit_times[i]) + "\n";
    }
    return out;
}

std::string excursions_csv(const ExcursionRecord& rec) {
    std::string out = "j,tau,sigma,Y\n";
    out += "0," + std::to_string(rec.tau0) + "," + std::to_string(rec.tau0) + "," +
           std::to_string(rec.visits0) + "\n";
    for (std::size_t j = 0; j < rec.excursions.size(); ++j) {
        const auto& e = rec.excursions[j];
        out += std::to_string(j + 1) + "," + std::to_string(e.tau) + "," +
               std::to_string(e.sigma) + "," + std::to_string(e.visits) + "\n";
    }
    return out;
}

std::vector<TorusPoint> late_points(const CoverResult& cover, double alpha) {
    if (alpha < 0) throw std::invalid_argument("late_points: alpha must be >= 0");
    double lk = static_cast<double>(cover.K) * std::log(static_cast<double>(cover.K));
    double threshold = (4.0 * alpha / cover.pi_gamma) * lk * lk;
    if (cover.censored && threshold > static_cast<double>(cover.cap))
        throw std::invalid_argument(
            "late_points: censored cover run cannot resolve this alpha");
    std::vector<TorusPoint> out;
    for (std::size_t i = 0; i < cover.visit_times.size(); ++i) {
        std::int64_t t = cover.visit_times[i];
        double first = t < 0 ? static_cast<double>(cover.cap) : static_cast<double>(t);
        if (first >= threshold) out.push_back(cover.point_at(i));
    }
    return out;
}

}  // namespace torwalk
