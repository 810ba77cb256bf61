#include "torwalk/solvers.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace torwalk {

namespace {

LatticePoint wrap_if(LatticePoint p, std::int64_t K) {
    return K > 0 ? project_point(p, K) : p;
}

}  // namespace

LatticeDomain LatticeDomain::planar(LatticePoint center, double reach,
                                    const std::function<bool(LatticePoint)>& keep) {
    LatticeDomain d;
    auto r = static_cast<std::int64_t>(std::ceil(reach)) + 1;
    d.min_x_ = center.x - r;
    d.min_y_ = center.y - r;
    d.width_ = d.height_ = 2 * r + 1;
    for (std::int64_t x = center.x - r; x <= center.x + r; ++x)
        for (std::int64_t y = center.y - r; y <= center.y + r; ++y)
            if (keep({x, y})) d.points_.push_back({x, y});
    d.build_grid();
    return d;
}

LatticeDomain LatticeDomain::toral(std::int64_t K,
                                   const std::function<bool(LatticePoint)>& keep) {
    if (K < 2) throw std::invalid_argument("domain: toral K must be >= 2");
    LatticeDomain d;
    d.K_ = K;
    d.min_x_ = d.min_y_ = -(K / 2);
    d.width_ = d.height_ = K;
    const std::int64_t lo = -(K / 2), hi = K - 1 - K / 2;
    for (std::int64_t x = lo; x <= hi; ++x)
        for (std::int64_t y = lo; y <= hi; ++y)
            if (keep({x, y})) d.points_.push_back({x, y});
    d.build_grid();
    return d;
}

void LatticeDomain::build_grid() {
    grid_.assign(static_cast<std::size_t>(width_) * height_, -1);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        auto gx = points_[i].x - min_x_, gy = points_[i].y - min_y_;
        grid_[static_cast<std::size_t>(gx) * height_ + gy] = static_cast<std::int32_t>(i);
    }
}

std::ptrdiff_t LatticeDomain::index_of(LatticePoint p) const {
    auto gx = p.x - min_x_, gy = p.y - min_y_;
    if (gx < 0 || gy < 0 || gx >= width_ || gy >= height_) return -1;
    return grid_[static_cast<std::size_t>(gx) * height_ + gy];
}

struct AbsorbingSystem::Impl {
    Eigen::SparseMatrix<double> A;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        cg;
    bool direct = false;
};

AbsorbingSystem::~AbsorbingSystem() = default;
AbsorbingSystem::AbsorbingSystem(AbsorbingSystem&&) noexcept = default;

AbsorbingSystem::AbsorbingSystem(LatticeDomain domain, const StepDistribution& dist,
                                 std::size_t direct_cap)
    : domain_(std::move(domain)), dist_(&dist), impl_(std::make_unique<Impl>()) {
    const auto n = static_cast<Eigen::Index>(domain_.size());
    if (n == 0) throw std::invalid_argument("absorbing system: empty domain");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * (dist.entries().size() + 1));
    const auto& pts = domain_.points();
    for (Eigen::Index i = 0; i < n; ++i) {
        trip.emplace_back(i, i, 1.0);
        for (const auto& e : dist_->entries()) {
            LatticePoint z = wrap_if(pts[i] + e.offset, domain_.K());
            auto j = domain_.index_of(z);
            if (j >= 0) trip.emplace_back(i, static_cast<Eigen::Index>(j), -e.prob);
        }
    }
    impl_->A.resize(n, n);
    impl_->A.setFromTriplets(trip.begin(), trip.end());
    trip.clear();
    trip.shrink_to_fit();
    impl_->A.makeCompressed();

    report_.unknowns = domain_.size();
    impl_->direct = domain_.size() <= direct_cap;
    if (impl_->direct) {
        report_.method = "ldlt";
        impl_->ldlt.compute(impl_->A);
        if (impl_->ldlt.info() != Eigen::Success)
            throw std::runtime_error("absorbing system: factorization failed (singular?)");
    } else {
        report_.method = "cg";
        impl_->cg.setTolerance(1e-12);
        impl_->cg.setMaxIterations(20000);
        impl_->cg.compute(impl_->A);
        if (impl_->cg.info() != Eigen::Success)
            throw std::runtime_error("absorbing system: preconditioner failed");
    }
}

std::vector<double> AbsorbingSystem::solve(const std::vector<double>& rhs) const {
    const auto n = static_cast<Eigen::Index>(domain_.size());
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), n);
    Eigen::VectorXd x = impl_->direct ? impl_->ldlt.solve(b).eval()
                                      : impl_->cg.solve(b).eval();
    double res = (impl_->A * x - b).lpNorm<Eigen::Infinity>() /
                 (b.lpNorm<Eigen::Infinity>() + 1.0);
    report_.max_residual = std::max(report_.max_residual, res);
    return {x.data(), x.data() + n};
}

std::vector<double> AbsorbingSystem::ones_rhs() const {
    return std::vector<double>(domain_.size(), 1.0);
}

std::vector<double> AbsorbingSystem::unit_rhs(LatticePoint p) const {
    std::vector<double> b(domain_.size(), 0.0);
    auto i = domain_.index_of(wrap_if(p, domain_.K()));
    if (i < 0) throw std::invalid_argument("absorbing system: point outside domain");
    b[static_cast<std::size_t>(i)] = 1.0;
    return b;
}

std::vector<double> AbsorbingSystem::absorption_rhs(
    const std::function<bool(LatticePoint)>& target) const {
    std::vector<double> b(domain_.size(), 0.0);
    const auto& pts = domain_.points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double m = 0.0;
        for (const auto& e : dist_->entries()) {
            LatticePoint z = wrap_if(pts[i] + e.offset, domain_.K());
            if (domain_.index_of(z) < 0 && target(z)) m += e.prob;
        }
        b[i] = m;
    }
    return b;
}

namespace {

LatticeDomain domain_from_region(const Region& region) {
    if (region.toral()) {
        return LatticeDomain::toral(region.K(),
                                    [&](LatticePoint p) {
                                        return region.contains(TorusPoint(p, region.K()));
                                    });
    }
    double reach = std::sqrt(std::max(region.inner_sq(), region.outer_sq()));
    return LatticeDomain::planar(region.center(), reach,
                                 [&](LatticePoint p) { return region.contains(p); });
}

}  // namespace

GreenTable::GreenTable(const Region& domain, const StepDistribution& dist, std::size_t cap)
    : sys_([&] {
          auto d = domain_from_region(domain);
          if (d.size() > cap)
              throw std::invalid_argument("green: domain exceeds the configured cap");
          return AbsorbingSystem(std::move(d), dist);
      }()) {}

const std::vector<double>& GreenTable::column(LatticePoint y) const {
    auto j = sys_.domain().index_of(y);
    if (j < 0) throw std::invalid_argument("green: column point outside domain");
    auto it = columns_.find(static_cast<std::size_t>(j));
    if (it == columns_.end())
        it = columns_.emplace(static_cast<std::size_t>(j), sys_.solve(sys_.unit_rhs(y)))
                 .first;
    return it->second;
}

double GreenTable::value(LatticePoint x, LatticePoint y) const {
    auto i = sys_.domain().index_of(x);
    auto j = sys_.domain().index_of(y);
    if (i < 0 || j < 0) return 0.0;  // zero off the domain
    return column(y)[static_cast<std::size_t>(i)];
}

std::vector<double> GreenTable::escape_times() const { return sys_.solve(sys_.ones_rhs()); }

double GreenTable::escape_time(LatticePoint x) const {
    auto i = sys_.domain().index_of(x);
    if (i < 0) return 0.0;
    return escape_times()[static_cast<std::size_t>(i)];
}

std::vector<double> expected_escape_time(const GreenTable& green) {
    return green.escape_times();
}

double EntryTimeTable::at(LatticePoint p) const {
    auto i = domain.index_of(p);
    return i < 0 ? 0.0 : times[static_cast<std::size_t>(i)];
}

EntryTimeTable expected_toral_entry_time(std::int64_t K, const Region& target,
                                         const StepDistribution& dist) {
    if (!target.toral()) throw std::invalid_argument("entry time: target must be toral");
    auto domain = LatticeDomain::toral(
        K, [&](LatticePoint p) { return !target.contains(TorusPoint(p, K)); });
    AbsorbingSystem sys(std::move(domain), dist);
    EntryTimeTable out;
    out.times = sys.solve(sys.ones_rhs());
    out.domain = sys.domain();
    out.report = sys.report();
    return out;
}

double HitTable::at(LatticePoint y) const {
    for (std::size_t i = 0; i < targets.size(); ++i)
        if (targets[i] == y) return prob[i];
    return 0.0;
}

HitTable hitting_distribution(const Region& A, LatticePoint x, const Region& superdomain,
                              const StepDistribution& dist, HitMethod method) {
    const bool toral = A.toral();
    const std::int64_t K = toral ? A.K() : 0;
    if (toral ? A.contains(TorusPoint(x, K)) : A.contains(x))
        throw std::invalid_argument("hitting distribution: start must lie outside A");

    LatticeDomain domain =
        toral ? LatticeDomain::toral(
                    K, [&](LatticePoint p) { return !A.contains(TorusPoint(p, K)); })
              : LatticeDomain::planar(
                    superdomain.center(),
                    std::sqrt(std::max(superdomain.inner_sq(), superdomain.outer_sq())),
                    [&](LatticePoint p) {
                        return superdomain.contains(p) && !A.contains(p);
                    });
    AbsorbingSystem sys(std::move(domain), dist);

    HitTable out;
    out.start = toral ? project_point(x, K) : x;
    if (sys.domain().index_of(out.start) < 0)
        throw std::invalid_argument("hitting distribution: start outside the superdomain");
    out.targets = A.members();

    if (method == HitMethod::LastExit) {
        // H_A(x,y) = sum_z G_{A^c}(x,z) p1(z,y); one adjoint solve for the row.
        auto g = sys.solve(sys.unit_rhs(out.start));
        for (const auto& y : out.targets) {
            double h = 0.0;
            for (const auto& e : dist.entries()) {
                LatticePoint z = wrap_if(y - e.offset, K);
                auto zi = sys.domain().index_of(z);
                if (zi >= 0) h += e.prob * g[static_cast<std::size_t>(zi)];
            }
            out.prob.push_back(h);
        }
    } else {
        for (const auto& y : out.targets) {
            auto h = sys.solve(sys.absorption_rhs([&](LatticePoint p) { return p == y; }));
            auto xi = sys.domain().index_of(out.start);
            out.prob.push_back(h[static_cast<std::size_t>(xi)]);
        }
    }
    out.total_mass = std::accumulate(out.prob.begin(), out.prob.end(), 0.0);
    out.escape_mass = 1.0 - out.total_mass;
    out.report = sys.report();
    return out;
}

double hit_point_before_exit(double n, LatticePoint x, const StepDistribution& dist,
                             std::optional<std::int64_t> K) {
    const LatticePoint zero{0, 0};
    if (K) x = project_point(x, *K);
    if (x == zero) return 1.0;
    const double nsq = n * n;
    LatticeDomain domain =
        K ? LatticeDomain::toral(*K,
                                 [&](LatticePoint p) {
                                     return lt_sq(toral_dist_sq(TorusPoint(p, *K),
                                                                TorusPoint(zero, *K)),
                                                  nsq) &&
                                            !(p == zero);
                                 })
          : LatticeDomain::planar(zero, n, [&](LatticePoint p) {
                return lt_sq(norm_sq(p), nsq) && !(p == zero);
            });
    AbsorbingSystem sys(std::move(domain), dist);
    if (sys.domain().index_of(x) < 0)
        throw std::invalid_argument("hit-before-exit: start must lie in D(0,n) \\ {0}");
    auto h = sys.solve(sys.absorption_rhs([&](LatticePoint p) { return p == zero; }));
    return h[static_cast<std::size_t>(sys.domain().index_of(x))];
}

RuinProbabilities gamblers_ruin(double r, double R, LatticePoint x,
                                const StepDistribution& dist,
                                std::optional<std::int64_t> K) {
    if (!(r < R)) throw std::invalid_argument("gamblers_ruin: requires r < R");
    const LatticePoint zero{0, 0};
    if (K) x = project_point(x, *K);
    const double rsq = r * r, Rsq = R * R;
    auto dist_sq = [&](LatticePoint p) -> __int128 {
        return K ? toral_dist_sq(TorusPoint(p, *K), TorusPoint(zero, *K)) : norm_sq(p);
    };
    LatticeDomain domain =
        K ? LatticeDomain::toral(*K,
                                 [&](LatticePoint p) {
                                     auto d = dist_sq(p);
                                     return !lt_sq(d, rsq) && lt_sq(d, Rsq);
                                 })
          : LatticeDomain::planar(zero, R, [&](LatticePoint p) {
                auto d = norm_sq(p);
                return !lt_sq(d, rsq) && lt_sq(d, Rsq);
            });
    AbsorbingSystem sys(std::move(domain), dist);
    auto xi = sys.domain().index_of(x);
    if (xi < 0) throw std::invalid_argument("gamblers_ruin: start must satisfy r <= |x| < R");
    auto p_in = sys.solve(sys.absorption_rhs(
        [&](LatticePoint p) { return lt_sq(dist_sq(p), rsq); }));
    auto p_out = sys.solve(sys.absorption_rhs(
        [&](LatticePoint p) { return !lt_sq(dist_sq(p), Rsq); }));
    return {p_out[static_cast<std::size_t>(xi)], p_in[static_cast<std::size_t>(xi)]};
}

ThreeSetResult three_set(std::int64_t K, const std::vector<LatticePoint>& A,
                         const std::vector<LatticePoint>& B,
                         const std::vector<LatticePoint>& C,
                         const StepDistribution& dist) {
    // partition validation over the whole window
    const std::int64_t lo = -(K / 2);
    std::vector<std::int8_t> label(static_cast<std::size_t>(K) * K, 0);
    auto cell = [&](LatticePoint p) -> std::int8_t& {
        p = project_point(p, K);
        return label[static_cast<std::size_t>(p.x - lo) * K + (p.y - lo)];
    };
    auto mark = [&](const std::vector<LatticePoint>& S, std::int8_t tag) {
        for (const auto& p : S) {
            auto& c = cell(p);
            if (c != 0) throw std::invalid_argument("three_set: partition overlap");
            c = tag;
        }
    };
    mark(A, 1);
    mark(B, 2);
    mark(C, 3);
    for (auto c : label)
        if (c == 0) throw std::invalid_argument("three_set: partition gap");
    auto is_B = [&](LatticePoint p) { return cell(p) == 2; };
    auto is_A = [&](LatticePoint p) { return cell(p) == 1; };

    ThreeSetResult res;
    res.A = A;
    res.B = B;

    std::optional<AbsorbingSystem> sysA, sysB;
    if (!A.empty())
        sysA.emplace(LatticeDomain::toral(K, [&](LatticePoint p) { return is_A(p); }),
                     dist);
    if (!B.empty())
        sysB.emplace(LatticeDomain::toral(K, [&](LatticePoint p) { return is_B(p); }),
                     dist);

    auto weighted_rhs = [&](const AbsorbingSystem& sys,
                            const std::function<double(LatticePoint)>& w) {
        std::vector<double> b(sys.domain().size(), 0.0);
        const auto& pts = sys.domain().points();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double m = 0.0;
            for (const auto& e : dist.entries()) {
                LatticePoint z = project_point(pts[i] + e.offset, K);
                if (sys.domain().index_of(z) < 0) m += e.prob * w(z);
            }
            b[i] = m;
        }
        return b;
    };

    std::vector<double> fa_vec, fb_vec;
    if (sysA) {
        res.psi = sysA->solve(weighted_rhs(*sysA, [&](LatticePoint z) {
            return is_B(z) ? 1.0 : 0.0;
        }));
        fa_vec = sysA->solve(sysA->ones_rhs());
        res.f_A = *std::max_element(fa_vec.begin(), fa_vec.end());
        res.psi_sup = *std::max_element(res.psi.begin(), res.psi.end());
    }
    if (sysB) {
        res.sigma = sysB->solve(weighted_rhs(*sysB, [&](LatticePoint z) {
            return is_A(z) ? 1.0 : 0.0;
        }));
        fb_vec = sysB->solve(sysB->ones_rhs());
        res.f_B = *std::max_element(fb_vec.begin(), fb_vec.end());
        res.sigma_sup = *std::max_element(res.sigma.begin(), res.sigma.end());
    }
    if (sysA) {
        res.rho = sysA->solve(weighted_rhs(*sysA, [&](LatticePoint z) {
            if (!is_B(z) || !sysB) return 0.0;
            auto zi = sysB->domain().index_of(z);
            return zi < 0 ? 0.0 : res.sigma[static_cast<std::size_t>(zi)];
        }));
    }
    if (sysB) {
        res.phi = sysB->solve(weighted_rhs(*sysB, [&](LatticePoint z) {
            if (!is_A(z) || !sysA) return 0.0;
            auto zi = sysA->domain().index_of(z);
            return zi < 0 ? 0.0 : res.psi[static_cast<std::size_t>(zi)];
        }));
    }

    for (std::size_t i = 0; i < res.psi.size(); ++i)
        res.order_violation = std::max(res.order_violation, res.rho[i] - res.psi[i]);
    for (std::size_t i = 0; i < res.sigma.size(); ++i)
        res.order_violation = std::max(res.order_violation, res.phi[i] - res.sigma[i]);

    // independently solved G_{A u B} and E(T_C) for the sandwich bounds
    AbsorbingSystem sysAB(
        LatticeDomain::toral(K, [&](LatticePoint p) { return cell(p) != 3; }), dist);
    auto tC = sysAB.solve(sysAB.ones_rhs());

    auto full_green = [&](AbsorbingSystem& sys) {
        const auto n = sys.domain().size();
        std::vector<std::vector<double>> g(n);
        for (std::size_t j = 0; j < n; ++j)
            g[j] = sys.solve(sys.unit_rhs(sys.domain().points()[j]));
        return g;  // g[j][i] = G(point_i, point_j)
    };
    std::vector<std::vector<double>> gA, gB, gAB;
    if (sysA) gA = full_green(*sysA);
    if (sysB) gB = full_green(*sysB);
    gAB = full_green(sysAB);

    auto idxA = [&](LatticePoint p) { return sysA->domain().index_of(p); };
    auto idxB = [&](LatticePoint p) { return sysB->domain().index_of(p); };
    auto idxAB = [&](LatticePoint p) { return sysAB.domain().index_of(p); };

    double viol = 0.0;
    // (a, a') pairs
    for (std::size_t ai = 0; ai < A.size(); ++ai) {
        auto a_ab = idxAB(A[ai]);
        for (std::size_t aj = 0; aj < A.size(); ++aj) {
            double lower = gA[aj][static_cast<std::size_t>(idxA(A[ai]))];
            double mid = gAB[static_cast<std::size_t>(idxAB(A[aj]))]
                            [static_cast<std::size_t>(a_ab)];
            viol = std::max(viol, lower - mid);
            double denom = 1.0 - res.rho[aj];
            if (denom > 0.0) {
                double upper = lower + res.rho[ai] / denom *
                                           gA[aj][static_cast<std::size_t>(idxA(A[aj]))];
                viol = std::max(viol, mid - upper);
            }
        }
    }
    // (b, b') pairs
    for (std::size_t bi = 0; bi < B.size(); ++bi) {
        auto b_ab = idxAB(B[bi]);
        for (std::size_t bj = 0; bj < B.size(); ++bj) {
            double lower = gB[bj][static_cast<std::size_t>(idxB(B[bi]))];
            double mid = gAB[static_cast<std::size_t>(idxAB(B[bj]))]
                            [static_cast<std::size_t>(b_ab)];
            viol = std::max(viol, lower - mid);
            double denom = 1.0 - res.phi[bj];
            if (denom > 0.0) {
                double upper = lower + res.phi[bi] / denom *
                                           gB[bj][static_cast<std::size_t>(idxB(B[bj]))];
                viol = std::max(viol, mid - upper);
            }
        }
    }
    // (a, b) cross pairs
    for (std::size_t ai = 0; ai < A.size(); ++ai) {
        double gAaa = gA[ai][static_cast<std::size_t>(idxA(A[ai]))];
        for (std::size_t bi = 0; bi < B.size(); ++bi) {
            double mid = gAB[static_cast<std::size_t>(idxAB(B[bi]))]
                            [static_cast<std::size_t>(idxAB(A[ai]))];
            viol = std::max(viol, 0.0 - mid);
            double bound = std::numeric_limits<double>::infinity();
            if (1.0 - res.rho[ai] > 0.0)
                bound = std::min(bound, res.sigma[bi] / (1.0 - res.rho[ai]) * gAaa);
            double gBbb = gB[bi][static_cast<std::size_t>(idxB(B[bi]))];
            if (1.0 - res.phi[bi] > 0.0)
                bound = std::min(bound, res.psi[ai] / (1.0 - res.phi[bi]) * gBbb);
            if (std::isfinite(bound)) viol = std::max(viol, mid - bound);
        }
    }
    res.green_sandwich_violation = viol;

    double tviol = 0.0;
    double damp = 1.0 - res.psi_sup * res.sigma_sup;
    for (std::size_t ai = 0; ai < A.size(); ++ai) {
        double lower = fa_vec[static_cast<std::size_t>(idxA(A[ai]))];
        double mid = tC[static_cast<std::size_t>(idxAB(A[ai]))];
        tviol = std::max(tviol, lower - mid);
        if (damp > 0.0) {
            double upper =
                lower + res.psi[ai] * (res.f_B + res.sigma_sup * res.f_A) / damp;
            tviol = std::max(tviol, mid - upper);
        }
    }
    for (std::size_t bi = 0; bi < B.size(); ++bi) {
        double lower = fb_vec[static_cast<std::size_t>(idxB(B[bi]))];
        double mid = tC[static_cast<std::size_t>(idxAB(B[bi]))];
        tviol = std::max(tviol, lower - mid);
        if (damp > 0.0) {
            double upper =
                lower + res.sigma[bi] * (res.f_A + res.psi_sup * res.f_B) / damp;
            tviol = std::max(tviol, mid - upper);
        }
    }
    res.time_sandwich_violation = tviol;
    return res;
}

ThreeSetResult three_set_disc_annulus(std::int64_t K, double n, double s,
                                      const StepDistribution& dist) {
    const TorusPoint zero(LatticePoint{0, 0}, K);
    const double nsq = n * n, outsq = (n + s) * (n + s);
    std::vector<LatticePoint> A, B, C;
    const std::int64_t lo = -(K / 2), hi = K - 1 - K / 2;
    for (std::int64_t x = lo; x <= hi; ++x)
        for (std::int64_t y = lo; y <= hi; ++y) {
            LatticePoint p{x, y};
            auto d = toral_dist_sq(TorusPoint(p, K), zero);
            if (lt_sq(d, nsq))
                A.push_back(p);
            else if (lt_sq(d, outsq))
                C.push_back(p);
            else
                B.push_back(p);
        }
    return three_set(K, A, B, C, dist);
}

HarnackResult harnack_ratio(HarnackSetting setting, double r, double m, double s,
                            std::optional<std::int64_t> K, const StepDistribution& dist,
                            std::size_t max_starts) {
    const LatticePoint zero{0, 0};
    const double R = 4.0 * m * r;
    HarnackResult out;

    LatticeDomain domain;
    std::vector<LatticePoint> starts, targets;
    std::int64_t KK = K.value_or(0);
    auto dsq = [&](LatticePoint p) -> __int128 {
        return KK > 0 ? toral_dist_sq(TorusPoint(p, KK), TorusPoint(zero, KK))
                      : norm_sq(p);
    };

    if (setting == HarnackSetting::Interior || setting == HarnackSetting::InteriorToral) {
        if (setting == HarnackSetting::InteriorToral) {
            if (!K) throw std::invalid_argument("harnack: interior-toral needs K");
            if (!(static_cast<double>(*K) > 4.0 * (R + s)))
                throw std::invalid_argument("harnack: interior-toral needs K > 4(R+s)");
            domain = LatticeDomain::toral(
                *K, [&](LatticePoint p) { return lt_sq(dsq(p), R * R); });
        } else {
            KK = 0;
            domain = LatticeDomain::planar(
                zero, R, [&](LatticePoint p) { return lt_sq(norm_sq(p), R * R); });
        }
        for (const auto& p : domain.points())
            if (lt_sq(dsq(p), (2.0 * r) * (2.0 * r))) starts.push_back(p);
        // exit-band targets live just outside the domain
        const double bandsq = (R + s) * (R + s);
        auto reach = static_cast<std::int64_t>(std::ceil(R + s)) + 1;
        for (std::int64_t x = -reach; x <= reach; ++x)
            for (std::int64_t y = -reach; y <= reach; ++y) {
                LatticePoint p = KK > 0 ? project_point(LatticePoint{x, y}, KK)
                                        : LatticePoint{x, y};
                auto d = dsq(p);
                if (!lt_sq(d, R * R) && lt_sq(d, bandsq)) targets.push_back(p);
            }
        if (KK > 0) {
            std::sort(targets.begin(), targets.end(), [](auto a, auto b) {
                return a.x != b.x ? a.x < b.x : a.y < b.y;
            });
            targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
        }
    } else {
        // exterior: conditioned entry into D(0, r+s) before escaping D(0, 4mR)
        KK = 0;
        const double big = 4.0 * m * R;
        const double smallsq = (r + s) * (r + s);
        domain = LatticeDomain::planar(zero, big, [&](LatticePoint p) {
            auto d = norm_sq(p);
            return !lt_sq(d, smallsq) && lt_sq(d, big * big);
        });
        // starts on the sqrt(R)-shell at radius R, thinned by angle
        std::vector<LatticePoint> shell;
        const double shellsq = (R + std::sqrt(R)) * (R + std::sqrt(R));
        auto reach = static_cast<std::int64_t>(std::ceil(R + std::sqrt(R))) + 1;
        for (std::int64_t x = -reach; x <= reach; ++x)
            for (std::int64_t y = -reach; y <= reach; ++y) {
                auto d = norm_sq({x, y});
                if (!lt_sq(d, R * R) && lt_sq(d, shellsq)) shell.push_back({x, y});
            }
        std::sort(shell.begin(), shell.end(), [](LatticePoint a, LatticePoint b) {
            return std::atan2(static_cast<double>(a.y), static_cast<double>(a.x)) <
                   std::atan2(static_cast<double>(b.y), static_cast<double>(b.x));
        });
        std::size_t stride = std::max<std::size_t>(1, shell.size() / max_starts);
        for (std::size_t i = 0; i < shell.size() && starts.size() < max_starts; i += stride)
            starts.push_back(shell[i]);
        // entry-band targets
        const double rsq = r * r;
        auto treach = static_cast<std::int64_t>(std::ceil(r + s)) + 1;
        for (std::int64_t x = -treach; x <= treach; ++x)
            for (std::int64_t y = -treach; y <= treach; ++y) {
                auto d = norm_sq({x, y});
                if (!lt_sq(d, rsq) && lt_sq(d, smallsq)) targets.push_back({x, y});
            }
    }

    // one factorization, one back-solve per start: direct pays for itself
    // here well past the general-purpose 20k threshold
    AbsorbingSystem sys(std::move(domain), dist, 4000000);
    std::vector<std::vector<double>> h(starts.size(),
                                       std::vector<double>(targets.size(), 0.0));
    for (std::size_t si = 0; si < starts.size(); ++si) {
        auto g = sys.solve(sys.unit_rhs(starts[si]));
        for (std::size_t ti = 0; ti < targets.size(); ++ti) {
            double v = 0.0;
            for (const auto& e : dist.entries()) {
                LatticePoint z = wrap_if(targets[ti] - e.offset, KK);
                auto zi = sys.domain().index_of(z);
                if (zi >= 0) v += e.prob * g[static_cast<std::size_t>(zi)];
            }
            h[si][ti] = v;
        }
    }

    out.starts_used = starts.size();
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        double lo_v = std::numeric_limits<double>::infinity(), hi_v = 0.0;
        for (std::size_t si = 0; si < starts.size(); ++si) {
            lo_v = std::min(lo_v, h[si][ti]);
            hi_v = std::max(hi_v, h[si][ti]);
        }
        if (lo_v <= 0.0) {
            ++out.targets_excluded;
            continue;
        }
        ++out.targets_used;
        out.max_deviation = std::max(out.max_deviation, hi_v / lo_v - 1.0);
    }
    out.report = sys.report();
    return out;
}

BandEscapeResult band_escape_probability(double n, double s,
                                         std::optional<std::int64_t> K,
                                         const StepDistribution& dist) {
    const LatticePoint zero{0, 0};
    const double nsq = n * n, outsq = (n + s) * (n + s);
    auto dsq = [&](LatticePoint p) -> __int128 {
        return K ? toral_dist_sq(TorusPoint(p, *K), TorusPoint(zero, *K)) : norm_sq(p);
    };
    LatticeDomain domain =
        K ? LatticeDomain::toral(*K,
                                 [&](LatticePoint p) { return lt_sq(dsq(p), nsq); })
          : LatticeDomain::planar(zero, n,
                                  [&](LatticePoint p) { return lt_sq(norm_sq(p), nsq); });
    AbsorbingSystem sys(std::move(domain), dist);
    auto skip = sys.solve(sys.absorption_rhs(
        [&](LatticePoint p) { return !lt_sq(dsq(p), outsq); }));
    BandEscapeResult out;
    out.report = sys.report();
    const double half_sq = (n / 2.0) * (n / 2.0);
    const auto& pts = sys.domain().points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!lt_sq(dsq(pts[i]), half_sq)) continue;
        if (skip[i] > out.sup_probability) {
            out.sup_probability = skip[i];
            out.argmax = pts[i];
        }
    }
    return out;
}

HittingMoments toral_hitting_moments(std::int64_t K, const Region& target,
                                     const StepDistribution& dist) {
    if (!target.toral())
        throw std::invalid_argument("hitting moments: target must be toral");
    auto domain = LatticeDomain::toral(
        K, [&](LatticePoint p) { return !target.contains(TorusPoint(p, K)); });
    AbsorbingSystem sys(std::move(domain), dist);
    HittingMoments out;
    out.mean = sys.solve(sys.ones_rhs());
    // E T^2 = 1 + 2(Qt) + Q(ET^2);  Qt evaluated over surviving steps only
    std::vector<double> rhs(sys.domain().size(), 1.0);
    const auto& pts = sys.domain().points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double qt = 0.0;
        for (const auto& e : dist.entries()) {
            LatticePoint z = project_point(pts[i] + e.offset, K);
            auto zi = sys.domain().index_of(z);
            if (zi >= 0) qt += e.prob * out.mean[static_cast<std::size_t>(zi)];
        }
        rhs[i] += 2.0 * qt;
    }
    out.second = sys.solve(rhs);
    out.sup_mean = *std::max_element(out.mean.begin(), out.mean.end());
    out.domain = sys.domain();
    return out;
}

}  // namespace torwalk
