#include "torwalk/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace torwalk {

namespace {

void check_toral_geometry(double inner_sq, double outer_sq, std::int64_t K) {
    if (K < 2) throw std::invalid_argument("region: toral K must be >= 2");
    double reach = std::sqrt(std::max(inner_sq, outer_sq));
    if (!(reach < static_cast<double>(K) / 4.0))
        throw std::invalid_argument("region: toral radius must satisfy n + s < K/4");
}

}  // namespace

Region Region::disc(LatticePoint center, double radius) {
    return disc_rsq(center, radius * radius);
}

Region Region::disc_rsq(LatticePoint center, double radius_sq) {
    if (!(radius_sq > 0)) throw std::invalid_argument("region: radius must be positive");
    Region r;
    r.kind_ = RegionKind::Disc;
    r.center_ = center;
    r.inner_sq_ = radius_sq;
    return r;
}

Region Region::annulus(LatticePoint center, double radius, double width) {
    return annulus_rsq(center, radius * radius, (radius + width) * (radius + width));
}

Region Region::annulus_rsq(LatticePoint center, double inner_sq, double outer_sq) {
    if (!(inner_sq >= 0) || !(outer_sq > inner_sq))
        throw std::invalid_argument("region: annulus requires 0 <= n^2 < (n+s)^2");
    Region r;
    r.kind_ = RegionKind::Annulus;
    r.center_ = center;
    r.inner_sq_ = inner_sq;
    r.outer_sq_ = outer_sq;
    return r;
}

Region Region::disc_complement(LatticePoint center, double radius) {
    Region r = disc_rsq(center, radius * radius);
    r.kind_ = RegionKind::DiscComplement;
    return r;
}

Region Region::toral_disc(LatticePoint center, double radius, std::int64_t K) {
    Region r = disc_rsq(center, radius * radius);
    check_toral_geometry(r.inner_sq_, 0.0, K);
    r.kind_ = RegionKind::ToralDisc;
    r.center_ = project_point(center, K);
    r.K_ = K;
    return r;
}

Region Region::toral_annulus(LatticePoint center, double radius, double width,
                             std::int64_t K) {
    Region r = annulus(center, radius, width);
    check_toral_geometry(r.inner_sq_, r.outer_sq_, K);
    r.kind_ = RegionKind::ToralAnnulus;
    r.center_ = project_point(center, K);
    r.K_ = K;
    return r;
}

Region Region::toral_disc_complement(LatticePoint center, double radius, std::int64_t K) {
    Region r = disc_rsq(center, radius * radius);
    check_toral_geometry(r.inner_sq_, 0.0, K);
    r.kind_ = RegionKind::ToralDiscComplement;
    r.center_ = project_point(center, K);
    r.K_ = K;
    return r;
}

double Region::radius() const { return std::sqrt(inner_sq_); }

double Region::width() const {
    if (kind_ != RegionKind::Annulus && kind_ != RegionKind::ToralAnnulus) return 0.0;
    return std::sqrt(outer_sq_) - std::sqrt(inner_sq_);
}

bool Region::toral() const {
    return kind_ == RegionKind::ToralDisc || kind_ == RegionKind::ToralAnnulus ||
           kind_ == RegionKind::ToralDiscComplement;
}

bool Region::contains(LatticePoint p) const {
    if (toral()) return contains(TorusPoint(p, K_));
    __int128 d = norm_sq(p - center_);
    switch (kind_) {
        case RegionKind::Disc: return lt_sq(d, inner_sq_);
        case RegionKind::Annulus: return !lt_sq(d, inner_sq_) && lt_sq(d, outer_sq_);
        case RegionKind::DiscComplement: return !lt_sq(d, inner_sq_);
        default: return false;
    }
}

bool Region::contains(const TorusPoint& p) const {
    if (!toral()) throw std::invalid_argument("region: planar region given a torus point");
    if (p.K != K_) throw std::invalid_argument("region: mismatched K");
    __int128 d = toral_dist_sq(p, TorusPoint(center_, K_));
    switch (kind_) {
        case RegionKind::ToralDisc: return lt_sq(d, inner_sq_);
        case RegionKind::ToralAnnulus: return !lt_sq(d, inner_sq_) && lt_sq(d, outer_sq_);
        case RegionKind::ToralDiscComplement: return !lt_sq(d, inner_sq_);
        default: return false;
    }
}

std::vector<LatticePoint> Region::members() const {
    std::vector<LatticePoint> out;
    if (kind_ == RegionKind::DiscComplement)
        throw std::invalid_argument("region: cannot enumerate an unbounded planar region");
    if (!toral()) {
        double rsq = (kind_ == RegionKind::Annulus) ? outer_sq_ : inner_sq_;
        auto reach = static_cast<std::int64_t>(std::ceil(std::sqrt(rsq)));
        for (std::int64_t dx = -reach; dx <= reach; ++dx)
            for (std::int64_t dy = -reach; dy <= reach; ++dy) {
                LatticePoint p{center_.x + dx, center_.y + dy};
                if (contains(p)) out.push_back(p);
            }
        return out;
    }
    const std::int64_t lo = -(K_ / 2), hi = K_ - 1 - K_ / 2;
    for (std::int64_t x = lo; x <= hi; ++x)
        for (std::int64_t y = lo; y <= hi; ++y) {
            TorusPoint p(LatticePoint{x, y}, K_);
            if (contains(p)) out.push_back(p.p);
        }
    return out;
}

Region Region::parse(const std::string& text) {
    char kind[32];
    long long cx, cy;
    double radius = 0, width = 0;
    long long K = 0;
    // kind:cx,cy:radius[:width][:K=<K>]
    int matched = std::sscanf(text.c_str(), "%31[^:]:%lld,%lld:%lf:%lf:K=%lld", kind, &cx,
                              &cy, &radius, &width, &K);
    if (matched < 4) {
        matched = std::sscanf(text.c_str(), "%31[^:]:%lld,%lld:%lf:K=%lld", kind, &cx, &cy,
                              &radius, &K);
        if (matched >= 4) matched = (matched == 5) ? 6 : 4;  // no width form
        width = 0;
    }
    if (matched < 4) throw std::invalid_argument("region: cannot parse '" + text + "'");
    std::string k(kind);
    LatticePoint c{cx, cy};
    if (k == "disc") return K ? toral_disc(c, radius, K) : disc(c, radius);
    if (k == "annulus")
        return K ? toral_annulus(c, radius, width, K) : annulus(c, radius, width);
    if (k == "disc-complement")
        return K ? toral_disc_complement(c, radius, K) : disc_complement(c, radius);
    throw std::invalid_argument("region: unknown kind '" + k + "'");
}

std::string Region::to_string() const {
    char buf[160];
    const char* name = nullptr;
    switch (kind_) {
        case RegionKind::Disc:
        case RegionKind::ToralDisc: name = "disc"; break;
        case RegionKind::Annulus:
        case RegionKind::ToralAnnulus: name = "annulus"; break;
        default: name = "disc-complement"; break;
    }
    std::string out;
    if (kind_ == RegionKind::Annulus || kind_ == RegionKind::ToralAnnulus)
        std::snprintf(buf, sizeof buf, "%s:%lld,%lld:%.17g:%.17g", name,
                      static_cast<long long>(center_.x), static_cast<long long>(center_.y),
                      radius(), width());
    else
        std::snprintf(buf, sizeof buf, "%s:%lld,%lld:%.17g", name,
                      static_cast<long long>(center_.x), static_cast<long long>(center_.y),
                      radius());
    out = buf;
    if (toral()) {
        std::snprintf(buf, sizeof buf, ":K=%lld", static_cast<long long>(K_));
        out += buf;
    }
    return out;
}

JumpFlags classify_jump(LatticePoint offset, double n, double s, std::int64_t K) {
    if (!(s <= n)) throw std::invalid_argument("classify_jump: requires s <= n");
    if (!(2.0 * n < static_cast<double>(K) / 2.0))
        throw std::invalid_argument("classify_jump: requires 2n < K/2");
    JumpFlags f;
    long double magsq = static_cast<long double>(norm_sq(offset));
    long double ssq = static_cast<long double>(s) * s;
    long double two_n_sq = static_cast<long double>(2.0 * n) * (2.0 * n);
    long double wrap = static_cast<long double>(K) - 2.0L * static_cast<long double>(n);
    long double wrapsq = wrap * wrap;

    f.baby = magsq < ssq;
    f.small = magsq < two_n_sq;
    f.medium = magsq >= ssq && magsq < wrapsq;
    f.large = magsq >= wrapsq;
    if (f.large) {
        long double mag = sqrtl(magsq);
        long double win_lo = wrap;                                         // j(K-2n)
        long double win_hi = (static_cast<long double>(K) + 2.0L * n) / sqrtl(2.0L);
        for (std::int64_t j = 1; win_lo <= mag; ++j) {
            if (mag >= win_lo && mag <= win_hi) {
                f.targeted = true;
                break;
            }
            win_lo = wrap * (j + 1);
            win_hi = (static_cast<long double>(K) + 2.0L * n) * (j + 1) / sqrtl(2.0L);
        }
    }
    return f;
}

int LevelStructure::delta_half_threshold() {
    // s_k = n^4 < sqrt(e^n n^{3k}) is hardest at k = 0: 4 log n < n/2.
    for (int n = 14;; ++n)
        if (4.0 * std::log(n) < 0.5 * n) return n;
}

LevelStructure LevelStructure::custom(std::vector<double> radii, std::vector<double> widths,
                                      double wide_down_width, double K, double a, double rho,
                                      std::vector<double> v) {
    if (radii.size() < 2 || radii.size() != widths.size() || radii.size() != v.size())
        throw std::invalid_argument("levels: radii/widths/v must share a size >= 2");
    for (std::size_t k = 0; k + 1 < radii.size(); ++k)
        if (!(radii[k] + widths[k] < radii[k + 1]))
            throw std::invalid_argument("levels: band k must fit below radius k+1");
    LevelStructure ls;
    ls.n = static_cast<int>(radii.size()) - 1;
    ls.a = a;
    ls.rho = rho;
    ls.radii = std::move(radii);
    ls.widths = std::move(widths);
    ls.wide_down_width = wide_down_width;
    ls.K_n = K;
    ls.v = std::move(v);
    return ls;
}

LevelStructure build_levels(int n, double a, double rho, double gamma_bar) {
    if (!(n > 13)) throw std::invalid_argument("build_levels: requires n > 13");
    if (!(a > 0.0 && a < 2.0))
        throw std::invalid_argument("build_levels: requires 0 < a < 2");
    if (!(rho < (2.0 - a) / 2.0))
        throw std::invalid_argument("build_levels: requires rho < (2-a)/2");
    if (!(rho > 0.0)) throw std::invalid_argument("build_levels: requires rho > 0");
    if (!(gamma_bar >= 10.0))
        throw std::invalid_argument("build_levels: requires gamma_bar >= 10");

    LevelStructure ls;
    ls.n = n;
    ls.a = a;
    ls.rho = rho;
    ls.gamma_bar = gamma_bar;
    double nd = n;
    double s = nd * nd * nd * nd;  // n^4
    ls.radii.resize(n + 1);
    ls.widths.assign(n + 1, s);
    ls.v.assign(n + 1, 0.0);
    for (int k = 0; k <= n; ++k) {
        ls.radii[k] = std::exp(nd) * std::pow(nd, 3.0 * k);
        if (k >= 2) ls.v[k] = 3.0 * a * k * k * std::log(static_cast<double>(k));
    }
    ls.wide_down_width = std::sqrt(ls.radii[n - 1]);
    ls.K_n = std::round(std::pow(nd, gamma_bar) * ls.radii[n]);
    return ls;
}

}  // namespace torwalk
