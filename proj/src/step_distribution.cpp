#include "torwalk/step_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace torwalk {

namespace {

std::int64_t ext_gcd(std::int64_t a, std::int64_t b, std::int64_t& u, std::int64_t& v) {
    if (b == 0) {
        u = (a >= 0) ? 1 : -1;
        v = 0;
        return std::abs(a);
    }
    std::int64_t u1, v1;
    std::int64_t g = ext_gcd(b, a % b, u1, v1);
    u = v1;
    v = u1 - (a / b) * v1;
    return g;
}

// Index of the sublattice of Z^2 generated by the given vectors
// (determinant of a triangular basis); 0 when the rank is below 2.
std::int64_t lattice_index(const std::vector<LatticePoint>& vs) {
    std::int64_t a = 0, b = 0, d = 0;  // basis rows (a,b), (0,d)
    for (const auto& v : vs) {
        std::int64_t x = v.x, y = v.y;
        if (x == 0 && y == 0) continue;
        if (x != 0) {
            if (a == 0) {
                a = std::abs(x);
                b = (x < 0) ? -y : y;
            } else {
                std::int64_t u, w;
                std::int64_t g = ext_gcd(a, x, u, w);
                std::int64_t nb = u * b + w * y;
                std::int64_t leftover = (a / g) * y - (x / g) * b;
                a = g;
                b = nb;
                d = std::gcd(d, std::abs(leftover));
            }
        } else {
            d = std::gcd(d, std::abs(y));
        }
    }
    if (a == 0 || d == 0) return 0;
    return a * d;
}

std::vector<StepEntry> canonicalize(std::vector<StepEntry> entries) {
    std::erase_if(entries, [](const StepEntry& e) { return e.prob == 0.0; });
    std::sort(entries.begin(), entries.end(), [](const StepEntry& l, const StepEntry& r) {
        return l.offset.x != r.offset.x ? l.offset.x < r.offset.x : l.offset.y < r.offset.y;
    });
    for (std::size_t i = 1; i < entries.size(); ++i)
        if (entries[i].offset == entries[i - 1].offset)
            throw std::invalid_argument("step table: duplicate offset");
    return entries;
}

}  // namespace

AliasSampler::AliasSampler(const std::vector<double>& probs) : n_(probs.size()) {
    threshold_.assign(n_, 1.0);
    alias_.assign(n_, 0);
    for (std::size_t i = 0; i < n_; ++i) alias_[i] = i;
    if (n_ == 0) return;

    std::vector<double> scaled(n_);
    for (std::size_t i = 0; i < n_; ++i) scaled[i] = probs[i] * static_cast<double>(n_);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n_; ++i) (scaled[i] < 1.0 ? small : large).push_back(i);
    while (!small.empty() && !large.empty()) {
        std::size_t s = small.back(), l = large.back();
        small.pop_back();
        large.pop_back();
        threshold_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] -= 1.0 - scaled[s];
        (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    // leftovers are 1 up to rounding
    for (std::size_t i : small) threshold_[i] = 1.0;
    for (std::size_t i : large) threshold_[i] = 1.0;
}

StepDistribution::StepDistribution(std::vector<StepEntry> entries, double beta,
                                   bool infinite_range, double truncation_residual)
    : entries_(canonicalize(std::move(entries))),
      sampler_([this] {
          std::vector<double> p(entries_.size());
          for (std::size_t i = 0; i < entries_.size(); ++i) p[i] = entries_[i].prob;
          return AliasSampler(p);
      }()),
      beta_(beta),
      declared_infinite_range_(infinite_range),
      truncation_residual_(truncation_residual) {
    if (entries_.empty()) throw std::invalid_argument("step table: empty");
    if (beta_ < 0) throw std::invalid_argument("step table: beta must be >= 0");

    double sum = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& e : entries_) {
        if (!(e.prob >= 0.0))
            throw std::invalid_argument("step table: negative probability");
        sum += e.prob;
        sxx += e.prob * static_cast<double>(e.offset.x) * static_cast<double>(e.offset.x);
        syy += e.prob * static_cast<double>(e.offset.y) * static_cast<double>(e.offset.y);
        sxy += e.prob * static_cast<double>(e.offset.x) * static_cast<double>(e.offset.y);
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("step table: probabilities do not sum to 1");

    // symmetry: the mirrored entry must exist with equal probability
    for (const auto& e : entries_) {
        auto it = std::lower_bound(
            entries_.begin(), entries_.end(), -e.offset,
            [](const StepEntry& l, const LatticePoint& q) {
                return l.offset.x != q.x ? l.offset.x < q.x : l.offset.y < q.y;
            });
        if (it == entries_.end() || !(it->offset == -e.offset) || it->prob != e.prob)
            throw std::invalid_argument("step table: symmetry violated (p(x) != p(-x))");
    }

    if (std::abs(sxy) > 1e-10 || std::abs(sxx - syy) > 1e-10)
        throw std::invalid_argument("step table: covariance is not isotropic (cI)");
    c_ = 0.5 * (sxx + syy);
    if (!(c_ > 0.0)) throw std::invalid_argument("step table: covariance must be positive");
    pi_gamma_ = 2.0 * M_PI * c_;

    moment_M_ = moment(4.0 + 2.0 * beta_);
    moment_M_finite_ = std::isfinite(moment_M_);

    for (const auto& e : entries_) {
        max_offset_norm_ = std::max(max_offset_norm_, norm(e.offset));
        max_offset_abs_ =
            std::max({max_offset_abs_, std::abs(e.offset.x), std::abs(e.offset.y)});
    }

    std::vector<LatticePoint> supp;
    for (const auto& e : entries_) supp.push_back(e.offset);
    generates_z2_ = lattice_index(supp) == 1;
    std::vector<LatticePoint> diffs;
    for (const auto& s : supp) diffs.push_back(s - supp.front());
    strongly_aperiodic_ = lattice_index(diffs) == 1;
}

StepDistribution StepDistribution::custom(std::vector<StepEntry> entries, double beta) {
    return StepDistribution(std::move(entries), beta, false, 0.0);
}

StepDistribution StepDistribution::srw() {
    return custom({{{1, 0}, 0.25}, {{-1, 0}, 0.25}, {{0, 1}, 0.25}, {{0, -1}, 0.25}});
}

StepDistribution StepDistribution::lazy_srw(double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw std::invalid_argument("lazy_srw: epsilon must be in [0,1)");
    double q = (1.0 - epsilon) / 4.0;
    std::vector<StepEntry> e{{{1, 0}, q}, {{-1, 0}, q}, {{0, 1}, q}, {{0, -1}, q}};
    if (epsilon > 0.0) e.push_back({{0, 0}, epsilon});
    return custom(std::move(e));
}

StepDistribution StepDistribution::poisson_jump(double lambda, std::int64_t K, int j_max) {
    if (!(lambda > 0.0)) throw std::invalid_argument("poisson_jump: lambda must be > 0");
    if (K % 2 == 0)
        throw std::invalid_argument("poisson_jump: K must be odd (strong aperiodicity)");
    if (K < 3) throw std::invalid_argument("poisson_jump: K must be >= 3");
    if (j_max < 0) throw std::invalid_argument("poisson_jump: j_max must be >= 0");

    std::vector<double> w(static_cast<std::size_t>(j_max) + 1);
    double log_lambda = std::log(lambda);
    double covered = 0.0;
    for (int j = 0; j <= j_max; ++j) {
        w[j] = std::exp(-lambda + j * log_lambda - std::lgamma(j + 1.0));
        covered += w[j];
    }
    double residual = 1.0 - covered;
    if (residual >= 1e-15)
        throw std::invalid_argument(
            "poisson_jump: j_max too small, truncated tail >= 1e-15");

    std::int64_t step = 1;
    std::vector<StepEntry> entries;
    for (int j = 0; j <= j_max; ++j) {
        double p = 0.25 * w[j];
        if (j == 0) p += 0.25 * residual;  // fold the truncated tail into the unit ring
        entries.push_back({{step, 0}, p});
        entries.push_back({{-step, 0}, p});
        entries.push_back({{0, step}, p});
        entries.push_back({{0, -step}, p});
        if (j < j_max) {
            if (step > (std::int64_t{1} << 60) / K)
                throw std::invalid_argument("poisson_jump: offsets overflow, reduce j_max");
            step *= K;
        }
    }
    return StepDistribution(std::move(entries), 1.0, true, residual);
}

double StepDistribution::tail_mass(double radius) const {
    long double rsq = static_cast<long double>(radius) * radius;
    double t = 0.0;
    for (const auto& e : entries_)
        if (static_cast<long double>(norm_sq(e.offset)) > rsq) t += e.prob;
    return std::min(t, 1.0);  // rounding may push a full-support sum past 1
}

double StepDistribution::moment(double m) const {
    if (m < 0) throw std::invalid_argument("moment: m must be >= 0");
    double s = 0.0;
    for (const auto& e : entries_) {
        double nsq = static_cast<double>(static_cast<long double>(norm_sq(e.offset)));
        if (m == 0.0)
            s += e.prob;
        else if (nsq > 0.0)
            s += e.prob * std::exp(0.5 * m * std::log(nsq));
    }
    return s;
}

ConditionAReport StepDistribution::check_condition_a(std::int64_t n, std::int64_t s,
                                                     double beta, double c) const {
    if (s > n) throw std::invalid_argument("condition A: requires s <= n");
    ConditionAReport rep;
    rep.lower_bound = c * std::exp(-beta * std::pow(static_cast<double>(s), 0.25));
    if (!declared_infinite_range_) {
        rep.pass = true;
        rep.via_bounded_support = true;
        return rep;
    }
    double inf = 2.0;
    long double nsq = static_cast<long double>(n) * n;
    long double outsq = static_cast<long double>(n + s) * (n + s);
    for (std::int64_t yx = -(n + s); yx <= n + s; ++yx) {
        for (std::int64_t yy = -(n + s); yy <= n + s; ++yy) {
            long double d = static_cast<long double>(yx) * yx +
                            static_cast<long double>(yy) * yy;
            if (d < nsq || d >= outsq) continue;  // band n <= |y| < n+s
            double enter = 0.0;
            for (const auto& e : entries_) {
                LatticePoint z{yx + e.offset.x, yy + e.offset.y};
                if (lt_sq(norm_sq(z), static_cast<double>(n) * static_cast<double>(n)))
                    enter += e.prob;
            }
            inf = std::min(inf, enter);
            ++rep.band_points_checked;
        }
    }
    rep.attained_infimum = (rep.band_points_checked > 0) ? inf : 0.0;
    rep.pass = rep.attained_infimum >= rep.lower_bound;
    return rep;
}

std::string StepDistribution::serialize() const {
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof buf, "c=%.17g beta=%.17g\n", c_, beta_);
    out += buf;
    for (const auto& e : entries_) {
        std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n",
                      static_cast<long long>(e.offset.x),
                      static_cast<long long>(e.offset.y), e.prob);
        out += buf;
    }
    return out;
}

StepDistribution StepDistribution::deserialize(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header))
        throw std::invalid_argument("step table: empty serialization");
    double c_header = 0.0, beta = 0.0;
    if (std::sscanf(header.c_str(), "c=%lg beta=%lg", &c_header, &beta) != 2)
        throw std::invalid_argument("step table: bad header line");
    std::vector<StepEntry> entries;
    long long x, y;
    double p;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (std::sscanf(line.c_str(), "%lld %lld %lg", &x, &y, &p) != 3)
            throw std::invalid_argument("step table: bad entry line: " + line);
        entries.push_back({{x, y}, p});
    }
    auto dist = custom(std::move(entries), beta);
    if (std::abs(dist.covariance_scalar() - c_header) > 1e-12)
        throw std::invalid_argument("step table: header c does not match entries");
    return dist;
}

}  // namespace torwalk
