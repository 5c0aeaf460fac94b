#include "liqtimer/boundary.hpp"

#include "liqtimer/affine.hpp"
#include "liqtimer/pricers.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace liqtimer {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

const char* to_string(Side s)
{
    return s == Side::Above ? "above" : "below";
}

const char* to_string(BoundaryInterpolation i)
{
    return i == BoundaryInterpolation::SmoothFit ? "smooth-fit sqrt extrapolation" : "linear";
}

double Boundary::lambda_at(double t) const
{
    if (rows.empty())
        return kNaN;
    if (t <= rows.front().t)
        return rows.front().lambda_star;
    if (t >= rows.back().t)
        return rows.back().lambda_star;
    const double dt = rows[1].t - rows[0].t;
    const std::size_t m = std::min(static_cast<std::size_t>((t - rows.front().t) / dt), rows.size() - 2);
    const double a = (t - rows[m].t) / dt;
    const double l0 = rows[m].lambda_star;
    const double l1 = rows[m + 1].lambda_star;
    if (std::isnan(l0) || std::isnan(l1))
        return a < 1.0 ? l0 : l1;
    return (1 - a) * l0 + a * l1;
}

bool Boundary::in_region(double t, double lambda) const
{
    if (rows.empty())
        return false;
    const double dt = rows.size() > 1 ? rows[1].t - rows[0].t : 1.0;
    const std::size_t m =
        std::min(static_cast<std::size_t>(std::max(0.0, (t - rows.front().t) / dt)), rows.size() - 1);
    const auto& row = rows[m];
    const auto& next = rows[std::min(m + 1, rows.size() - 1)];
    if (row.whole_domain && next.whole_domain)
        return true;
    const double ls = lambda_at(t);
    if (std::isnan(ls))
        return false;
    return side == Side::Above ? lambda >= ls : lambda <= ls;
}

Boundary Boundary::shifted(double delta) const
{
    Boundary b = *this;
    for (auto& r : b.rows)
        if (!r.empty && !r.whole_domain)
            r.lambda_star += delta;
    return b;
}

Side detect_side(const PremiumSurface& s)
{
    const double sign = (s.kind == PremiumKind::Purchase || s.kind == PremiumKind::Sequential) ? -1.0 : 1.0;
    int negative = 0, positive = 0;
    for (std::size_t m = 0; m + 1 < s.drift.size(); ++m) {
        const double g = sign * s.drift[m].back();
        if (g < 0)
            ++negative;
        else if (g > 0)
            ++positive;
    }
    return negative > positive ? Side::Above : Side::Below;
}

namespace {

double refine(const std::vector<double>& lam, const std::vector<double>& v, int zero, int pos, int pos2,
              double eps, BoundaryInterpolation interp)
{
    const double lz = lam[zero];
    const double lp = lam[pos];
    const double lo = std::min(lz, lp);
    const double hi = std::max(lz, lp);
    if (interp == BoundaryInterpolation::SmoothFit && pos2 >= 0) {
        const double s1 = std::sqrt(std::max(v[pos] - eps, 0.0));
        const double s2 = std::sqrt(std::max(v[pos2] - eps, 0.0));
        const double slope = (s2 - s1) / (lam[pos2] - lp);
        const double toward = (lp - lz) * slope; // > 0 when sqrt grows away from the region
        if (toward > 0 && s1 > 0)
            return std::clamp(lp - s1 / slope, lo, hi);
    }
    const double dv = v[pos] - v[zero];
    if (dv <= 0)
        return lz;
    const double w = std::clamp((eps - v[zero]) / dv, 0.0, 1.0);
    return lz + w * (lp - lz);
}

} // namespace

Boundary extract_region(const Grid& g, const std::vector<std::vector<double>>& values, double eps, Side side,
                        const PriceMap& map, BoundaryInterpolation interp)
{
    Boundary b;
    b.side = side;
    b.interpolation = interp;
    b.lambda_min = g.lambda_min();
    b.lambda_max = g.lambda_max();
    b.cell = g.h();
    const auto& lam = g.lambda_nodes;
    const int K = g.K();
    int ambiguous_rows = 0;

    for (std::size_t m = 0; m < g.t_nodes.size(); ++m) {
        const auto& v = values.at(m);
        BoundaryRow row;
        row.t = g.t_nodes[m];
        std::vector<std::pair<int, int>> runs;
        for (int k = 0; k <= K; ++k) {
            if (v[k] <= eps) {
                if (runs.empty() || runs.back().second != k - 1)
                    runs.push_back({k, k});
                else
                    runs.back().second = k;
            }
        }
        for (auto [a, c] : runs)
            row.region.push_back({lam[a], lam[c]});
        if (runs.empty()) {
            row.empty = true;
            row.lambda_star = kNaN;
            row.price_star = kNaN;
            b.rows.push_back(row);
            continue;
        }
        if (runs.size() == 1 && runs[0].first == 0 && runs[0].second == K) {
            row.whole_domain = true;
            row.lambda_star = side == Side::Above ? lam[0] : lam[K];
        } else {
            // Principal run: the one touching the edge on the action side,
            // otherwise the longest.
            std::size_t pick = runs.size();
            for (std::size_t j = 0; j < runs.size(); ++j) {
                if ((side == Side::Below && runs[j].first == 0) || (side == Side::Above && runs[j].second == K))
                    pick = j;
            }
            if (runs.size() > 1 || pick == runs.size()) {
                row.ambiguous = true;
                ++ambiguous_rows;
            }
            if (pick == runs.size()) {
                pick = 0;
                for (std::size_t j = 1; j < runs.size(); ++j)
                    if (runs[j].second - runs[j].first > runs[pick].second - runs[pick].first)
                        pick = j;
            }
            const auto [a, c] = runs[pick];
            if (side == Side::Below) {
                if (c == K)
                    row.lambda_star = lam[K];
                else
                    row.lambda_star = refine(lam, v, c, c + 1, c + 2 <= K ? c + 2 : -1, eps, interp);
            } else {
                if (a == 0)
                    row.lambda_star = lam[0];
                else
                    row.lambda_star = refine(lam, v, a, a - 1, a - 2 >= 0 ? a - 2 : -1, eps, interp);
            }
        }
        row.price_star = map ? map(row.t, row.lambda_star) : kNaN;
        b.rows.push_back(row);
    }
    if (ambiguous_rows > 0) {
        std::ostringstream os;
        os << ambiguous_rows << " time rows have a multi-interval action region; all intervals reported";
        b.warnings.push_back(os.str());
    }
    return b;
}

Boundary extract_boundary(const PremiumSurface& s, double eps, std::optional<Side> side, const PriceMap& map,
                          BoundaryInterpolation interp)
{
    return extract_region(s.grid, s.values, eps, side.value_or(detect_side(s)), map, interp);
}

double bond_price_inverse(const ModelParams& m, double t, double T, double price, const StateVector& base,
                          double min_gap)
{
    if (!(T - t > min_gap) || !(T - t > 0))
        throw DomainError("bond price inverse undefined within one grid step of maturity");
    if (!(price > 0))
        throw DomainError("bond price must be positive");
    const double s = T - t;
    if (auto* ou = std::get_if<OuParams>(&m)) {
        const double r = base.empty() ? 0.0 : base.at(0);
        const affine::GaussianExponent ex{ou->kappa_r, ou->theta_r, ou->sigma_r, ou->kappa_l,
                                          ou->lambda_level(), ou->lambda_vol(), ou->rho, 1.0};
        const double a = ex.a(s);
        const double b = affine::decay(ou->kappa_r, s);
        const double d = affine::decay(ou->kappa_l, s);
        return (-std::log(price) + a - b * r) / d;
    }
    const auto* cir = std::get_if<CirParams>(&m);
    if (!cir || cir->factors() != 1 || !(cir->w_l[0] > 0))
        throw ModelError("bond price inverse supports OU and single-factor CIR with w_l > 0");
    const double scale = cir->mu * cir->w_l[0];
    const double top = cir_bond_price(*cir, t, T, {0.0});
    if (price > top)
        throw DomainError("bond price above the zero-intensity price");
    // Newton on log C(x) - log price.
    double x = cir->theta[0];
    const double target = std::log(price);
    for (int it = 0; it < 100; ++it) {
        const double c = cir_bond_price(*cir, t, T, {x});
        const double dlog = claim_gradient(m, ZeroRecoveryBond{T}, t, {x}).at(0) / c;
        const double step = (std::log(c) - target) / dlog;
        x = std::max(0.0, x - step);
        if (std::abs(step) < 1e-14)
            break;
    }
    return scale * x;
}

CdsPriceMap::CdsPriceMap(ModelParams m, double T, double p0, StateVector base)
    : m_(std::move(m)), T_(T), p0_(p0), base_(std::move(base))
{
    if (kind_of(m_) == ModelKind::TopDown)
        throw ModelError("CDS price map requires an OU or CIR model");
    if (auto* cir = std::get_if<CirParams>(&m_); cir && (cir->factors() != 1 || !(cir->w_l[0] > 0)))
        throw ModelError("CDS price map supports single-factor CIR with w_l > 0");
}

StateVector CdsPriceMap::state(double lambda) const
{
    if (std::holds_alternative<OuParams>(m_))
        return {base_.empty() ? 0.0 : base_.at(0), lambda};
    const auto& cir = std::get<CirParams>(m_);
    return {lambda / (cir.mu * cir.w_l[0])};
}

double CdsPriceMap::operator()(double t, double lambda) const
{
    return cds_price(m_, t, T_, state(lambda), p0_);
}

double CdsPriceMap::inverse(double t, double value, double lo, double hi) const
{
    const int samples = 32;
    double prev = (*this)(t, lo);
    const double flo = prev;
    for (int j = 1; j <= samples; ++j) {
        const double v = (*this)(t, lo + (hi - lo) * j / samples);
        if (!(v > prev))
            throw DomainError("CDS price map is not increasing on the bracket");
        prev = v;
    }
    if (value < flo || value > prev)
        throw DomainError("CDS value not bracketed by the intensity interval");
    double a = lo, b = hi;
    while (b - a > 1e-10) {
        const double mid = 0.5 * (a + b);
        if ((*this)(t, mid) < value)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

CdxPriceMap::CdxPriceMap(TopDownParams p, double p0, double T, double n) : p_(std::move(p)), p0_(p0), T_(T), n_(n) {}

double CdxPriceMap::operator()(double t, double lambda) const
{
    return cdx_price(p_, p0_, t, T_, lambda, n_);
}

double CdxPriceMap::inverse(double t, double value) const
{
    if (t >= T_)
        throw DomainError("CDX inverse undefined at t = T (k2 vanishes)");
    const auto k = cdx_coefficients(p_, p0_, t, T_);
    return (value - k.k1 * n_ - k.k0) / k.k2;
}

} // namespace liqtimer
