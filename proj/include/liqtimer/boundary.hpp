#pragma once

#include "liqtimer/models.hpp"
#include "liqtimer/vi_solver.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace liqtimer {

/// Which side of lambda* the action (sell or buy) region lies on.
enum class Side { Above, Below };

const char* to_string(Side s);

enum class BoundaryInterpolation {
    /// Extrapolate sqrt(L) linearly from the two nearest positive nodes
    /// (premium touches zero quadratically at a smooth-fit boundary).
    SmoothFit,
    /// Linear interpolation of L between the last zero and first positive node.
    Linear,
};

const char* to_string(BoundaryInterpolation i);

struct Interval {
    double lo;
    double hi;
};

struct BoundaryRow {
    double t = 0.0;
    /// Critical intensity; NaN when the action region is empty at this t.
    double lambda_star = 0.0;
    double price_star = 0.0;
    /// All maximal intervals of the action region.
    std::vector<Interval> region;
    bool empty = false;
    bool whole_domain = false;
    bool ambiguous = false;
};

using PriceMap = std::function<double(double t, double lambda)>;

struct Boundary {
    Side side = Side::Below;
    BoundaryInterpolation interpolation = BoundaryInterpolation::SmoothFit;
    std::string stopping_rule = "tau* = min(tau_hat*, tau_d)";
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double cell = 0.0;
    std::vector<BoundaryRow> rows;
    std::vector<std::string> warnings;

    /// lambda*(t) interpolated linearly between time rows.
    double lambda_at(double t) const;
    /// True when (t, lambda) lies in the action region.
    bool in_region(double t, double lambda) const;
    /// Copy with every finite interior lambda* moved by delta.
    Boundary shifted(double delta) const;
};

/// Side from the sign of the effective source at the top of the lattice:
/// action above when the source is negative for large lambda.
Side detect_side(const PremiumSurface& s);

/**
 * Action region {values <= eps} of a premium surface, one row per time node.
 * The side is detected from the drift stored on the surface unless given.
 * `map` (optional) sends (t, lambda*) to price coordinates.
 */
Boundary extract_boundary(const PremiumSurface& s, double eps, std::optional<Side> side = {},
                          const PriceMap& map = {},
                          BoundaryInterpolation interp = BoundaryInterpolation::SmoothFit);

/// Same on raw lattice values (used for the purchase region {U - Lhat <= eps}).
Boundary extract_region(const Grid& g, const std::vector<std::vector<double>>& values, double eps, Side side,
                        const PriceMap& map = {},
                        BoundaryInterpolation interp = BoundaryInterpolation::SmoothFit);

/// Intensity whose zero-recovery bond price equals `price`.  OU: exact
/// algebraic inverse (base = {r, .}); CIR single factor: Newton to 1e-12.
/// Throws DomainError when T - t <= min_gap or the price is out of range.
double bond_price_inverse(const ModelParams& m, double t, double T, double price, const StateVector& base = {},
                          double min_gap = 0.0);

/// CDS value as a function of the market intensity, with a bisection inverse.
class CdsPriceMap {
public:
    CdsPriceMap(ModelParams m, double T, double p0, StateVector base = {});
    double operator()(double t, double lambda) const;
    /// Bisection on [lo, hi] to 1e-10; throws DomainError when the sampled
    /// map is not increasing or the value is not bracketed.
    double inverse(double t, double value, double lo, double hi) const;

private:
    StateVector state(double lambda) const;
    ModelParams m_;
    double T_;
    double p0_;
    StateVector base_;
};

/// Affine CDX value map C = k2 lambda + k1 n + k0 and its inverse.
class CdxPriceMap {
public:
    CdxPriceMap(TopDownParams p, double p0, double T, double n = 0.0);
    double operator()(double t, double lambda) const;
    /// Throws DomainError at t >= T where k2 vanishes.
    double inverse(double t, double value) const;

private:
    TopDownParams p_;
    double p0_;
    double T_;
    double n_;
};

} // namespace liqtimer
