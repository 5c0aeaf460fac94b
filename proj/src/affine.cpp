#include "liqtimer/affine.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace liqtimer::affine {

namespace {

// Below this value of rate * horizon the divided-difference closed forms lose
// digits to cancellation and the Gauss-Legendre rule is used instead.
constexpr double kSmallRate = 1e-2;

// 20-point Gauss-Legendre nodes/weights on [-1,1] (positive half).
constexpr std::array<double, 10> kGlNodes = {
    0.0765265211334973337546404, 0.2277858511416450780804962, 0.3737060887154195606725482,
    0.5108670019508270980043641, 0.6360536807265150254528367, 0.7463319064601507926143051,
    0.8391169718222188233945291, 0.9122344282513259058677524, 0.9639719272779137912676661,
    0.9931285991850949247861224};
constexpr std::array<double, 10> kGlWeights = {
    0.1527533871307258506980843, 0.1491729864726037467878287, 0.1420961093183820513292983,
    0.1316886384491766268984945, 0.1181945319615184173123774, 0.1019301198172404350367501,
    0.0832767415767047487247581, 0.0626720483341090635695065, 0.0406014298003869413310400,
    0.0176140071391521183118620};

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                   double fb, double whole, double tol, int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double simpson_fixed(const std::function<double(double)>& f, double a, double b, int n)
{
    const double h = (b - a) / n;
    double sum = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        sum += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
    return sum * h / 3.0;
}

} // namespace

double decay(double k, double s)
{
    if (k == 0.0)
        return s;
    return -std::expm1(-k * s) / k;
}

double decay_integral(double k, double s)
{
    if (std::abs(k * s) < kSmallRate)
        return gauss_legendre([k](double z) { return decay(k, z); }, 0.0, s);
    return (s - decay(k, s)) / k;
}

double decay_product_integral(double a, double b, double s)
{
    if (std::abs(a * s) < kSmallRate || std::abs(b * s) < kSmallRate)
        return gauss_legendre([a, b](double z) { return decay(a, z) * decay(b, z); }, 0.0, s);
    return (s - decay(a, s) - decay(b, s) + decay(a + b, s)) / (a * b);
}

double discounted_decay_integral(double a, double b, double s)
{
    if (std::abs(b * s) < kSmallRate)
        return gauss_legendre([a, b](double v) { return std::exp(-a * v) * decay(b, v); }, 0.0, s);
    return (decay(a, s) - decay(a + b, s)) / b;
}

double gauss_legendre(const std::function<double(double)>& f, double a, double b)
{
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
        const double dx = half * kGlNodes[i];
        sum += kGlWeights[i] * (f(mid - dx) + f(mid + dx));
    }
    return sum * half;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol)
{
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50);
}

double composite_simpson(const std::function<double(double)>& f, double a, double b, int panels,
                         double tol, int max_panels)
{
    if (b <= a)
        return 0.0;
    if (panels % 2)
        ++panels;
    double coarse = simpson_fixed(f, a, b, panels / 2);
    double fine = simpson_fixed(f, a, b, panels);
    while (std::abs(fine - coarse) > tol) {
        if (panels >= max_panels) {
            std::ostringstream os;
            os << "quadrature did not converge: achieved tolerance " << std::abs(fine - coarse)
               << " with " << panels << " panels (requested " << tol << ")";
            throw std::runtime_error(os.str());
        }
        panels *= 2;
        coarse = fine;
        fine = simpson_fixed(f, a, b, panels);
    }
    return fine;
}

double CirFactor::xi() const
{
    return std::sqrt(kappa * kappa + 2.0 * sigma * sigma * weight);
}

double CirFactor::log_a(double s) const
{
    if (s == 0.0 || kappa * theta == 0.0)
        return 0.0;
    if (sigma == 0.0)
        return -kappa * theta * weight * decay_integral(kappa, s);
    const double x = xi();
    const double e = std::expm1(x * s);
    const double den = (x + kappa) * e + 2.0 * x;
    return 2.0 * kappa * theta / (sigma * sigma) * (std::log(2.0 * x) + 0.5 * (x + kappa) * s - std::log(den));
}

double CirFactor::b(double s) const
{
    if (sigma == 0.0)
        return weight * decay(kappa, s);
    const double x = xi();
    const double e = std::expm1(x * s);
    return 2.0 * e * weight / ((x + kappa) * e + 2.0 * x);
}

double CirFactor::b_prime(double s) const
{
    if (sigma == 0.0)
        return weight * std::exp(-kappa * s);
    const double x = xi();
    const double e = std::expm1(x * s);
    const double den = (x + kappa) * e + 2.0 * x;
    return 4.0 * weight * x * x * (e + 1.0) / (den * den);
}

double GaussianExponent::a(double s) const
{
    using std::pow;
    const double bb = decay_product_integral(kr, kr, s);
    const double bd = decay_product_integral(kr, kl, s);
    const double dd = decay_product_integral(kl, kl, s);
    return 0.5 * sr * sr * bb + rho * sr * sl * w * bd + 0.5 * sl * sl * w * w * dd -
           kr * tr * decay_integral(kr, s) - kl * ll * w * decay_integral(kl, s);
}

} // namespace liqtimer::affine
