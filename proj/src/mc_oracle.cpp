#include "liqtimer/mc_oracle.hpp"

#include "liqtimer/pricers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

namespace liqtimer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr long kChunk = 2048;

std::uint64_t splitmix(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t path, std::uint64_t salt)
    : eng_(splitmix(splitmix(seed) ^ splitmix(path + 0x632be59bd9b4e019ULL * (salt + 1))))
{
}

double Rng::uniform()
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng_);
}

double Rng::normal()
{
    return normal_(eng_);
}

double Rng::exponential()
{
    return std::exponential_distribution<double>(1.0)(eng_);
}

long Rng::poisson(double mean)
{
    if (!(mean > 0))
        return 0;
    return std::poisson_distribution<long>(mean)(eng_);
}

double Rng::gamma(double shape, double scale)
{
    if (!(shape > 0))
        return 0.0;
    return std::gamma_distribution<double>(shape, scale)(eng_);
}

double McEstimate::z(double target) const
{
    const double d = mean - target;
    if (std_error > 0)
        return d / std_error;
    return d == 0.0 ? 0.0 : std::copysign(kInf, d);
}

int mc_threads()
{
    if (const char* env = std::getenv("LIQTIMER_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0)
            return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

/// Runs body(first, last) over fixed chunks on the worker pool.
void parallel_chunks(long n, const std::function<void(long chunk, long first, long last)>& body)
{
    const long chunks = (n + kChunk - 1) / kChunk;
    const int workers = static_cast<int>(std::min<long>(mc_threads(), std::max<long>(chunks, 1)));
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto work = [&] {
        for (long c = next++; c < chunks && !failed; c = next++) {
            try {
                body(c, c * kChunk, std::min(n, (c + 1) * kChunk));
            } catch (...) {
                if (!failed.exchange(true))
                    error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w)
        pool.emplace_back(work);
    work();
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

/// Mean and standard error of per-path samples, reduced in chunk order.
/// Sums are taken about the first sample, so constant samples are exact.
McEstimate estimate(long n, std::uint64_t seed, const std::function<double(long path)>& sample)
{
    if (n < 2)
        throw DomainError("Monte Carlo needs at least 2 paths");
    const double shift = sample(0);
    const long chunks = (n + kChunk - 1) / kChunk;
    std::vector<double> sums(chunks), sqs(chunks);
    parallel_chunks(n, [&](long c, long first, long last) {
        double s = 0.0, q = 0.0;
        for (long i = first; i < last; ++i) {
            const double v = sample(i) - shift;
            s += v;
            q += v * v;
        }
        sums[c] = s;
        sqs[c] = q;
    });
    double s = 0.0, q = 0.0;
    for (long c = 0; c < chunks; ++c) {
        s += sums[c];
        q += sqs[c];
    }
    const double d = s / n;
    const double var = std::max(0.0, (q - n * d * d) / (n - 1));
    return {shift + d, std::sqrt(var / n), n, seed};
}

/// Exact square-root diffusion transition dX = k (m - X) dt + s sqrt(X) dW,
/// with the step constants precomputed.
struct SqrtStep {
    double e = 1.0, c = 0.0, half_d = 0.0, m = 0.0;
    bool deterministic = true;

    SqrtStep() = default;
    SqrtStep(double k, double level, double s, double dt) : e(std::exp(-k * dt)), m(level), deterministic(s == 0.0)
    {
        if (!deterministic) {
            c = k == 0.0 ? s * s * dt / 4.0 : s * s * (1.0 - e) / (4.0 * k);
            half_d = 2.0 * k * level / (s * s);
        }
    }

    double operator()(double x, Rng& rng) const
    {
        if (deterministic)
            return m + (x - m) * e;
        const long j = rng.poisson(0.5 * std::max(x, 0.0) * e / c);
        return rng.gamma(half_d + j, 2.0 * c);
    }
};

double sqrt_diffusion_step(double x, double k, double m, double s, double dt, Rng& rng)
{
    return SqrtStep(k, m, s, dt)(x, rng);
}

/// Single-name state dynamics under one measure on a fixed step, in the
/// model state layout.
class SingleNameSim {
public:
    SingleNameSim(const MeasurePair& pair, Measure measure, double dt)
        : market_(pair.market()), ratio_(measure == Measure::Market ? 1.0 : pair.intensity_ratio())
    {
        if (pair.kind() == ModelKind::TopDown)
            throw ModelError("single-name simulation requires OU or CIR");
        const ModelParams params = measure == Measure::Market ? pair.market() : pair.investor();
        if (auto* ou = std::get_if<OuParams>(&params)) {
            ou_ = true;
            const auto& mk = pair.market_as<OuParams>();
            const double sr = ou->sigma_r;
            const double sl = mk.mu * mk.sigma_l;
            theta_r_ = ou->theta_r;
            level_ = mk.mu * ou->theta_l;
            er_ = std::exp(-ou->kappa_r * dt);
            el_ = std::exp(-ou->kappa_l * dt);
            auto var = [dt](double k, double s) {
                return k == 0.0 ? s * s * dt : s * s * (1.0 - std::exp(-2.0 * k * dt)) / (2.0 * k);
            };
            sdr_ = std::sqrt(var(ou->kappa_r, sr));
            sdl_ = std::sqrt(var(ou->kappa_l, sl));
            const double ks = ou->kappa_r + ou->kappa_l;
            const double cov = ou->rho * sr * sl * (ks == 0.0 ? dt : (1.0 - std::exp(-ks * dt)) / ks);
            corr_ = (sdr_ > 0 && sdl_ > 0) ? std::clamp(cov / (sdr_ * sdl_), -1.0, 1.0) : 0.0;
            orth_ = std::sqrt(1.0 - corr_ * corr_);
        } else {
            const auto& cir = std::get<CirParams>(params);
            for (std::size_t i = 0; i < cir.factors(); ++i)
                factors_.emplace_back(cir.kappa[i], cir.theta[i], cir.sigma[i], dt);
        }
    }

    void step(StateVector& x, Rng& rng) const
    {
        if (ou_) {
            const double z1 = sdr_ > 0 ? rng.normal() : 0.0;
            const double z2 = rng.normal();
            x[0] = theta_r_ + (x[0] - theta_r_) * er_ + sdr_ * z1;
            x[1] = level_ + (x[1] - level_) * el_ + sdl_ * (corr_ * z1 + orth_ * z2);
            return;
        }
        for (std::size_t i = 0; i < factors_.size(); ++i)
            x[i] = factors_[i](x[i], rng);
    }

    /// Default intensity of the simulated measure.
    double intensity(const StateVector& x) const { return ratio_ * market_lambda(x); }
    double market_lambda(const StateVector& x) const { return pricing_intensity(market_, x); }
    double rate(const StateVector& x) const { return short_rate(market_, x); }

private:
    ModelParams market_;
    double ratio_;
    bool ou_ = false;
    double theta_r_ = 0, level_ = 0, er_ = 1, el_ = 1, sdr_ = 0, sdl_ = 0, corr_ = 0, orth_ = 1;
    std::vector<SqrtStep> factors_;
};

/// Top-down dynamics of (lambda, N, Upsilon) under one measure.
struct TopDownSim {
    double kappa, level, vol, jump_scale, rate_scale;
    LossDistribution loss;

    TopDownSim(const MeasurePair& pair, Measure measure)
    {
        const auto& m = pair.market_as<TopDownParams>();
        const auto& p = measure == Measure::Market ? m : pair.investor_as<TopDownParams>();
        kappa = p.kappa;
        level = m.mu * p.theta;
        vol = m.sigma * std::sqrt(m.mu);
        jump_scale = m.mu * m.eta;
        rate_scale = measure == Measure::Market ? 1.0 : pair.intensity_ratio();
        loss = p.loss;
        rho_eff = kappa - rate_scale * jump_scale * loss.mean();
    }

    double draw_loss(Rng& rng) const
    {
        if (loss.is_constant())
            return loss.values[0];
        double u = rng.uniform();
        for (std::size_t j = 0; j + 1 < loss.values.size(); ++j) {
            if (u < loss.probs[j])
                return loss.values[j];
            u -= loss.probs[j];
        }
        return loss.values.back();
    }

    /// Advances x = {lambda, n, upsilon} from t by dt; on_event(u, loss) is
    /// called at each default time u.
    template <class OnEvent> void advance(StateVector& x, double t, double dt, Rng& rng, OnEvent&& on_event) const
    {
        double remaining = dt;
        int events = 0;
        while (remaining > 0) {
            const double l0 = x[0];
            const double l1 = sqrt_diffusion_step(l0, kappa, level, vol, remaining, rng);
            const double bar = rate_scale * std::max(l0, l1);
            if (!(bar < 1e9) || ++events > 100000) {
                std::ostringstream os;
                os << "top-down thinning rate overflow (intensity explosion); effective reversion rho_eff = "
                   << rho_eff << (rho_eff <= 0 ? " is not positive" : " is positive");
                throw std::runtime_error(os.str());
            }
            double u = 0.0;
            bool fired = false;
            double lu = l1;
            if (bar > 0) {
                for (;;) {
                    u += rng.exponential() / bar;
                    if (u >= remaining)
                        break;
                    lu = l0 + (l1 - l0) * u / remaining;
                    if (rng.uniform() * bar <= rate_scale * lu) {
                        fired = true;
                        break;
                    }
                }
            }
            if (!fired) {
                x[0] = l1;
                return;
            }
            const double l = draw_loss(rng);
            x[0] = lu + jump_scale * l;
            x[1] += 1.0;
            x[2] += l;
            t += u;
            remaining -= u;
            on_event(t, l);
        }
    }

    double rho_eff = 0.0;
};

int steps_for(double horizon, int per_year)
{
    return std::max(1, static_cast<int>(std::ceil(horizon * per_year - 1e-9)));
}

} // namespace

PathBatch simulate_paths(const MeasurePair& pair, Measure measure, const StateVector& x0, double horizon,
                         int n_paths, int n_steps, std::uint64_t seed)
{
    if (pair.kind() == ModelKind::TopDown)
        return simulate_topdown(pair, measure, x0, horizon, n_paths, seed, std::max(1, n_steps));
    if (n_paths < 1 || n_steps < 1 || !(horizon > 0))
        throw DomainError("simulate_paths needs n_paths >= 1, n_steps >= 1, horizon > 0");
    const double dt = horizon / n_steps;
    const SingleNameSim sim(pair, measure, dt);
    PathBatch b;
    b.kind = pair.kind();
    b.measure = measure;
    b.n_paths = n_paths;
    b.n_steps = n_steps;
    b.seed = seed;
    b.dim = static_cast<int>(x0.size());
    b.scheme = b.kind == ModelKind::Ou ? "exact Gaussian transition" : "exact noncentral chi-square transition";
    for (int j = 0; j <= n_steps; ++j)
        b.times.push_back(j * dt);
    const std::size_t row = static_cast<std::size_t>(n_steps + 1);
    b.states.resize(n_paths * row * b.dim);
    b.integrated_intensity.resize(n_paths * row);
    b.integrated_rate.resize(n_paths * row);
    parallel_chunks(n_paths, [&](long, long first, long last) {
        for (long p = first; p < last; ++p) {
            Rng rng(seed, p);
            StateVector x = x0;
            double il = 0.0, ir = 0.0;
            double lam = sim.intensity(x), r = sim.rate(x);
            for (int j = 0; j <= n_steps; ++j) {
                if (j > 0) {
                    sim.step(x, rng);
                    const double lam1 = sim.intensity(x), r1 = sim.rate(x);
                    il += 0.5 * dt * (lam + lam1);
                    ir += 0.5 * dt * (r + r1);
                    lam = lam1;
                    r = r1;
                }
                const std::size_t at = p * row + j;
                std::copy(x.begin(), x.end(), b.states.begin() + at * b.dim);
                b.integrated_intensity[at] = il;
                b.integrated_rate[at] = ir;
            }
        }
    });
    return b;
}

PathBatch simulate_topdown(const MeasurePair& pair, Measure measure, const StateVector& x0, double horizon,
                           int n_paths, std::uint64_t seed, int steps_per_year)
{
    if (pair.kind() != ModelKind::TopDown)
        throw ModelError("simulate_topdown requires the top-down model");
    if (n_paths < 1 || !(horizon > 0))
        throw DomainError("simulate_topdown needs n_paths >= 1 and horizon > 0");
    const TopDownSim sim(pair, measure);
    PathBatch b;
    b.kind = ModelKind::TopDown;
    b.measure = measure;
    b.n_paths = n_paths;
    b.n_steps = steps_for(horizon, steps_per_year);
    b.seed = seed;
    b.dim = 3;
    b.scheme = "thinning with exact square-root diffusion between events";
    const double dt = horizon / b.n_steps;
    for (int j = 0; j <= b.n_steps; ++j)
        b.times.push_back(j * dt);
    const std::size_t row = static_cast<std::size_t>(b.n_steps + 1);
    b.states.resize(n_paths * row * 3);
    b.integrated_intensity.resize(n_paths * row);
    b.integrated_rate.resize(n_paths * row);
    const double r = pair.market_as<TopDownParams>().r;
    parallel_chunks(n_paths, [&](long, long first, long last) {
        for (long p = first; p < last; ++p) {
            Rng rng(seed, p);
            StateVector x{x0.at(0), x0.size() > 1 ? x0[1] : 0.0, x0.size() > 2 ? x0[2] : 0.0};
            double il = 0.0;
            for (int j = 0; j <= b.n_steps; ++j) {
                if (j > 0) {
                    const double l0 = x[0];
                    sim.advance(x, b.times[j - 1], dt, rng, [](double, double) {});
                    il += 0.5 * dt * sim.rate_scale * (l0 + x[0]);
                }
                const std::size_t at = p * row + j;
                std::copy(x.begin(), x.end(), b.states.begin() + at * 3);
                b.integrated_intensity[at] = il;
                b.integrated_rate[at] = r * b.times[j];
            }
        }
    });
    return b;
}

std::vector<double> simulate_default(const PathBatch& batch, std::uint64_t seed)
{
    std::vector<double> out(batch.n_paths, kInf);
    for (int p = 0; p < batch.n_paths; ++p) {
        Rng rng(seed, p, 1);
        const double e = rng.exponential();
        for (int j = 1; j <= batch.n_steps; ++j) {
            const double a = batch.intensity_integral(p, j - 1);
            const double c = batch.intensity_integral(p, j);
            if (c >= e) {
                const double w = c > a ? (e - a) / (c - a) : 1.0;
                out[p] = batch.times[j - 1] + w * (batch.times[j] - batch.times[j - 1]);
                break;
            }
        }
    }
    return out;
}

namespace {

/// Cash flows of the CDX protection buyer from t0 to stop, discounted at r,
/// plus e^{-r(stop - t0)} C(stop) when stopped before T.
struct CdxRun {
    const TopDownSim& sim;
    const TopDownParams& market;
    const Cdx& cdx;

    template <class StopRule> double operator()(double t0, StateVector x, double dt, int steps, Rng& rng,
                                                 StopRule&& stop) const
    {
        const double r = market.r;
        const double p0 = cdx.spread;
        const double H = market.names;
        double value = 0.0;
        double last = t0;
        auto premium = [&](double a, double b, double n) {
            // -p0 (H - n) int_a^b e^{-r (u - t0)} du
            value -= p0 * (H - n) * (std::exp(-r * (a - t0)) - std::exp(-r * (b - t0))) / r;
        };
        for (int j = 0; j < steps; ++j) {
            const double t = t0 + j * dt;
            if (stop(t, x[0]))
                return value + std::exp(-r * (t - t0)) * cdx_price(market, p0, t, cdx.maturity, x[0], x[1]);
            sim.advance(x, t, dt, rng, [&](double u, double l) {
                premium(last, u, x[1]);
                last = u;
                value += std::exp(-r * (u - t0)) * l;
            });
            premium(last, t + dt, x[1]);
            last = t + dt;
        }
        return value;
    }
};

void check_boundary_span(const Boundary& b, double t0, double T)
{
    if (b.rows.empty())
        throw DomainError("boundary has no rows");
    if (b.rows.front().t > t0 + 1e-12 || std::abs(b.rows.back().t - T) > 1e-9 * std::max(1.0, T))
        throw DomainError("boundary does not span [t0, T] of the claim");
}

} // namespace

McEstimate estimate_price(const ClaimSpec& claim, const ModelParams& market, double t0, const StateVector& x0,
                          long n_paths, std::uint64_t seed, const McOptions& opt)
{
    validate_claim(claim);
    const double T = maturity_of(claim);
    if (t0 > T)
        throw DomainError("t0 must not exceed maturity");
    const MeasurePair pair = MeasurePair::agreeing(market);
    const int steps = t0 < T ? steps_for(T - t0, opt.steps_per_year) : 0;
    const double dt = steps > 0 ? (T - t0) / steps : 0.0;

    if (auto* cdx = std::get_if<Cdx>(&claim)) {
        const auto& td = pair.market_as<TopDownParams>();
        const TopDownSim sim(pair, Measure::Market);
        const CdxRun run{sim, td, *cdx};
        return estimate(n_paths, seed, [&](long p) {
            Rng rng(seed, p);
            return run(t0, {x0.at(0), x0.size() > 1 ? x0[1] : 0.0, x0.size() > 2 ? x0[2] : 0.0}, dt, steps, rng,
                       [](double, double) { return false; });
        });
    }

    const SingleNameSim sim(pair, Measure::Market, dt);
    const double Y = terminal_payoff(claim);
    return estimate(n_paths, seed, [&](long p) {
        Rng rng(seed, p);
        StateVector x = x0;
        double logd = 0.0;
        auto flow = [&](double t, const StateVector& s) {
            const double l = sim.market_lambda(s);
            return l * claim_recovery(market, claim, t, s) + claim_dividend_rate(claim, t);
        };
        double disc_rate = sim.rate(x) + sim.intensity(x);
        double f0 = flow(t0, x);
        double acc = 0.0;
        for (int j = 1; j <= steps; ++j) {
            const double t = t0 + j * dt;
            sim.step(x, rng);
            const double dr = sim.rate(x) + sim.intensity(x);
            const double prev = std::exp(-logd);
            logd += 0.5 * dt * (disc_rate + dr);
            disc_rate = dr;
            const double f1 = flow(t, x);
            acc += 0.5 * dt * (prev * f0 + std::exp(-logd) * f1);
            f0 = f1;
        }
        return acc + std::exp(-logd) * Y;
    });
}

McEstimate evaluate_strategy(const ClaimSpec& claim, const MeasurePair& pair, const Boundary& boundary, double t0,
                             const StateVector& x0, long n_paths, std::uint64_t seed, const StrategyOptions& opt)
{
    validate_claim(claim);
    const double T = maturity_of(claim);
    check_boundary_span(boundary, t0, T);
    const int steps = t0 < T ? steps_for(T - t0, opt.steps_per_year) : 0;
    const double dt = steps > 0 ? (T - t0) / steps : 0.0;
    const ModelParams market = pair.market();

    if (auto* cdx = std::get_if<Cdx>(&claim)) {
        const auto& td = pair.market_as<TopDownParams>();
        const TopDownSim sim(pair, Measure::Investor);
        const CdxRun run{sim, td, *cdx};
        return estimate(n_paths, seed, [&](long p) {
            Rng rng(seed, p);
            return run(t0, {x0.at(0), x0.size() > 1 ? x0[1] : 0.0, x0.size() > 2 ? x0[2] : 0.0}, dt, steps, rng,
                       [&](double t, double l) { return boundary.in_region(t, l); });
        });
    }

    const SingleNameSim sim(pair, Measure::Investor, dt);
    const double Y = terminal_payoff(claim);
    const bool sampled = opt.defaults == DefaultHandling::Sampled;
    return estimate(n_paths, seed, [&](long p) {
        Rng rng(seed, p);
        Rng draw(seed, p, 1);
        const double e = sampled ? draw.exponential() : kInf;
        StateVector x = x0;
        // log discount: r only when defaults are sampled, r + lambda~ otherwise.
        double logd = 0.0;
        double hazard = 0.0;
        double acc = 0.0;
        auto kill = [&](const StateVector& s) { return sampled ? 0.0 : sim.intensity(s); };
        auto flow = [&](double t, const StateVector& s) {
            const double q = claim_dividend_rate(claim, t);
            if (sampled)
                return q;
            return sim.intensity(s) * claim_recovery(market, claim, t, s) + q;
        };
        double lam = sim.intensity(x);
        double disc_rate = sim.rate(x) + kill(x);
        double f0 = flow(t0, x);
        for (int j = 0; j <= steps; ++j) {
            const double t = t0 + j * dt;
            if (j == steps)
                return acc + std::exp(-logd) * Y;
            if (boundary.in_region(t, sim.market_lambda(x)))
                return acc + std::exp(-logd) * claim_price(market, claim, t, x);
            const StateVector prev_x = x;
            sim.step(x, rng);
            const double lam1 = sim.intensity(x);
            const double h1 = hazard + 0.5 * dt * (lam + lam1);
            const double dr = sim.rate(x) + kill(x);
            if (sampled && h1 >= e) {
                // Default inside the step: locate linearly, pay recovery.
                const double w = h1 > hazard ? (e - hazard) / (h1 - hazard) : 1.0;
                const double u = t + w * dt;
                const double logu = logd + 0.5 * w * dt * (disc_rate + disc_rate + w * (dr - disc_rate));
                StateVector xu(x.size());
                for (std::size_t i = 0; i < x.size(); ++i)
                    xu[i] = prev_x[i] + w * (x[i] - prev_x[i]);
                const double f1 = flow(u, xu);
                acc += 0.5 * w * dt * (std::exp(-logd) * f0 + std::exp(-logu) * f1);
                return acc + std::exp(-logu) * claim_recovery(market, claim, u, xu);
            }
            const double prev = std::exp(-logd);
            logd += 0.5 * dt * (disc_rate + dr);
            const double f1 = flow(t + dt, x);
            acc += 0.5 * dt * (prev * f0 + std::exp(-logd) * f1);
            f0 = f1;
            disc_rate = dr;
            hazard = h1;
            lam = lam1;
        }
        return acc;
    });
}

} // namespace liqtimer
