#include "manet/analysis.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "manet/format.hpp"
#include "manet/scheduling.hpp"

namespace manet {

Regime classify_regime(double delta, Scheme scheme)
{
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw std::invalid_argument("delta must be finite and >= 0");
    if (scheme == Scheme::alternative) return Regime::alternative_static;
    if (scheme == Scheme::slow) return Regime::slow_degenerate;
    if (delta <= 1.0) return Regime::delta_le_1;
    if (delta < 2.0) return Regime::delta_in_1_2;
    if (delta == 2.0) return Regime::delta_eq_2;
    if (delta < 3.0) return Regime::delta_in_2_3;
    return Regime::delta_ge_3;
}

std::string regime_label(Regime r)
{
    switch (r) {
    case Regime::delta_le_1: return "delta_le_1";
    case Regime::delta_in_1_2: return "delta_in_1_2";
    case Regime::delta_eq_2: return "delta_eq_2";
    case Regime::delta_in_2_3: return "delta_in_2_3";
    case Regime::delta_ge_3: return "delta_ge_3";
    case Regime::alternative_static: return "alternative_static";
    case Regime::slow_degenerate: return "slow_degenerate";
    }
    return "unknown";
}

std::string bound_label(BoundKind k)
{
    switch (k) {
    case BoundKind::theta: return "Theta";
    case BoundKind::big_o: return "O";
    case BoundKind::omega: return "Omega";
    }
    return "?";
}

double OrderExpr::evaluate(double n) const
{
    double v = coef * std::pow(n, n_exp);
    if (log_exp != 0.0) v *= std::pow(std::log(n), log_exp);
    if (loglog_exp != 0.0) v *= std::pow(std::log(std::log(n)), loglog_exp);
    return v;
}

std::string OrderExpr::str() const
{
    std::ostringstream o;
    o << bound_label(kind) << "(";
    if (coef != 1.0) o << fmt(coef) << "*";
    o << "n^" << fmt(n_exp);
    if (log_exp != 0.0) o << "*log(n)^" << fmt(log_exp);
    if (loglog_exp != 0.0) o << "*loglog(n)^" << fmt(loglog_exp);
    o << ")";
    return o.str();
}

double Z0Scale::value(double n) const
{
    double v = coef * std::pow(n, n_exp);
    if (log_exp != 0.0) v *= std::pow(std::log(n), log_exp);
    return v;
}

double z0_constraint(double delta, double n)
{
    if (!(n >= 4.0)) throw std::invalid_argument("z0_constraint needs n >= 4");
    if (delta < 1.0) return std::pow(n, 1.0 / 6.0);
    if (delta < 2.0) return std::pow(n, (2.0 - delta) / (8.0 - 2.0 * delta));
    return std::sqrt(std::log(n));
}

OrderExpr z0_constraint_order(double delta)
{
    OrderExpr e;
    e.kind = BoundKind::omega;
    if (delta < 1.0)
        e.n_exp = 1.0 / 6.0;
    else if (delta < 2.0)
        e.n_exp = (2.0 - delta) / (8.0 - 2.0 * delta);
    else
        e.log_exp = 0.5;
    return e;
}

std::string z0_constraint_text(double delta)
{
    if (delta < 1.0) return "Z0 >= n^(1/6) for delta < 1";
    if (delta < 2.0) return "Z0 >= n^((2-delta)/(8-2*delta)) = n^" + fmt((2.0 - delta) / (8.0 - 2.0 * delta)) + " for 1 <= delta < 2";
    return "Z0 >= sqrt(ln n) for delta >= 2";
}

namespace {

double unit_area_sum(double delta, double n, double Z0)
{
    int top = i_max(n, Z0);
    double s = 0.0;
    for (int i = 0; i <= top; ++i) s += squarelet_area(i, delta, n, Z0, 1.0);
    return s;
}

}  // namespace

OrderValue throughput_bound(double delta, double n, const Z0Scale& z0)
{
    double Z0 = z0.value(n);
    OrderValue r;
    r.numeric = n / unit_area_sum(delta, n, Z0);
    OrderExpr& e = r.order;
    switch (classify_regime(delta)) {
    case Regime::delta_le_1:
        e.n_exp = 0.5 + z0.n_exp;
        e.log_exp = z0.log_exp;
        e.coef = z0.coef;
        break;
    case Regime::delta_in_1_2:
        e.n_exp = delta / 2.0 + z0.n_exp * (2.0 - delta);
        e.log_exp = z0.log_exp * (2.0 - delta);
        e.coef = std::pow(z0.coef, 2.0 - delta);
        break;
    case Regime::delta_eq_2:
        e.n_exp = 1.0;
        e.log_exp = (z0.n_exp == 0.5 && z0.log_exp == 0.0) ? -1.0 : -2.0;
        break;
    default:
        e.n_exp = 2.0 - delta / 2.0;
        break;
    }
    return r;
}

OrderValue delay_bound(double delta, double n, const Z0Scale& z0)
{
    double Z0 = z0.value(n);
    OrderValue r;
    OrderExpr& e = r.order;
    switch (classify_regime(delta)) {
    case Regime::delta_le_1:
        r.numeric = Z0 * std::sqrt(n);
        e.n_exp = z0.n_exp + 0.5;
        e.log_exp = z0.log_exp;
        e.coef = z0.coef;
        break;
    case Regime::delta_in_1_2:
        r.numeric = std::pow(Z0, delta) * std::pow(n, 1.0 - delta / 2.0);
        e.n_exp = z0.n_exp * delta + 1.0 - delta / 2.0;
        e.log_exp = z0.log_exp * delta;
        e.coef = std::pow(z0.coef, delta);
        break;
    case Regime::delta_eq_2: {
        double ln = std::log(n);
        if (!(Z0 > 1.0)) throw std::invalid_argument("the delta = 2 delay bound needs Z0 > 1");
        r.numeric = Z0 * Z0 * ln * ln * ln * std::log(ln) / std::log(Z0);
        e.kind = BoundKind::big_o;
        e.n_exp = 2.0 * z0.n_exp;
        e.coef = z0.coef * z0.coef;
        // log Z0 ~ beta log n when beta > 0, ~ gamma loglog n when only the log power is set
        if (z0.n_exp > 0.0) {
            e.log_exp = 2.0 * z0.log_exp + 2.0;
            e.loglog_exp = 1.0;
            e.coef /= z0.n_exp;
        } else if (z0.log_exp > 0.0) {
            e.log_exp = 2.0 * z0.log_exp + 3.0;
            e.coef /= z0.log_exp;
        } else {
            e.log_exp = 3.0;
            e.loglog_exp = 1.0;
            e.coef /= std::log(z0.coef);
        }
        break;
    }
    default:
        r.numeric = std::pow(n, delta / 2.0 - 1.0) * Z0 * Z0;
        e.kind = BoundKind::big_o;
        e.n_exp = delta / 2.0 - 1.0 + 2.0 * z0.n_exp;
        e.log_exp = 2.0 * z0.log_exp;
        e.coef = z0.coef * z0.coef;
        break;
    }
    return r;
}

ServiceProbabilities service_probabilities(int i, double delta, double n, const Z0Scale& z0)
{
    double Z0 = z0.value(n);
    int top = i_max(n, Z0);
    if (i < 0 || i > top) throw std::invalid_argument("step " + std::to_string(i) + " outside [0, i_max]");
    ServiceProbabilities r;
    r.i = i;
    double Zi = std::ldexp(Z0, i);
    r.A = squarelet_area(i, delta, n, Z0, 1.0);
    r.gamma = i >= 1 ? Zi * Zi : 1.0;
    r.p_s = r.A / unit_area_sum(delta, n, Z0);
    double ln = std::log(n);
    Regime reg = classify_regime(delta);
    switch (reg) {
    case Regime::delta_le_1: r.p_alpha = r.A * r.gamma / n; break;
    case Regime::delta_in_1_2: r.p_alpha = r.A * std::pow(Zi, 2.0 * (1.0 - delta)) * r.gamma / std::pow(n, 2.0 - delta); break;
    case Regime::delta_eq_2: r.p_alpha = r.A * r.gamma / (Zi * Zi) * std::log(Zi) / (ln * ln); break;
    default: r.p_alpha = r.A * r.gamma * std::pow(Zi, -delta); break;
    }
    if (delta < 2.0) {
        r.p_beta = 1.0;
    } else if (delta == 2.0) {
        r.p_beta = ln / (r.A * std::log(r.A));
        r.beta_kind = BoundKind::omega;
    } else {
        r.p_beta = 1.0 / r.A;
        r.beta_kind = BoundKind::omega;
    }
    r.p_T = r.p_s * r.p_alpha * r.p_beta;
    r.T_kind = delta >= 2.0 ? BoundKind::omega : BoundKind::theta;

    // rows written as |Gamma_i| / Z_i^2 times a Z0/n factor; |Gamma_i| / Z_i^2 is 1 for i >= 1 and Z0^-2 for i = 0
    OrderExpr& e = r.p_T_order;
    e.kind = r.T_kind;
    double b = z0.n_exp, g = z0.log_exp;
    switch (reg) {
    case Regime::delta_le_1:
        e.n_exp = b - 0.5;
        e.log_exp = g;
        break;
    case Regime::delta_in_1_2:
        e.n_exp = b * (2.0 - delta) - 1.0 + delta / 2.0;
        e.log_exp = g * (2.0 - delta);
        break;
    case Regime::delta_eq_2:
        if (b > 0.0) {
            e.log_exp = -2.0;
            e.loglog_exp = -1.0;
        } else {
            e.log_exp = -3.0;
        }
        break;
    default:
        e.n_exp = 1.0 - delta / 2.0;
        break;
    }
    if (i == 0) {
        e.n_exp -= 2.0 * b;
        e.log_exp -= 2.0 * g;
    }
    return r;
}

double power_exponent(double delta)
{
    if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
    if (delta == 2.0) return 0.0;
    if (delta > 1.0 && delta < 2.0) return -3.0 * (2.0 - delta) / (4.0 - delta);
    if (delta > 2.0 && delta < 3.0) return 2.0 - delta;
    return -1.0;
}

double beta_floor(double delta)
{
    if (delta <= 1.0) return 1.0 / 6.0;
    if (delta < 2.0) return (2.0 - delta) / (8.0 - 2.0 * delta);
    return 0.0;
}

TradeoffPoint tradeoff_curve(double delta, double beta)
{
    TradeoffPoint p;
    if (delta < 2.0) {
        double lo = beta_floor(delta);
        if (beta < lo - 1e-12 || beta > 0.5 + 1e-12) {
            std::ostringstream m;
            m << "beta = " << fmt(beta) << " outside [" << fmt(lo) << ", 0.5] for delta = " << fmt(delta) << " ("
              << z0_constraint_text(delta) << ")";
            throw std::invalid_argument(m.str());
        }
        if (delta <= 1.0) {
            p.lambda_exp = beta - 0.5;
            p.delay_exp = beta + 0.5;
        } else {
            p.lambda_exp = delta / 2.0 - 1.0 + beta * (2.0 - delta);
            p.delay_exp = 1.0 - delta * (0.5 - beta);
        }
        return p;
    }
    if (delta == 2.0) {
        // Z0 = sqrt(log n): lambda ~ 1/log^2 n, D ~ log^4 n
        p.lambda_log_exp = -2.0;
        p.delay_log_exp = 4.0;
        return p;
    }
    p.lambda_exp = 1.0 - delta / 2.0;
    p.delay_exp = delta / 2.0 - 1.0;
    p.delay_log_exp = 1.0;
    return p;
}

ScalingLaw alternative_scheme_law()
{
    ScalingLaw s;
    s.throughput_exponent = -0.5;
    s.throughput_log_exp = -0.5;
    s.delay_exponent = 0.5;
    s.delay_log_exp = -0.5;
    s.power_exponent = s.throughput_exponent - s.delay_exponent;
    return s;
}

bool alternative_preferred(double delta) { return delta > 3.0; }

double hybrid_concurrent_transmissions(double n, double A0, double B0)
{
    if (!(A0 > 0.0) || !(B0 >= A0) || !(n >= B0)) throw std::invalid_argument("need 0 < A0 <= B0 <= n");
    return (n / B0) * (B0 / A0);
}

double slow_power_exponent(double delta)
{
    return std::max(power_exponent(delta), -0.5);
}

namespace {

// root of power_exponent(delta) + 1/2 on (lo, hi), where the sign changes once
double solve_power_crossing(double lo, double hi)
{
    double flo = power_exponent(lo) + 0.5;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = power_exponent(mid) + 0.5;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

SlowMobilitySummary slow_mobility_summary(double delta)
{
    SlowMobilitySummary s;
    s.degenerate.throughput_exponent = -0.5;
    s.degenerate.throughput_log_exp = -0.5;
    s.degenerate.throughput_kind = BoundKind::omega;
    s.degenerate.delay_exponent = 0.0;
    s.degenerate.power_exponent = -0.5;
    // hybrid multi-hop last step: concurrency n/A0 regardless of B0
    double n = 1 << 20, A0 = 16.0;
    s.hybrid_gain = hybrid_concurrent_transmissions(n, A0, 64.0 * A0) > hybrid_concurrent_transmissions(n, A0, A0);
    s.prefer_lo = solve_power_crossing(1.0 + 1e-9, 2.0 - 1e-9);
    s.prefer_hi = solve_power_crossing(2.0 + 1e-9, 3.0 - 1e-9);
    s.bisection_power = power_exponent(delta);
    s.bisection_preferred = delta >= s.prefer_lo - 1e-12 && delta <= s.prefer_hi + 1e-12;
    return s;
}

double kingman_delay(const KingmanBound& b)
{
    if (!(b.rho < 1.0)) throw std::invalid_argument("queue load rho >= 1: the queue is unstable");
    if (b.rho < 0.0 || b.sigma2_a < 0.0 || b.sigma2_D < 0.0 || !(b.D_S > 0.0))
        throw std::invalid_argument("Kingman bound needs rho >= 0, non-negative variances and D_S > 0");
    return b.D_S * std::max(1.0, (b.sigma2_a + b.sigma2_D) / (2.0 * b.D_S * b.D_S * (1.0 - b.rho)));
}

Prop1Limits proposition1_limits(double Z, double R, double meet_prob, double n)
{
    if (!(R > 0.0)) throw std::invalid_argument("transmission range must be positive");
    if (!(meet_prob > 0.0 && meet_prob <= 1.0)) throw std::invalid_argument("meeting probability must lie in (0, 1]");
    if (!(Z > 0.0) || !(n > 0.0)) throw std::invalid_argument("Z and n must be positive");
    return {n / (R * R), 1.0 / meet_prob};
}

MeetingExponents meeting_exponents(double delta)
{
    MeetingExponents m;
    if (delta <= 1.0) {
        m.n_exp = -1.0;
    } else if (delta < 2.0) {
        m.D_exp = 2.0 * (1.0 - delta);
        m.n_exp = -(2.0 - delta);
    } else if (delta == 2.0) {
        m.D_exp = -2.0;
        m.logD_exp = 1.0;
        m.logn_exp = -2.0;
    } else {
        m.D_exp = -delta;
    }
    return m;
}

OrderValue pair_meeting_probability(double D, double A, double delta, double n)
{
    if (!(A > 0.0) || !(D > 0.0) || !(n > 1.0)) throw std::invalid_argument("need A > 0, D > 0, n > 1");
    if (!(std::sqrt(A) < D / 4.0))
        throw std::invalid_argument("cell side sqrt(A) = " + fmt(std::sqrt(A)) + " is not below D/4 = " + fmt(D / 4.0));
    MeetingExponents m = meeting_exponents(delta);
    OrderValue r;
    r.numeric = A * std::pow(D, m.D_exp) * std::pow(n, m.n_exp);
    if (m.logD_exp != 0.0) r.numeric *= std::pow(std::log(D), m.logD_exp);
    if (m.logn_exp != 0.0) r.numeric *= std::pow(std::log(n), m.logn_exp);
    r.order.n_exp = m.n_exp;
    r.order.log_exp = m.logn_exp;
    r.order.coef = A * std::pow(D, m.D_exp) * (m.logD_exp != 0.0 ? std::pow(std::log(D), m.logD_exp) : 1.0);
    return r;
}

}  // namespace manet
