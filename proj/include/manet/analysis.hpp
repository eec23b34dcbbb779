#pragma once

#include <string>

namespace manet {

enum class Regime { delta_le_1, delta_in_1_2, delta_eq_2, delta_in_2_3, delta_ge_3, alternative_static, slow_degenerate };
enum class Scheme { bisection, alternative, slow };

// The delta == 2 row is taken only for the exact value 2.0.
Regime classify_regime(double delta, Scheme scheme = Scheme::bisection);
std::string regime_label(Regime r);

enum class BoundKind { theta, big_o, omega };
std::string bound_label(BoundKind k);

// coef * n^n_exp * (ln n)^log_exp * (ln ln n)^loglog_exp
struct OrderExpr {
    double n_exp = 0.0;
    double log_exp = 0.0;
    double loglog_exp = 0.0;
    double coef = 1.0;
    BoundKind kind = BoundKind::theta;

    double evaluate(double n) const;
    std::string str() const;
};

// Z0 = coef * n^n_exp * (ln n)^log_exp
struct Z0Scale {
    double coef = 1.0;
    double n_exp = 0.0;
    double log_exp = 0.0;

    double value(double n) const;
    static Z0Scale power(double beta, double c = 1.0) { return {c, beta, 0.0}; }
    static Z0Scale sqrt_log(double c = 1.0) { return {c, 0.0, 0.5}; }
};

struct OrderValue {
    OrderExpr order;
    double numeric = 0.0;  // unit constants
};

// Smallest admissible Z0: n^(1/6) (delta < 1), n^((2-delta)/(8-2 delta)) (1 <= delta < 2), sqrt(ln n) (delta >= 2).
double z0_constraint(double delta, double n);
OrderExpr z0_constraint_order(double delta);
std::string z0_constraint_text(double delta);

// Aggregate throughput bound n / sum_i A_i.
OrderValue throughput_bound(double delta, double n, const Z0Scale& z0);
// Total source-to-destination service delay sum_i 1/p_T.
OrderValue delay_bound(double delta, double n, const Z0Scale& z0);

struct ServiceProbabilities {
    int i = 0;
    double A = 0.0;
    double gamma = 0.0;  // number of candidate receivers |Gamma_i|
    double p_s = 0.0;
    double p_alpha = 0.0;
    double p_beta = 0.0;
    double p_T = 0.0;
    BoundKind alpha_kind = BoundKind::theta;
    BoundKind beta_kind = BoundKind::theta;
    BoundKind T_kind = BoundKind::theta;
    OrderExpr p_T_order;  // closed-form row at fixed i
};
ServiceProbabilities service_probabilities(int i, double delta, double n, const Z0Scale& z0);

// Best exponent of n in lambda / D under fast mobility.
double power_exponent(double delta);

struct TradeoffPoint {
    double lambda_exp = 0.0;
    double delay_exp = 0.0;
    double lambda_log_exp = 0.0;
    double delay_log_exp = 0.0;
};
// Lowest admissible beta for Z0 = n^beta.
double beta_floor(double delta);
TradeoffPoint tradeoff_curve(double delta, double beta);

struct ScalingLaw {
    double throughput_exponent = 0.0;
    double delay_exponent = 0.0;
    double power_exponent = 0.0;
    double throughput_log_exp = 0.0;
    double delay_log_exp = 0.0;
    BoundKind throughput_kind = BoundKind::theta;
    BoundKind delay_kind = BoundKind::theta;
};
ScalingLaw alternative_scheme_law();
bool alternative_preferred(double delta);

struct SlowMobilitySummary {
    ScalingLaw degenerate;
    bool hybrid_gain = false;
    double prefer_lo = 0.0;
    double prefer_hi = 0.0;
    double bisection_power = 0.0;
    bool bisection_preferred = false;
};
// Mean number of concurrent last-step transmissions with multi-hop squarelets of area B0
// built from cells of area A0: (n / B0) squarelets times (B0 / A0) non-conflicting pairs.
double hybrid_concurrent_transmissions(double n, double A0, double B0);
// Power exponent of the better of bisection and the degenerate single-step point.
double slow_power_exponent(double delta);
SlowMobilitySummary slow_mobility_summary(double delta);

struct KingmanBound {
    double sigma2_a = 0.0;
    double sigma2_D = 0.0;
    double rho = 0.0;
    double D_S = 0.0;
};
double kingman_delay(const KingmanBound& b);

struct Prop1Limits {
    double throughput_cap = 0.0;
    double delay_floor = 0.0;
};
Prop1Limits proposition1_limits(double Z, double R, double meet_prob, double n);

// Probability two nodes with homes D apart share a cell of area A. Requires sqrt(A) < D / 4.
OrderValue pair_meeting_probability(double D, double A, double delta, double n);

struct MeetingExponents {
    double D_exp = 0.0;
    double n_exp = 0.0;
    double logD_exp = 0.0;
    double logn_exp = 0.0;
};
MeetingExponents meeting_exponents(double delta);

}  // namespace manet
