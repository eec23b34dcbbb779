#include "manet/mobility.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "manet/format.hpp"

namespace manet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kQuarterPi = std::numbers::pi / 4.0;

// 2*pi * integral_1^rho t^(1-delta) dt, stable when delta is close to 2.
double ring_mass(double rho, double delta)
{
    double lr = std::log(rho);
    if (delta == 2.0) return 2.0 * kPi * lr;
    double e = 2.0 - delta;
    return 2.0 * kPi * std::expm1(e * lr) / e;
}

double ring_mass_inverse(double mass, double delta)
{
    if (delta == 2.0) return std::exp(mass / (2.0 * kPi));
    double e = 2.0 - delta;
    return std::exp(std::log1p(mass * e / (2.0 * kPi)) / e);
}

// Mass per unit theta in the clipped band, rho = L / cos(theta).
double corner_integrand(double theta, double L, double delta)
{
    double c = std::cos(theta);
    double rho = L / c;
    double drho = L * std::sin(theta) / (c * c);
    return unnormalized_density(rho, delta) * rho * (2.0 * kPi - 8.0 * theta) * drho;
}

template <class F>
double integrate_checked(F f, double a, double b)
{
    if (!(b > a)) return 0.0;
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 6, 1e-11, &err);
    if (!std::isfinite(v) || err > 1e-9 * std::fabs(v) + 1e-12)
        throw std::runtime_error("quadrature on [" + fmt(a) + ", " + fmt(b) + "] did not converge (value " + fmt(v) + ", estimated error " + fmt(err) + ")");
    return v;
}

double corner_mass_between(double t0, double t1, double L, double delta)
{
    auto f = [L, delta](double t) { return corner_integrand(t, L, delta); };
    // min(1, rho^-delta) has a kink at rho = 1, which lies in the band only on tiny tori
    if (L < 1.0 && delta > 0.0) {
        double tk = std::acos(L);
        if (t0 < tk && tk < t1) return integrate_checked(f, t0, tk) + integrate_checked(f, tk, t1);
    }
    return integrate_checked(f, t0, t1);
}

double disc_mass_up_to(double rho, double delta)
{
    double r1 = std::min(rho, 1.0);
    double m = kPi * r1 * r1;
    if (rho > 1.0) m += ring_mass(rho, delta);
    return m;
}

void check_delta(double delta)
{
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw std::invalid_argument("mobility exponent delta must be finite and >= 0");
}

TorusPoint uniform_point(const TorusGeometry& g, Stream& rng)
{
    for (;;) {
        TorusPoint p{rng.uniform() * g.side(), rng.uniform() * g.side()};
        if (p.x < g.side() && p.y < g.side()) return p;
    }
}

}  // namespace

double unnormalized_density(double d, double delta)
{
    if (d <= 1.0) return 1.0;
    if (delta == 0.0) return 1.0;
    return std::pow(d, -delta);
}

double torus_circle_length(double rho, const TorusGeometry& g)
{
    double L = g.half_side();
    if (rho < 0.0) return 0.0;
    if (rho <= L) return 2.0 * kPi * rho;
    if (rho >= L * std::numbers::sqrt2) return 0.0;
    return rho * (2.0 * kPi - 8.0 * std::acos(L / rho));
}

double normalization_constant(double delta, const TorusGeometry& g)
{
    check_delta(delta);
    if (delta == 0.0) return g.area();
    double L = g.half_side();
    return disc_mass_up_to(L, delta) + corner_mass_between(0.0, kQuarterPi, L, delta);
}

MobilityShape::MobilityShape(double delta, const TorusGeometry& g, int resolution)
    : delta_(delta), geom_(g), resolution_(resolution)
{
    check_delta(delta);
    if (resolution < 1024) throw std::invalid_argument("shape resolution must be >= 1024");
    L_ = g.half_side();
    inner_radius_ = std::min(1.0, L_);
    inner_mass_ = kPi * inner_radius_ * inner_radius_;
    disc_mass_ = disc_mass_up_to(L_, delta);

    theta_.resize(resolution + 1);
    corner_cum_.resize(resolution + 1);
    corner_dens_.resize(resolution + 1);
    double h = kQuarterPi / resolution;
    double acc = 0.0;
    for (int k = 0; k <= resolution; ++k) {
        theta_[k] = k == resolution ? kQuarterPi : k * h;
        if (k > 0) acc += corner_mass_between(theta_[k - 1], theta_[k], L_, delta);
        corner_cum_[k] = acc;
        corner_dens_[k] = corner_integrand(theta_[k], L_, delta);
    }
    G_ = delta == 0.0 ? g.area() : disc_mass_ + acc;
}

double MobilityShape::corner_density_theta(double theta) const
{
    return corner_integrand(theta, L_, delta_);
}

// Cubic Hermite interpolation of the cumulative corner mass.
double MobilityShape::corner_cdf_theta(double theta) const
{
    if (theta <= 0.0) return 0.0;
    if (theta >= kQuarterPi) return corner_cum_.back();
    auto it = std::upper_bound(theta_.begin(), theta_.end(), theta);
    std::size_t k = static_cast<std::size_t>(it - theta_.begin()) - 1;
    double h = theta_[k + 1] - theta_[k];
    double t = (theta - theta_[k]) / h;
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * corner_cum_[k] + (t3 - 2 * t2 + t) * h * corner_dens_[k] +
           (-2 * t3 + 3 * t2) * corner_cum_[k + 1] + (t3 - t2) * h * corner_dens_[k + 1];
}

double MobilityShape::invert_corner(double mass) const
{
    if (mass <= 0.0) return 0.0;
    if (mass >= corner_cum_.back()) return kQuarterPi;
    auto it = std::upper_bound(corner_cum_.begin(), corner_cum_.end(), mass);
    std::size_t k = static_cast<std::size_t>(it - corner_cum_.begin()) - 1;
    double h = theta_[k + 1] - theta_[k];
    double c0 = corner_cum_[k], c1 = corner_cum_[k + 1];
    double d0 = h * corner_dens_[k], d1 = h * corner_dens_[k + 1];
    if (!(c1 > c0)) return theta_[k];
    // Newton on the Hermite cubic of this interval, bracketed in t
    double lo = 0.0, hi = 1.0;
    double t = (mass - c0) / (c1 - c0);
    for (int iter = 0; iter < 50; ++iter) {
        double t2 = t * t, t3 = t2 * t;
        double f = (2 * t3 - 3 * t2 + 1) * c0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * c1 +
                   (t3 - t2) * d1 - mass;
        double df = (6 * t2 - 6 * t) * (c0 - c1) + (3 * t2 - 4 * t + 1) * d0 + (3 * t2 - 2 * t) * d1;
        if (f > 0.0) hi = t; else lo = t;
        double next = df > 0.0 ? t - f / df : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - t) <= 1e-15) { t = next; break; }
        t = next;
    }
    return theta_[k] + t * h;
}

double MobilityShape::radial_cdf(double rho) const
{
    if (rho <= 0.0) return 0.0;
    if (rho >= L_ * std::numbers::sqrt2) return 1.0;
    if (delta_ == 0.0) {
        // closed form for the uniform torus: area of the clipped disc
        if (rho <= L_) return kPi * rho * rho / G_;
        double a = std::acos(L_ / rho);
        double clipped = kPi * rho * rho - 4.0 * (rho * rho * a - L_ * std::sqrt(rho * rho - L_ * L_));
        return std::min(1.0, clipped / G_);
    }
    double m;
    if (rho <= L_) {
        m = disc_mass_up_to(rho, delta_);
    } else {
        m = disc_mass_ + corner_cdf_theta(std::acos(L_ / rho));
    }
    return std::min(1.0, m / G_);
}

double MobilityShape::radial_quantile(double u) const
{
    if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("quantile must lie in [0, 1]");
    double m = u * G_;
    double rho;
    if (m <= inner_mass_) {
        rho = std::sqrt(m / kPi);
    } else if (m <= disc_mass_) {
        rho = ring_mass_inverse(m - inner_mass_, delta_);
    } else if (delta_ == 0.0) {
        // invert the clipped-disc area by Newton; its derivative is the circle length
        double target = m;
        double lo = L_, hi = L_ * std::numbers::sqrt2;
        rho = 0.5 * (lo + hi);
        for (int iter = 0; iter < 60; ++iter) {
            double f = radial_cdf(rho) * G_ - target;
            if (f > 0.0) hi = rho; else lo = rho;
            double d = torus_circle_length(rho, geom_);
            double next = d > 0.0 ? rho - f / d : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::fabs(next - rho) <= 1e-15 * hi) { rho = next; break; }
            rho = next;
        }
    } else {
        rho = L_ / std::cos(invert_corner(m - disc_mass_));
    }
    return std::min(rho, L_ * std::numbers::sqrt2);
}

std::vector<std::pair<double, double>> MobilityShape::quantile_table(int rows) const
{
    if (rows < 1) throw std::invalid_argument("quantile table needs at least one row");
    std::vector<std::pair<double, double>> out;
    out.reserve(rows + 1);
    for (int k = 0; k <= rows; ++k) {
        double u = static_cast<double>(k) / rows;
        out.emplace_back(u, radial_quantile(u));
    }
    return out;
}

MobilityShape build_shape(double delta, const TorusGeometry& g, int resolution)
{
    return MobilityShape(delta, g, resolution);
}

TorusPoint point_at_distance(const TorusPoint& home, double rho, const TorusGeometry& g, Stream& rng)
{
    double L = g.half_side();
    if (rho <= L) {
        // uniform direction from a point in the unit disc, avoids sincos
        for (;;) {
            double u = 2.0 * rng.uniform() - 1.0;
            double v = 2.0 * rng.uniform() - 1.0;
            double r2 = u * u + v * v;
            if (r2 > 1.0 || r2 < 1e-12) continue;
            double s = rho / std::sqrt(r2);
            return wrap(home.x + s * u, home.y + s * v, g);
        }
    } else {
        double a = std::acos(std::min(1.0, L / rho));
        double w = 0.5 * kPi - 2.0 * a;
        double v = rng.uniform() * 4.0 * w;
        int q = std::min(3, static_cast<int>(v / w));
        double phi = q * 0.5 * kPi + a + (v - q * w);
        return wrap(home.x + rho * std::cos(phi), home.y + rho * std::sin(phi), g);
    }
}

TorusPoint sample_position(const TorusPoint& home, const MobilityShape& shape, Stream& rng)
{
    if (shape.uniform()) return uniform_point(shape.geometry(), rng);
    double rho = shape.radial_quantile(rng.uniform());
    return point_at_distance(home, rho, shape.geometry(), rng);
}

HomePoints generate_homes(int n, Stream& rng)
{
    if (n < 2) throw std::invalid_argument("need at least 2 nodes, got " + std::to_string(n));
    TorusGeometry g = TorusGeometry::from_area(n);
    HomePoints homes(n);
    for (auto& h : homes) h = uniform_point(g, rng);
    return homes;
}

void write_shape_csv(const MobilityShape& shape, const std::string& path, int rows)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "# params delta=" << fmt(shape.delta()) << " n=" << fmt(shape.geometry().area())
        << " G=" << fmt(shape.G()) << " resolution=" << shape.resolution() << "\n";
    out << "quantile,distance\n";
    for (auto [u, d] : shape.quantile_table(rows)) out << fmt(u) << "," << fmt(d) << "\n";
}

}  // namespace manet
