#include "totstab/losses.hpp"

#include <cmath>

namespace totstab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double sigmoid(double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    double e = std::exp(v);
    return e / (1.0 + e);
}

void check_delta(double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw ArgumentError("smoothing delta must lie in (0, 1]");
}

// Breakpoint distances from xi inside the open window (0, delta), increasing.
std::vector<double> window_offsets(const PiecewiseLinear& f, double xi, double delta) {
    std::vector<double> a;
    for (auto it = f.breaks.rbegin(); it != f.breaks.rend(); ++it) {
        double d = xi - *it;
        if (d <= 0.0) continue;
        if (d >= delta) break;
        a.push_back(d);
    }
    return a;
}

} // namespace

PiecewiseLinear::PiecewiseLinear(std::vector<double> b, std::vector<double> s, double a)
    : breaks(std::move(b)), slopes(std::move(s)), anchor(a) {
    if (slopes.size() != breaks.size() + 1) throw ArgumentError("need one more slope than breakpoints");
    for (std::size_t i = 1; i < breaks.size(); ++i)
        if (!(breaks[i] > breaks[i - 1])) throw ArgumentError("breakpoints must be strictly increasing");
    for (std::size_t i = 1; i < slopes.size(); ++i)
        if (slopes[i] < slopes[i - 1]) throw ArgumentError("slopes must be nondecreasing (convexity)");
}

double PiecewiseLinear::slope_at(double xi) const {
    std::size_t j = 0;
    while (j < breaks.size() && breaks[j] <= xi) ++j;
    return slopes[j];
}

double PiecewiseLinear::lipschitz() const { return std::max(std::abs(slopes.front()), std::abs(slopes.back())); }

PiecewiseLinear PiecewiseLinear::hinge() { return {{1.0}, {-1.0, 0.0}, 0.0}; }

PiecewiseLinear PiecewiseLinear::pinball(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ArgumentError("pinball tau must lie in (0, 1)");
    return {{0.0}, {tau - 1.0, tau}, 0.0};
}

PiecewiseLinear PiecewiseLinear::eps_insensitive(double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ArgumentError("epsilon must be positive");
    return {{-eps, eps}, {-1.0, 0.0, 1.0}, 0.0};
}

PiecewiseLinear PiecewiseLinear::absolute() { return {{0.0}, {-1.0, 1.0}, 0.0}; }

PiecewiseLinear PiecewiseLinear::linear(double intercept, double slope) { return {{}, {slope}, intercept}; }

double SmoothedPiecewiseLinear::value(double xi) const {
    auto a = window_offsets(base, xi, delta);
    if (a.empty()) return base.value(xi - 0.5 * delta);
    double acc = 0.0;
    double lo = 0.0;
    a.push_back(delta);
    for (double hi : a) {
        acc += (hi - lo) * base.value(xi - 0.5 * (lo + hi));
        lo = hi;
    }
    return acc / delta;
}

double SmoothedPiecewiseLinear::derivative(double xi) const {
    // segments of the window, walking left from xi; slopes indexed by breakpoint
    std::size_t j = base.breaks.size();
    while (j > 0 && base.breaks[j - 1] >= xi) --j;
    double acc = 0.0, lo = 0.0;
    for (; j > 0; --j) {
        double d = xi - base.breaks[j - 1];
        if (d >= delta) break;
        acc += (d - lo) * base.slopes[j];
        lo = d;
    }
    if (lo == 0.0) return base.slopes[j];
    acc += (delta - lo) * base.slopes[j];
    return acc / delta;
}

double SmoothedPiecewiseLinear::second_derivative(double xi) const {
    double jump = 0.0;
    for (std::size_t i = 0; i < base.breaks.size(); ++i) {
        double d = xi - base.breaks[i];
        if (d >= 0.0 && d < delta) jump += base.slopes[i + 1] - base.slopes[i];
    }
    return jump / delta;
}

double SmoothedPiecewiseLinear::max_window_jump() const {
    double best = 0.0;
    for (std::size_t i = 0; i < base.breaks.size(); ++i) {
        double jump = 0.0;
        for (std::size_t j = i; j < base.breaks.size() && base.breaks[j] - base.breaks[i] < delta; ++j)
            jump += base.slopes[j + 1] - base.slopes[j];
        best = std::max(best, jump);
    }
    return best;
}

SmoothedPiecewiseLinear smooth(const PiecewiseLinear& rho, double delta) {
    check_delta(delta);
    return {rho, delta};
}

double profile_value(const Profile& p, double xi) {
    return std::visit(overloaded{
                          [&](const PiecewiseLinear& f) { return f.value(xi); },
                          [&](const SmoothedPiecewiseLinear& f) { return f.value(xi); },
                          [&](const CLogisticProfile&) { return c_logistic(xi); },
                          [&](const RLogisticProfile&) { return r_logistic(xi); },
                          [&](const HuberProfile& h) { return huber(xi, h.alpha); },
                      },
                      p);
}

double profile_derivative(const Profile& p, double xi) {
    return std::visit(overloaded{
                          [&](const PiecewiseLinear& f) -> double {
                              if (!f.breaks.empty())
                                  throw CapabilityError("loss is not differentiable; smooth it first");
                              return f.slopes[0];
                          },
                          [&](const SmoothedPiecewiseLinear& f) { return f.derivative(xi); },
                          [&](const CLogisticProfile&) { return -sigmoid(-xi); },
                          [&](const RLogisticProfile&) { return std::tanh(0.5 * xi); },
                          [&](const HuberProfile& h) { return std::clamp(xi, -h.alpha, h.alpha); },
                      },
                      p);
}

double profile_second_derivative(const Profile& p, double xi) {
    return std::visit(overloaded{
                          [&](const PiecewiseLinear& f) -> double {
                              if (!f.breaks.empty())
                                  throw CapabilityError("loss is not differentiable; smooth it first");
                              return 0.0;
                          },
                          [&](const SmoothedPiecewiseLinear& f) { return f.second_derivative(xi); },
                          [&](const CLogisticProfile&) { return sigmoid(xi) * sigmoid(-xi); },
                          [&](const RLogisticProfile&) {
                              double t = std::tanh(0.5 * xi);
                              return 0.5 * (1.0 - t * t);
                          },
                          [&](const HuberProfile& h) { return std::abs(xi) < h.alpha ? 1.0 : 0.0; },
                      },
                      p);
}

bool profile_differentiable(const Profile& p) {
    if (const auto* f = std::get_if<PiecewiseLinear>(&p)) return f->breaks.empty();
    return true;
}

bool profile_second_continuous(const Profile& p) {
    if (const auto* f = std::get_if<PiecewiseLinear>(&p)) return f->breaks.empty();
    return std::holds_alternative<CLogisticProfile>(p) || std::holds_alternative<RLogisticProfile>(p);
}

double profile_lipschitz(const Profile& p) {
    return std::visit(overloaded{
                          [](const PiecewiseLinear& f) { return f.lipschitz(); },
                          [](const SmoothedPiecewiseLinear& f) { return f.base.lipschitz(); },
                          [](const CLogisticProfile&) { return 1.0; },
                          [](const RLogisticProfile&) { return 1.0; },
                          [](const HuberProfile& h) { return h.alpha; },
                      },
                      p);
}

std::optional<double> profile_derivative_lipschitz(const Profile& p) {
    return std::visit(overloaded{
                          [](const PiecewiseLinear& f) -> std::optional<double> {
                              if (!f.breaks.empty()) return std::nullopt;
                              return 0.0;
                          },
                          [](const SmoothedPiecewiseLinear& f) -> std::optional<double> {
                              return f.max_window_jump() / f.delta;
                          },
                          [](const CLogisticProfile&) -> std::optional<double> { return 0.25; },
                          [](const RLogisticProfile&) -> std::optional<double> { return 0.5; },
                          [](const HuberProfile&) -> std::optional<double> { return 1.0; },
                      },
                      p);
}

std::optional<double> profile_sup_derivative(const Profile& p) {
    if (!profile_differentiable(p)) return std::nullopt;
    return profile_lipschitz(p);
}

std::optional<double> profile_sup_second(const Profile& p) { return profile_derivative_lipschitz(p); }

Loss Loss::hinge() { return {"hinge", LossKind::margin, PiecewiseLinear::hinge(), std::nullopt, std::nullopt}; }
Loss Loss::c_logistic() { return {"c_logistic", LossKind::margin, CLogisticProfile{}, std::nullopt, std::nullopt}; }
Loss Loss::eps_insensitive(double eps) {
    return {"eps_insensitive", LossKind::distance, PiecewiseLinear::eps_insensitive(eps), eps, std::nullopt};
}
Loss Loss::huber(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ArgumentError("huber alpha must be positive");
    return {"huber", LossKind::distance, HuberProfile{alpha}, alpha, std::nullopt};
}
Loss Loss::r_logistic() { return {"r_logistic", LossKind::distance, RLogisticProfile{}, std::nullopt, std::nullopt}; }
Loss Loss::pinball(double tau) {
    return {"pinball", LossKind::distance, PiecewiseLinear::pinball(tau), tau, std::nullopt};
}

namespace {

double argument(const Loss& l, double y, double t) { return l.kind == LossKind::margin ? y * t : y - t; }
double inner(const Loss& l, double y) { return l.kind == LossKind::margin ? y : -1.0; }

} // namespace

double loss_value(const Loss& loss, double y, double t) { return profile_value(loss.profile, argument(loss, y, t)); }

double shifted_value(const Loss& loss, double y, double t) {
    return loss_value(loss, y, t) - loss_value(loss, y, 0.0);
}

double loss_derivative(const Loss& loss, double y, double t) {
    return inner(loss, y) * profile_derivative(loss.profile, argument(loss, y, t));
}

double loss_second_derivative(const Loss& loss, double y, double t) {
    double c = inner(loss, y);
    return c * c * profile_second_derivative(loss.profile, argument(loss, y, t));
}

bool is_differentiable(const Loss& loss) { return profile_differentiable(loss.profile); }

LossConstants loss_constants(const Loss& loss) {
    return {profile_lipschitz(loss.profile), profile_derivative_lipschitz(loss.profile)};
}

Loss smooth(const Loss& loss, double delta) {
    const auto* f = std::get_if<PiecewiseLinear>(&loss.profile);
    if (!f) throw CapabilityError("only piecewise-linear losses are smoothed");
    Loss out = loss;
    out.profile = smooth(*f, delta);
    out.delta = delta;
    return out;
}

namespace {

PairwiseLoss make_pairwise(std::string name, Profile rho, std::optional<double> param) {
    PairwiseLoss pl{std::move(name), std::move(rho), 0.0, param, std::nullopt};
    pl.rho_at_zero = profile_value(pl.rho, 0.0);
    return pl;
}

} // namespace

PairwiseLoss PairwiseLoss::r_logistic() { return make_pairwise("r_logistic_rho", RLogisticProfile{}, std::nullopt); }
PairwiseLoss PairwiseLoss::c_logistic() { return make_pairwise("c_logistic_rho", CLogisticProfile{}, std::nullopt); }
PairwiseLoss PairwiseLoss::huber(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ArgumentError("huber alpha must be positive");
    return make_pairwise("huber_rho", HuberProfile{alpha}, alpha);
}
PairwiseLoss PairwiseLoss::pinball(double tau) {
    return make_pairwise("pinball_rho", PiecewiseLinear::pinball(tau), tau);
}
PairwiseLoss PairwiseLoss::eps_insensitive(double eps) {
    return make_pairwise("eps_insensitive_rho", PiecewiseLinear::eps_insensitive(eps), eps);
}
PairwiseLoss PairwiseLoss::absolute() { return make_pairwise("absolute_rho", PiecewiseLinear::absolute(), std::nullopt); }
PairwiseLoss PairwiseLoss::hinge() { return make_pairwise("hinge_rho", PiecewiseLinear::hinge(), std::nullopt); }

double rho_value(const PairwiseLoss& pl, double xi) { return profile_value(pl.rho, xi) - pl.rho_at_zero; }
double rho_derivative(const PairwiseLoss& pl, double xi) { return profile_derivative(pl.rho, xi); }
double rho_second_derivative(const PairwiseLoss& pl, double xi) { return profile_second_derivative(pl.rho, xi); }

double pairwise_value(const PairwiseLoss& pl, double y, double yt, double t, double tt) {
    return rho_value(pl, (y - t) - (yt - tt));
}

double pairwise_shifted(const PairwiseLoss& pl, double y, double yt, double t, double tt) {
    return pairwise_value(pl, y, yt, t, tt) - pairwise_value(pl, y, yt, 0.0, 0.0);
}

double d5(const PairwiseLoss& pl, double y, double yt, double t, double tt) {
    return -rho_derivative(pl, (y - t) - (yt - tt));
}

double d6(const PairwiseLoss& pl, double y, double yt, double t, double tt) {
    return rho_derivative(pl, (y - t) - (yt - tt));
}

bool is_differentiable(const PairwiseLoss& pl) { return profile_differentiable(pl.rho); }

PairwiseConstants pairwise_constants(const PairwiseLoss& pl) {
    PairwiseConstants c;
    c.sep_lip = profile_lipschitz(pl.rho);
    c.c_l1 = profile_sup_derivative(pl.rho);
    c.c_l2 = profile_sup_second(pl.rho);
    c.deriv_lip = profile_derivative_lipschitz(pl.rho);
    if (c.deriv_lip) c.d_l = 2.0 * *c.deriv_lip;
    c.certified = profile_differentiable(pl.rho) && profile_second_continuous(pl.rho) && c.c_l1 && c.c_l2 &&
                  *c.c_l1 > 0.0 && *c.c_l2 > 0.0;
    return c;
}

PairwiseLoss smooth(const PairwiseLoss& pl, double delta) {
    const auto* f = std::get_if<PiecewiseLinear>(&pl.rho);
    if (!f) throw CapabilityError("only piecewise-linear representing functions are smoothed");
    PairwiseLoss out = make_pairwise(pl.name, smooth(*f, delta), pl.param);
    out.delta = delta;
    return out;
}

} // namespace totstab
