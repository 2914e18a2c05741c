#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "totstab/core.hpp"

namespace totstab {

template <typename Scalar>
Scalar c_logistic(Scalar v) {
    using std::exp;
    using std::log1p;
    using std::abs;
    return log1p(exp(-abs(v))) + std::max(-v, Scalar(0));
}

template <typename Scalar>
Scalar r_logistic(Scalar r) {
    using std::exp;
    using std::log1p;
    using std::abs;
    using std::log;
    return abs(r) + Scalar(2) * log1p(exp(-abs(r))) - log(Scalar(4));
}

template <typename Scalar>
Scalar huber(Scalar r, Scalar alpha) {
    using std::abs;
    Scalar a = abs(r);
    return a <= alpha ? Scalar(0.5) * r * r : alpha * a - Scalar(0.5) * alpha * alpha;
}

// Convex piecewise-linear function of one variable.
struct PiecewiseLinear {
    std::vector<double> breaks; // strictly increasing
    std::vector<double> slopes; // breaks.size() + 1, nondecreasing
    double anchor = 0.0;        // value at breaks[0], or at 0 when there are no breaks

    PiecewiseLinear() = default;
    PiecewiseLinear(std::vector<double> breaks, std::vector<double> slopes, double anchor);

    template <typename Scalar>
    Scalar value(Scalar xi) const {
        if (breaks.empty()) return Scalar(anchor) + Scalar(slopes[0]) * xi;
        if (xi < Scalar(breaks[0])) return Scalar(anchor) + Scalar(slopes[0]) * (xi - Scalar(breaks[0]));
        std::size_t j = 1;
        Scalar v = Scalar(anchor);
        while (j < breaks.size() && Scalar(breaks[j]) <= xi) {
            v += Scalar(slopes[j]) * (Scalar(breaks[j]) - Scalar(breaks[j - 1]));
            ++j;
        }
        return v + Scalar(slopes[j]) * (xi - Scalar(breaks[j - 1]));
    }

    // right derivative
    double slope_at(double xi) const;
    double lipschitz() const;

    static PiecewiseLinear hinge();
    static PiecewiseLinear pinball(double tau);
    static PiecewiseLinear eps_insensitive(double eps);
    static PiecewiseLinear absolute();
    static PiecewiseLinear linear(double intercept, double slope);
};

// rho_delta(xi) = (1/delta) * integral of rho over [xi - delta, xi]
struct SmoothedPiecewiseLinear {
    PiecewiseLinear base;
    double delta = 0.1;

    double value(double xi) const;
    double derivative(double xi) const;
    double second_derivative(double xi) const;
    // largest total slope jump inside a half-open window of length delta
    double max_window_jump() const;
};

struct CLogisticProfile {};
struct RLogisticProfile {};
struct HuberProfile {
    double alpha = 1.0;
};

using Profile = std::variant<PiecewiseLinear, SmoothedPiecewiseLinear, CLogisticProfile, RLogisticProfile, HuberProfile>;

double profile_value(const Profile& p, double xi);
double profile_derivative(const Profile& p, double xi);
double profile_second_derivative(const Profile& p, double xi);
bool profile_differentiable(const Profile& p);
bool profile_second_continuous(const Profile& p);
double profile_lipschitz(const Profile& p);
std::optional<double> profile_derivative_lipschitz(const Profile& p);
// sup |rho'| and sup |rho''| in closed form; absent where undefined
std::optional<double> profile_sup_derivative(const Profile& p);
std::optional<double> profile_sup_second(const Profile& p);

SmoothedPiecewiseLinear smooth(const PiecewiseLinear& rho, double delta);

enum class LossKind { margin, distance };

// L(y, t) = Ltilde(y t) for margin-based, Ltilde(y - t) for distance-based.
struct Loss {
    std::string name;
    LossKind kind = LossKind::distance;
    Profile profile;
    std::optional<double> param;
    std::optional<double> delta; // set on smoothed losses

    static Loss hinge();
    static Loss c_logistic();
    static Loss eps_insensitive(double eps);
    static Loss huber(double alpha);
    static Loss r_logistic();
    static Loss pinball(double tau);
};

struct LossConstants {
    double lip = 0.0;
    std::optional<double> lip_deriv;
};

double loss_value(const Loss& loss, double y, double t);
double shifted_value(const Loss& loss, double y, double t);
double loss_derivative(const Loss& loss, double y, double t);
double loss_second_derivative(const Loss& loss, double y, double t);
bool is_differentiable(const Loss& loss);
LossConstants loss_constants(const Loss& loss);
Loss smooth(const Loss& loss, double delta);

// L(y, t, y~, t~) = rho((y - t) - (y~ - t~)) with rho(0) = 0.
struct PairwiseLoss {
    std::string name;
    Profile rho;
    double rho_at_zero = 0.0; // subtracted so the normalized rho vanishes at 0
    std::optional<double> param;
    std::optional<double> delta;

    static PairwiseLoss r_logistic();
    static PairwiseLoss c_logistic();
    static PairwiseLoss huber(double alpha);
    static PairwiseLoss pinball(double tau);
    static PairwiseLoss eps_insensitive(double eps);
    static PairwiseLoss absolute();
    static PairwiseLoss hinge();
};

struct PairwiseConstants {
    double sep_lip = 0.0;
    std::optional<double> c_l1;
    std::optional<double> c_l2;
    std::optional<double> deriv_lip;
    std::optional<double> d_l;
    bool certified = false; // differentiable with continuous bounded second partials
};

double rho_value(const PairwiseLoss& pl, double xi);
double rho_derivative(const PairwiseLoss& pl, double xi);
double rho_second_derivative(const PairwiseLoss& pl, double xi);
double pairwise_value(const PairwiseLoss& pl, double y, double yt, double t, double tt);
double pairwise_shifted(const PairwiseLoss& pl, double y, double yt, double t, double tt);
double d5(const PairwiseLoss& pl, double y, double yt, double t, double tt);
double d6(const PairwiseLoss& pl, double y, double yt, double t, double tt);
bool is_differentiable(const PairwiseLoss& pl);
PairwiseConstants pairwise_constants(const PairwiseLoss& pl);
PairwiseLoss smooth(const PairwiseLoss& pl, double delta);

} // namespace totstab
