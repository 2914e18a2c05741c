#include "totstab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace totstab {

namespace {

struct Support {
    std::vector<int> idx; // ground-space index of each support point
    std::vector<int> pos; // support position of each atom
};

Support support_of(const DiscreteMeasure& p) {
    Support s;
    std::vector<int> where(p.space().size(), -1);
    for (const Atom& a : p.atoms())
        if (where[a.x] < 0) where[a.x] = 0;
    for (int i = 0; i < p.space().size(); ++i)
        if (where[i] == 0) {
            where[i] = static_cast<int>(s.idx.size());
            s.idx.push_back(i);
        }
    for (const Atom& a : p.atoms()) s.pos.push_back(where[a.x]);
    return s;
}

Matrix restrict(const Matrix& K, const std::vector<int>& idx) {
    const auto s = static_cast<Eigen::Index>(idx.size());
    Matrix out(s, s);
    for (Eigen::Index i = 0; i < s; ++i)
        for (Eigen::Index j = 0; j < s; ++j) out(i, j) = K(idx[i], idx[j]);
    return out;
}

struct ClassicalRisk {
    const DiscreteMeasure& p;
    const Loss& loss;
    const std::vector<int>& pos;
    Eigen::Index s;

    double value(const Vector& f) const {
        double acc = 0.0;
        for (int a = 0; a < p.size(); ++a) acc += p.weights()(a) * shifted_value(loss, p.atoms()[a].y, f(pos[a]));
        return acc;
    }
    Vector gradient(const Vector& f) const {
        Vector g = Vector::Zero(s);
        for (int a = 0; a < p.size(); ++a) g(pos[a]) += p.weights()(a) * loss_derivative(loss, p.atoms()[a].y, f(pos[a]));
        return g;
    }
    Matrix hessian(const Vector& f) const {
        Vector h = Vector::Zero(s);
        for (int a = 0; a < p.size(); ++a)
            h(pos[a]) += p.weights()(a) * loss_second_derivative(loss, p.atoms()[a].y, f(pos[a]));
        return h.asDiagonal();
    }
};

struct PairwiseRisk {
    const DiscreteMeasure& p;
    const PairwiseLoss& loss;
    const std::vector<int>& pos;
    Eigen::Index s;

    double value(const Vector& f) const {
        double acc = 0.0;
        for (int a = 0; a < p.size(); ++a)
            for (int b = 0; b < p.size(); ++b) {
                if (pos[a] == pos[b]) continue;
                double ya = p.atoms()[a].y, yb = p.atoms()[b].y;
                acc += p.weights()(a) * p.weights()(b) *
                       (rho_value(loss, (ya - f(pos[a])) - (yb - f(pos[b]))) - rho_value(loss, ya - yb));
            }
        return acc;
    }
    Vector gradient(const Vector& f) const {
        Vector g = Vector::Zero(s);
        for (int a = 0; a < p.size(); ++a)
            for (int b = 0; b < p.size(); ++b) {
                if (pos[a] == pos[b]) continue;
                double xi = (p.atoms()[a].y - f(pos[a])) - (p.atoms()[b].y - f(pos[b]));
                double c = p.weights()(a) * p.weights()(b) * rho_derivative(loss, xi);
                g(pos[b]) += c;
                g(pos[a]) -= c;
            }
        return g;
    }
    Matrix hessian(const Vector& f) const {
        Matrix H = Matrix::Zero(s, s);
        for (int a = 0; a < p.size(); ++a)
            for (int b = 0; b < p.size(); ++b) {
                if (pos[a] == pos[b]) continue;
                double xi = (p.atoms()[a].y - f(pos[a])) - (p.atoms()[b].y - f(pos[b]));
                double c = p.weights()(a) * p.weights()(b) * rho_second_derivative(loss, xi);
                H(pos[a], pos[a]) += c;
                H(pos[b], pos[b]) += c;
                H(pos[a], pos[b]) -= c;
                H(pos[b], pos[a]) -= c;
            }
        return H;
    }
};

struct CoreResult {
    Vector alpha;
    int iterations = 0;
    double grad_norm = 0.0;
    double residual = 0.0;
    double objective = 0.0;
    std::string mode;
    bool contraction_certified = false;
    bool stagnated = false;
    bool converged = false;
    std::vector<double> trace;
};

struct State {
    Vector f, g, r, Kr;
    double grad_norm = 0.0;
    double residual = 0.0;
};

template <class Risk>
class Core {
public:
    Core(const Matrix& K, double lambda, const Risk& risk, double tol) : K_(K), lambda_(lambda), risk_(risk), tol_(tol) {}

    State state(const Vector& alpha) const {
        State st;
        st.f = K_ * alpha;
        st.g = risk_.gradient(st.f);
        st.r = st.g + 2.0 * lambda_ * alpha;
        st.Kr = K_ * st.r;
        st.grad_norm = st.Kr.norm();
        st.residual = std::sqrt(std::max(0.0, st.r.dot(st.Kr))) / (2.0 * lambda_);
        return st;
    }

    double objective(const Vector& alpha) const {
        Vector f = K_ * alpha;
        return risk_.value(f) + lambda_ * alpha.dot(f);
    }

    bool done(const State& st) const { return st.grad_norm <= tol_ && st.residual <= tol_; }

    CoreResult fixed_point(Vector alpha, double damping, int max_iters) const {
        CoreResult out;
        out.mode = "fixed_point";
        double theta = damping;
        double prev = std::numeric_limits<double>::infinity();
        bool monotone = true;
        int it = 0;
        for (; it < max_iters; ++it) {
            State st = state(alpha);
            out.trace.push_back(st.grad_norm);
            if (done(st)) {
                out.converged = true;
                break;
            }
            if (st.residual < prev) {
                theta = std::min(1.0, 2.0 * theta);
            } else {
                monotone = false;
                theta *= 0.5;
            }
            prev = st.residual;
            alpha -= theta * st.r / (2.0 * lambda_);
        }
        finish(out, alpha, it);
        out.contraction_certified = out.converged && monotone;
        return out;
    }

    CoreResult newton(Vector alpha, int max_iters) const {
        CoreResult out;
        out.mode = "newton";
        int it = 0;
        for (; it < max_iters; ++it) {
            State st = state(alpha);
            out.trace.push_back(st.grad_norm);
            if (done(st)) {
                out.converged = true;
                break;
            }
            Matrix M = risk_.hessian(st.f) * K_;
            M.diagonal().array() += 2.0 * lambda_;
            Eigen::PartialPivLU<Matrix> lu(M);
            Vector step = lu.solve(-st.r);
            // one round of iterative refinement
            step += lu.solve(-st.r - M * step);
            double slope = st.Kr.dot(step);
            if (!step.allFinite() || !(slope < 0.0)) {
                step = -st.r;
                slope = -st.r.dot(st.Kr);
            }
            double f0 = objective(alpha);
            double t = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 40; ++ls) {
                double decrease = f0 - objective(alpha + t * step);
                if (decrease >= -1e-4 * t * slope) {
                    // decreases at rounding level cannot rule out cycling
                    accepted = decrease > 1e-13 * (1.0 + std::abs(f0));
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) {
                t = 1.0;
                for (int ls = 0; ls < 40 && !accepted; ++ls) {
                    if (state(alpha + t * step).residual < st.residual)
                        accepted = true;
                    else
                        t *= 0.5;
                }
            }
            if (!accepted) {
                out.stagnated = true;
                break;
            }
            alpha += t * step;
        }
        finish(out, alpha, it);
        return out;
    }

private:
    void finish(CoreResult& out, const Vector& alpha, int it) const {
        State st = state(alpha);
        out.alpha = alpha;
        out.iterations = it;
        out.grad_norm = st.grad_norm;
        out.residual = st.residual;
        out.objective = objective(alpha);
        if (!out.converged) out.converged = done(st);
    }

    const Matrix& K_;
    double lambda_;
    const Risk& risk_;
    double tol_;
};

void validate_options(const SolverOptions& o) {
    if (o.grad_tol && !(*o.grad_tol > 0.0)) throw ArgumentError("grad_tol must be positive");
    if (o.max_iters < 1) throw ArgumentError("max_iters must be positive");
    if (!(o.damping > 0.0 && o.damping <= 1.0)) throw ArgumentError("damping must lie in (0, 1]");
    for (std::size_t i = 0; i < o.delta_schedule.size(); ++i) {
        double d = o.delta_schedule[i];
        if (!(d > 0.0 && d <= 1.0)) throw ArgumentError("schedule deltas must lie in (0, 1]");
        if (i > 0 && !(d < o.delta_schedule[i - 1])) throw ArgumentError("delta schedule must be strictly decreasing");
    }
}

double lipschitz_of(const AnyLoss& loss) {
    return std::visit(
        [](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Loss>) return loss_constants(l).lip;
            else return pairwise_constants(l).sep_lip;
        },
        loss);
}

bool differentiable(const AnyLoss& loss) {
    return std::visit([](const auto& l) { return is_differentiable(l); }, loss);
}

AnyLoss smoothed(const AnyLoss& loss, double delta) {
    return std::visit([&](const auto& l) -> AnyLoss { return smooth(l, delta); }, loss);
}

// contraction constant numerator: lambda above it makes the fixed-point map contract
std::optional<double> contraction_threshold(const AnyLoss& loss, double kappa) {
    return std::visit(
        [&](const auto& l) -> std::optional<double> {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Loss>) {
                auto c = loss_constants(l);
                if (!c.lip_deriv) return std::nullopt;
                return 0.5 * kappa * kappa * *c.lip_deriv;
            } else {
                auto c = pairwise_constants(l);
                if (!c.d_l) return std::nullopt;
                return kappa * kappa * *c.d_l;
            }
        },
        loss);
}

struct Prepared {
    Support sup;
    std::shared_ptr<const Matrix> K_full;
    Matrix K;
    double kappa = 0.0;
};

Prepared prepare(const DiscreteMeasure& p, const Kernel& k) {
    Prepared pr;
    pr.sup = support_of(p);
    pr.K_full = k.gram(p.space());
    pr.K = restrict(*pr.K_full, pr.sup.idx);
    pr.kappa = std::sqrt(std::max(0.0, pr.K_full->diagonal().maxCoeff()));
    return pr;
}

CoreResult solve_smooth(const Prepared& pr, const DiscreteMeasure& p, double lambda, const AnyLoss& loss,
                        const SolverOptions& opts, double tol, const Vector& start, bool allow_stagnation) {
    return std::visit(
        [&](const auto& l) -> CoreResult {
            using T = std::decay_t<decltype(l)>;
            const Eigen::Index s = static_cast<Eigen::Index>(pr.sup.idx.size());
            auto run = [&](const auto& risk) {
                Core core(pr.K, lambda, risk, tol);
                auto thr = contraction_threshold(loss, pr.kappa);
                bool contract = thr && lambda > *thr;
                CoreResult res;
                if (opts.mode == SolverMode::fixed_point || (opts.mode == SolverMode::automatic && contract)) {
                    res = core.fixed_point(start, opts.damping, opts.max_iters);
                    if (!res.converged && opts.mode == SolverMode::automatic) {
                        auto trace = std::move(res.trace);
                        res = core.newton(res.alpha, opts.max_iters);
                        trace.insert(trace.end(), res.trace.begin(), res.trace.end());
                        res.trace = std::move(trace);
                    }
                } else {
                    res = core.newton(start, opts.max_iters);
                }
                if (!res.converged && !(allow_stagnation && res.stagnated)) {
                    std::ostringstream msg;
                    msg << "solver did not converge (grad_norm " << res.grad_norm << ", residual " << res.residual
                        << ", tolerance " << tol << ")";
                    throw ConvergenceError(msg.str(), res.trace);
                }
                return res;
            };
            if constexpr (std::is_same_v<T, Loss>) return run(ClassicalRisk{p, l, pr.sup.pos, s});
            else return run(PairwiseRisk{p, l, pr.sup.pos, s});
        },
        loss);
}

Vector expand(const Vector& alpha_s, const std::vector<int>& idx, int m) {
    Vector a = Vector::Zero(m);
    for (std::size_t i = 0; i < idx.size(); ++i) a(idx[i]) = alpha_s(static_cast<Eigen::Index>(i));
    return a;
}

SolveReport run_solve(const DiscreteMeasure& p, double lambda, const Kernel& k, const AnyLoss& loss,
                      const SolverOptions& opts) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be positive");
    validate_options(opts);
    Prepared pr = prepare(p, k);
    const int m = p.space().size();
    const Eigen::Index s = static_cast<Eigen::Index>(pr.sup.idx.size());
    double tol = opts.grad_tol ? *opts.grad_tol : default_grad_tol(p, loss);

    Vector start = Vector::Zero(s);
    if (opts.initial_alpha) {
        if (opts.initial_alpha->size() != m) throw ArgumentError("initial alpha must cover the ground space");
        for (Eigen::Index i = 0; i < s; ++i) start(i) = (*opts.initial_alpha)(pr.sup.idx[i]);
    }

    SolveReport rep{Hypothesis{k, p.space(), Vector::Zero(m)}};
    rep.grad_tol = tol;
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(pr.K, Eigen::EigenvaluesOnly);
        double hi = es.eigenvalues().maxCoeff();
        double lo = es.eigenvalues().minCoeff();
        rep.condition_number = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
        if (rep.condition_number > 1e12) rep.warnings.push_back("ill-conditioned Gram matrix");
    }

    CoreResult res;
    if (differentiable(loss)) {
        res = solve_smooth(pr, p, lambda, loss, opts, tol, start, false);
    } else {
        if (!opts.smooth_nonsmooth || opts.delta_schedule.empty())
            throw CapabilityError("loss is not differentiable and smoothing is disabled");
        Vector alpha = start;
        std::vector<double> used;
        std::optional<Vector> prev;
        int iters = 0;
        std::vector<double> trace;
        for (double delta : opts.delta_schedule) {
            AnyLoss ls = smoothed(loss, delta);
            res = solve_smooth(pr, p, lambda, ls, opts, tol, alpha, true);
            iters += res.iterations;
            trace.insert(trace.end(), res.trace.begin(), res.trace.end());
            if (prev) {
                Vector d = res.alpha - *prev;
                rep.cauchy_increments.push_back(std::sqrt(std::max(0.0, d.dot(pr.K * d))));
            }
            if (res.stagnated && !res.converged) rep.warnings.push_back("stagnated at delta " + std::to_string(delta));
            prev = res.alpha;
            alpha = res.alpha;
            used.push_back(delta);
        }
        res.iterations = iters;
        res.trace = std::move(trace);
        rep.delta_schedule_used = used;
    }

    rep.hypothesis.alpha = expand(res.alpha, pr.sup.idx, m);
    rep.objective = res.objective;
    rep.iterations = res.iterations;
    rep.grad_norm = res.grad_norm;
    rep.fixed_point_residual = res.residual;
    rep.mode_used = res.mode;
    rep.contraction_certified = res.contraction_certified;

    double hn = std::sqrt(std::max(0.0, res.alpha.dot(pr.K * res.alpha)));
    Vector v = *pr.K_full * rep.hypothesis.alpha;
    double sup = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
    if (sup > pr.kappa * hn * (1.0 + 1e-9) + 1e-12) rep.warnings.push_back("sup-norm exceeds kappa times H-norm");
    if (std::holds_alternative<Loss>(loss) && hn > lipschitz_of(loss) * pr.kappa / lambda + res.residual + 1e-12)
        rep.warnings.push_back("H-norm exceeds |L|_1 kappa / lambda");
    return rep;
}

// gradient of the risk with respect to the values at every ground-space point
Vector full_gradient(const Vector& v, const DiscreteMeasure& p, const AnyLoss& loss) {
    Vector g = Vector::Zero(v.size());
    std::visit(
        [&](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            const auto& at = p.atoms();
            const auto& w = p.weights();
            if constexpr (std::is_same_v<T, Loss>) {
                for (int a = 0; a < p.size(); ++a) g(at[a].x) += w(a) * loss_derivative(l, at[a].y, v(at[a].x));
            } else {
                for (int a = 0; a < p.size(); ++a)
                    for (int b = 0; b < p.size(); ++b) {
                        if (at[a].x == at[b].x) continue;
                        double c = w(a) * w(b) * rho_derivative(l, (at[a].y - v(at[a].x)) - (at[b].y - v(at[b].x)));
                        g(at[b].x) += c;
                        g(at[a].x) -= c;
                    }
            }
        },
        loss);
    return g;
}

void check_hypothesis(const Hypothesis& f, const DiscreteMeasure& p) {
    require_same_space(f.space, p.space(), "hypothesis and measure");
    if (f.alpha.size() != f.space.size()) throw ArgumentError("coefficients must cover the ground space");
}

double residual_of(const Hypothesis& f, const DiscreteMeasure& p, double lambda, const AnyLoss& loss) {
    check_hypothesis(f, p);
    if (!(lambda > 0.0)) throw ArgumentError("lambda must be positive");
    if (!differentiable(loss)) throw CapabilityError("fixed-point residual needs a differentiable loss");
    auto K = f.kernel.gram(f.space);
    Vector v = *K * f.alpha;
    Vector r = full_gradient(v, p, loss) + 2.0 * lambda * f.alpha;
    return std::sqrt(std::max(0.0, r.dot(*K * r))) / (2.0 * lambda);
}

} // namespace

Vector values(const Hypothesis& f) { return *f.kernel.gram(f.space) * f.alpha; }

double h_norm(const Hypothesis& f) {
    return std::sqrt(std::max(0.0, f.alpha.dot(*f.kernel.gram(f.space) * f.alpha)));
}

double sup_norm(const Hypothesis& f) { return values(f).cwiseAbs().maxCoeff(); }

double default_grad_tol(const DiscreteMeasure& p, const AnyLoss& loss) {
    return 1e-10 * p.size() * std::max(1.0, lipschitz_of(loss));
}

SolveReport solve_svm(const DiscreteMeasure& p, double lambda, const Kernel& k, const Loss& loss,
                      const SolverOptions& opts) {
    return run_solve(p, lambda, k, AnyLoss(loss), opts);
}

SolveReport solve_rpl(const DiscreteMeasure& p, double lambda, const Kernel& k, const PairwiseLoss& ploss,
                      const SolverOptions& opts) {
    return run_solve(p, lambda, k, AnyLoss(ploss), opts);
}

SolveReport solve(const DiscreteMeasure& p, double lambda, const Kernel& k, const AnyLoss& loss,
                  const SolverOptions& opts) {
    return run_solve(p, lambda, k, loss, opts);
}

double risk(const DiscreteMeasure& p, const Loss& loss, const Hypothesis& f) {
    check_hypothesis(f, p);
    Vector v = values(f);
    double acc = 0.0;
    for (int a = 0; a < p.size(); ++a) acc += p.weights()(a) * shifted_value(loss, p.atoms()[a].y, v(p.atoms()[a].x));
    return acc;
}

double pairwise_risk(const DiscreteMeasure& p, const PairwiseLoss& ploss, const Hypothesis& f) {
    check_hypothesis(f, p);
    Vector v = values(f);
    double acc = 0.0;
    const auto& at = p.atoms();
    for (int a = 0; a < p.size(); ++a)
        for (int b = 0; b < p.size(); ++b) {
            if (at[a].x == at[b].x) continue; // diagonal pairs vanish identically
            acc += p.weights()(a) * p.weights()(b) * pairwise_shifted(ploss, at[a].y, at[b].y, v(at[a].x), v(at[b].x));
        }
    return acc;
}

double any_risk(const DiscreteMeasure& p, const AnyLoss& loss, const Hypothesis& f) {
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Loss>) return risk(p, l, f);
            else return pairwise_risk(p, l, f);
        },
        loss);
}

double fixed_point_residual(const Hypothesis& f, const DiscreteMeasure& p, double lambda, const Loss& loss) {
    return residual_of(f, p, lambda, AnyLoss(loss));
}

double fixed_point_residual(const Hypothesis& f, const DiscreteMeasure& p, double lambda, const PairwiseLoss& ploss) {
    return residual_of(f, p, lambda, AnyLoss(ploss));
}

double objective(const Hypothesis& f, const DiscreteMeasure& p, double lambda, const AnyLoss& loss) {
    check_hypothesis(f, p);
    return any_risk(p, loss, f) + lambda * f.alpha.dot(values(f));
}

Vector objective_gradient(const Hypothesis& f, const DiscreteMeasure& p, double lambda, const AnyLoss& loss) {
    check_hypothesis(f, p);
    auto K = f.kernel.gram(f.space);
    Vector v = *K * f.alpha;
    return *K * (full_gradient(v, p, loss) + 2.0 * lambda * f.alpha);
}

} // namespace totstab
