#include "totstab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

namespace totstab {

namespace {

constexpr double kNormSlack = 1e-12;

void collect_layers(const HierarchicalNode& node, int level, std::vector<double>& sq) {
    sq[level - 1] += node.weights.squaredNorm();
    for (const auto& c : node.children) collect_layers(c, level - 1, sq);
}

void validate_node(const HierarchicalNode& node, int level, int dim) {
    if (level == 1) {
        if (!node.leaf()) throw ArgumentError("hierarchical leaves must sit exactly at depth 1");
        if (node.coords.empty()) throw ArgumentError("index sets must be nonempty");
        if (node.weights.size() != static_cast<Eigen::Index>(node.coords.size()))
            throw ArgumentError("leaf weights must match its index set");
        for (int c : node.coords)
            if (c < 0 || c >= dim) throw ArgumentError("index set references a coordinate outside the input dimension");
    } else {
        if (node.leaf()) throw ArgumentError("hierarchical leaves must sit exactly at depth 1");
        if (!node.coords.empty()) throw ArgumentError("inner hierarchical nodes carry no coordinates");
        if (node.weights.size() != static_cast<Eigen::Index>(node.children.size()))
            throw ArgumentError("inner weights must match the number of children");
        for (const auto& c : node.children) validate_node(c, level - 1, dim);
    }
    if (!node.weights.allFinite()) throw ArgumentError("hierarchical weights must be finite");
    if (node.weights.squaredNorm() > 1.0 + kNormSlack)
        throw ArgumentError("hierarchical weights must satisfy sum w^2 <= 1");
}

void validate(const HierarchicalParams& p) {
    if (p.depth() < 1) throw ArgumentError("hierarchical depth must be at least 1");
    if (p.dim < 1) throw ArgumentError("hierarchical kernel needs a positive input dimension");
    for (double g : p.gammas)
        if (!(g > 0.0) || !std::isfinite(g)) throw ArgumentError("bandwidths must be positive");
    validate_node(p.root, p.depth(), p.dim);
    for (int j = 1; j <= p.depth(); ++j)
        if (p.layer_norm(j) > 1.0 + kNormSlack) throw ArgumentError("hierarchical weight layers must have norm <= 1");
}

double eval_node(const HierarchicalNode& node, int level, const std::vector<double>& gammas,
                 const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp) {
    double g = gammas[level - 1];
    double u = 0.0;
    if (node.leaf()) {
        for (std::size_t i = 0; i < node.coords.size(); ++i) {
            double d = x(node.coords[i]) - xp(node.coords[i]);
            u += node.weights(i) * node.weights(i) * d * d;
        }
    } else {
        for (std::size_t i = 0; i < node.children.size(); ++i)
            u += node.weights(i) * node.weights(i) * (1.0 - eval_node(node.children[i], level - 1, gammas, x, xp));
    }
    return std::exp(-2.0 * u / (g * g));
}

void same_shape(const HierarchicalNode& a, const HierarchicalNode& b) {
    if (a.coords != b.coords || a.children.size() != b.children.size() || a.weights.size() != b.weights.size())
        throw ArgumentError("hierarchical parameters differ in structure");
    for (std::size_t i = 0; i < a.children.size(); ++i) same_shape(a.children[i], b.children[i]);
}

void diff_layers(const HierarchicalNode& a, const HierarchicalNode& b, int level, std::vector<double>& sq) {
    sq[level - 1] += (a.weights - b.weights).squaredNorm();
    for (std::size_t i = 0; i < a.children.size(); ++i) diff_layers(a.children[i], b.children[i], level - 1, sq);
}

void check_dim(const Kernel& k, Eigen::Index d) {
    int kd = k.dim();
    if (kd >= 0 && kd != d) {
        std::ostringstream msg;
        msg << "kernel expects dimension " << kd << ", got " << d;
        throw ArgumentError(msg.str());
    }
}

} // namespace

double gaussian_generator_lipschitz() { return std::sqrt(2.0 / std::exp(1.0)); }

HierarchicalParams HierarchicalParams::layered(int dim, const std::vector<std::vector<int>>& index_sets,
                                               const std::vector<std::vector<Vector>>& layers, const Vector& top,
                                               const std::vector<double>& gammas) {
    HierarchicalParams p;
    p.dim = dim;
    p.gammas = gammas;
    const int m = static_cast<int>(gammas.size());
    if (m < 1) throw ArgumentError("hierarchical depth must be at least 1");
    if (index_sets.empty()) throw ArgumentError("need at least one index set");
    if (static_cast<int>(layers.size()) != m - 1) throw ArgumentError("need depth - 1 weight layers");
    if (m == 1) {
        for (const auto& s : index_sets) p.root.coords.insert(p.root.coords.end(), s.begin(), s.end());
        p.root.weights = top;
        validate(p);
        return p;
    }
    const std::size_t ell = index_sets.size();
    for (const auto& layer : layers)
        if (layer.size() != ell) throw ArgumentError("each weight layer needs one entry per index set");
    p.root.weights = top;
    for (std::size_t i = 0; i < ell; ++i) {
        HierarchicalNode node;
        node.coords = index_sets[i];
        node.weights = layers[0][i];
        for (int j = 2; j <= m - 1; ++j) {
            HierarchicalNode up;
            up.weights = layers[j - 1][i];
            up.children.push_back(std::move(node));
            node = std::move(up);
        }
        p.root.children.push_back(std::move(node));
    }
    validate(p);
    return p;
}

double HierarchicalParams::layer_norm(int j) const {
    std::vector<double> sq(depth(), 0.0);
    collect_layers(root, depth(), sq);
    return std::sqrt(sq.at(j - 1));
}

struct Kernel::State {
    Variant v;
    std::mutex mu;
    std::vector<std::pair<GroundSpace, std::shared_ptr<const Matrix>>> cache;
};

Kernel::Kernel(Variant v) : state_(std::make_shared<State>()) {
    std::visit(
        [](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, GaussianRbf> || std::is_same_v<T, CompactRbf>) {
                if (!(k.gamma > 0.0) || !std::isfinite(k.gamma)) throw ArgumentError("bandwidth must be positive");
            } else if constexpr (std::is_same_v<T, InhomogeneousGaussian>) {
                if (!(k.gamma > 0.0) || !std::isfinite(k.gamma)) throw ArgumentError("bandwidth must be positive");
                if (k.w.size() == 0 || !k.w.allFinite()) throw ArgumentError("inhomogeneous weights must be finite");
            } else if constexpr (std::is_same_v<T, HierarchicalGaussian>) {
                validate(k.params);
            } else if constexpr (std::is_same_v<T, GramBacked>) {
                if (k.gram.rows() != k.space.size() || k.gram.cols() != k.space.size())
                    throw ArgumentError("Gram matrix does not match its space");
                if (!k.gram.allFinite()) throw ArgumentError("Gram matrix must be finite");
                if ((k.gram - k.gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, k.gram.cwiseAbs().maxCoeff()))
                    throw ArgumentError("Gram matrix must be symmetric");
                double tr = k.gram.trace();
                if (min_eigenvalue(k.gram) < -1e-9 * std::max(tr, 1e-300))
                    throw ArgumentError("Gram matrix must be positive semidefinite");
            }
        },
        v);
    state_->v = std::move(v);
}

const Kernel::Variant& Kernel::variant() const { return state_->v; }

int Kernel::dim() const {
    return std::visit(
        [](const auto& k) -> int {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, InhomogeneousGaussian>) return static_cast<int>(k.w.size());
            else if constexpr (std::is_same_v<T, HierarchicalGaussian>) return k.params.dim;
            else if constexpr (std::is_same_v<T, GramBacked>) return k.space.dim();
            else return -1;
        },
        state_->v);
}

bool Kernel::gaussian_family() const {
    const auto& v = state_->v;
    return std::holds_alternative<GaussianRbf>(v) || std::holds_alternative<InhomogeneousGaussian>(v) ||
           std::holds_alternative<HierarchicalGaussian>(v);
}

double Kernel::operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp) const {
    if (x.size() != xp.size()) throw ArgumentError("points differ in dimension");
    check_dim(*this, x.size());
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, GaussianRbf>) {
                return gaussian_generator((x - xp).norm() / k.gamma);
            } else if constexpr (std::is_same_v<T, InhomogeneousGaussian>) {
                double u = (k.w.array().square() * (x - xp).array().square()).sum();
                return std::exp(-2.0 * u / (k.gamma * k.gamma));
            } else if constexpr (std::is_same_v<T, HierarchicalGaussian>) {
                return eval_node(k.params.root, k.params.depth(), k.params.gammas, x, xp);
            } else if constexpr (std::is_same_v<T, CompactRbf>) {
                if (x.size() > 3) throw ArgumentError("compact RBF is positive definite only for d <= 3");
                return wendland((x - xp).norm() / k.gamma);
            } else if constexpr (std::is_same_v<T, LinearKernel>) {
                return x.dot(xp);
            } else {
                auto i = k.space.index_of(x);
                auto j = k.space.index_of(xp);
                if (!i || !j) throw ArgumentError("Gram-backed kernel evaluated outside its space");
                return k.gram(*i, *j);
            }
        },
        state_->v);
}

std::shared_ptr<const Matrix> Kernel::gram(const GroundSpace& space) const {
    std::lock_guard<std::mutex> lock(state_->mu);
    for (const auto& [s, K] : state_->cache)
        if (s == space) return K;
    check_dim(*this, space.dim());
    auto K = std::make_shared<Matrix>(space.size(), space.size());
    if (const auto* gb = std::get_if<GramBacked>(&state_->v); gb && gb->space == space) {
        *K = gb->gram;
    } else {
        for (int i = 0; i < space.size(); ++i)
            for (int j = 0; j <= i; ++j) {
                double v = (*this)(space.point(i), space.point(j));
                (*K)(i, j) = v;
                (*K)(j, i) = v;
            }
    }
    std::shared_ptr<const Matrix> out = std::move(K);
    state_->cache.emplace_back(space, out);
    return out;
}

double eval(const Kernel& k, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp) { return k(x, xp); }

std::shared_ptr<const Matrix> gram(const Kernel& k, const GroundSpace& space) { return k.gram(space); }

double sup_norm(const Kernel& k, const GroundSpace& space) {
    double best = 0.0;
    for (int i = 0; i < space.size(); ++i) best = std::max(best, k(space.point(i), space.point(i)));
    return std::sqrt(best);
}

double sup_distance(const Kernel& k1, const Kernel& k2, const GroundSpace& space) {
    check_dim(k1, space.dim());
    check_dim(k2, space.dim());
    if (space.size() <= 4096) return (*k1.gram(space) - *k2.gram(space)).cwiseAbs().maxCoeff();
    double best = 0.0;
    for (int i = 0; i < space.size(); ++i)
        for (int j = 0; j <= i; ++j)
            best = std::max(best, std::abs(k1(space.point(i), space.point(j)) - k2(space.point(i), space.point(j))));
    return best;
}

double min_eigenvalue(const Matrix& K) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

bool strictly_pd(const Matrix& K) { return min_eigenvalue(K) > 1e-10 * K.trace(); }

double h1_distance(const Kernel& k1, const Kernel& k2, const GroundSpace& space) {
    auto K1 = k1.gram(space);
    auto K2 = k2.gram(space);
    double lmin = min_eigenvalue(*K1);
    if (!(lmin > 1e-10 * K1->trace())) {
        std::ostringstream msg;
        msg << "Gram matrix of k1 is numerically singular (min eigenvalue " << lmin << ")";
        throw PreconditionError(msg.str());
    }
    Eigen::LLT<Matrix> llt(*K1);
    Matrix D = *K1 - *K2;
    Matrix Z = llt.matrixL().solve(D);
    return std::sqrt(Z.colwise().squaredNorm().maxCoeff());
}

bool rkhs_inclusion_check(const Kernel& k1, const Kernel& k2, const GroundSpace& space) {
    auto K1 = k1.gram(space);
    auto K2 = k2.gram(space);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(*K1);
    for (Eigen::Index j = 0; j < K2->cols(); ++j) {
        Vector c = K2->col(j);
        double n = c.norm();
        if (n == 0.0) continue;
        Vector proj = *K1 * cod.solve(c);
        if ((c - proj).norm() >= 1e-9 * n) return false;
    }
    return true;
}

double gaussian_bandwidth_bound(double gamma1, double gamma2, double a, double diam) {
    if (!(a > 0.0)) throw ArgumentError("a must be positive");
    if (a > std::min(gamma1, gamma2)) throw ArgumentError("a must not exceed either bandwidth");
    if (!(diam >= 0.0)) throw ArgumentError("diameter must be nonnegative");
    return gaussian_generator_lipschitz() * diam * std::abs(gamma2 - gamma1) / (a * a);
}

double hierarchical_perturbation_bound(const HierarchicalParams& p1, const HierarchicalParams& p2, double diam) {
    validate(p1);
    validate(p2);
    if (p1.depth() != p2.depth() || p1.dim != p2.dim || p1.gammas != p2.gammas)
        throw ArgumentError("hierarchical parameters differ in depth, dimension or bandwidths");
    same_shape(p1.root, p2.root);
    if (!(diam >= 0.0)) throw ArgumentError("diameter must be nonnegative");
    const int m = p1.depth();
    std::vector<double> sq(m, 0.0);
    diff_layers(p1.root, p2.root, m, sq);
    double g1 = p1.gammas[0];
    double delta = 4.0 / (g1 * g1) * diam * diam * std::sqrt(sq[0]);
    for (int j = 2; j <= m; ++j) {
        double g = p1.gammas[j - 1];
        delta = 4.0 / (g * g) * std::sqrt(sq[j - 1]) + 2.0 / (g * g) * delta;
    }
    return delta;
}

} // namespace totstab
