#pragma once

#include <cmath>
#include <memory>
#include <variant>
#include <vector>

#include "totstab/core.hpp"
#include "totstab/space_measure.hpp"

namespace totstab {

// Generator h(r) = exp(-r^2) and the Wendland function (1-r)_+^4 (4r+1).
template <typename Scalar>
Scalar gaussian_generator(Scalar r) {
    using std::exp;
    return exp(-r * r);
}

template <typename Scalar>
Scalar wendland(Scalar r) {
    if (r >= Scalar(1)) return Scalar(0);
    Scalar u = Scalar(1) - r;
    return u * u * u * u * (Scalar(4) * r + Scalar(1));
}

// sup_r |d/dr exp(-r^2)| = sqrt(2/e)
double gaussian_generator_lipschitz();

struct GaussianRbf {
    double gamma = 1.0;
};

struct InhomogeneousGaussian {
    Vector w;
    double gamma = 1.0;
};

// Leaves sit at depth 1 and weight coordinates; inner nodes weight their children.
struct HierarchicalNode {
    std::vector<int> coords;
    Vector weights;
    std::vector<HierarchicalNode> children;
    bool leaf() const { return children.empty(); }
};

struct HierarchicalParams {
    int dim = 0;
    std::vector<double> gammas; // gammas[j-1] is the bandwidth at depth j
    HierarchicalNode root;

    int depth() const { return static_cast<int>(gammas.size()); }

    // Flat form: each index set spawns one branch; layers[0][i] weights the coordinates of
    // index set i, layers[j-1][i] (length 1) is the weight at depth j, top weights the branches.
    static HierarchicalParams layered(int dim, const std::vector<std::vector<int>>& index_sets,
                                      const std::vector<std::vector<Vector>>& layers, const Vector& top,
                                      const std::vector<double>& gammas);

    // Frobenius norm of all weight vectors at depth j.
    double layer_norm(int j) const;
};

struct HierarchicalGaussian {
    HierarchicalParams params;
};

struct CompactRbf {
    double gamma = 1.0;
};

struct LinearKernel {};

struct GramBacked {
    GroundSpace space;
    Matrix gram;
};

class Kernel {
public:
    using Variant = std::variant<GaussianRbf, InhomogeneousGaussian, HierarchicalGaussian, CompactRbf,
                                 LinearKernel, GramBacked>;

    Kernel(Variant v);
    Kernel(GaussianRbf v) : Kernel(Variant(std::move(v))) {}
    Kernel(InhomogeneousGaussian v) : Kernel(Variant(std::move(v))) {}
    Kernel(HierarchicalGaussian v) : Kernel(Variant(std::move(v))) {}
    Kernel(CompactRbf v) : Kernel(Variant(std::move(v))) {}
    Kernel(LinearKernel v) : Kernel(Variant(std::move(v))) {}
    Kernel(GramBacked v) : Kernel(Variant(std::move(v))) {}

    const Variant& variant() const;
    // required input dimension, or -1 if any
    int dim() const;
    bool gaussian_family() const;

    double operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp) const;

    std::shared_ptr<const Matrix> gram(const GroundSpace& space) const;

private:
    struct State;
    std::shared_ptr<State> state_;
};

double eval(const Kernel& k, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp);
std::shared_ptr<const Matrix> gram(const Kernel& k, const GroundSpace& space);

// sup_x sqrt(k(x,x)) over the space
double sup_norm(const Kernel& k, const GroundSpace& space);

double sup_distance(const Kernel& k1, const Kernel& k2, const GroundSpace& space);

double min_eigenvalue(const Matrix& K);
bool strictly_pd(const Matrix& K);

// sup_x ||k1(.,x) - k2(.,x)||_{H1}; needs a strictly pd Gram of k1.
double h1_distance(const Kernel& k1, const Kernel& k2, const GroundSpace& space);

bool rkhs_inclusion_check(const Kernel& k1, const Kernel& k2, const GroundSpace& space);

double gaussian_bandwidth_bound(double gamma1, double gamma2, double a, double diam);

double hierarchical_perturbation_bound(const HierarchicalParams& p1, const HierarchicalParams& p2, double diam);

} // namespace totstab
