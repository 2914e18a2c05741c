#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "totstab/core.hpp"

namespace totstab {

class Kernel;

// Finite point set; points are the columns of a d x m matrix.
// Copies share identity, so two measures are comparable iff they hold the same space.
class GroundSpace {
public:
    explicit GroundSpace(Matrix points);

    // Tensor grid over the box [lo, hi]; resolution points per axis.
    static GroundSpace grid(const Vector& lo, const Vector& hi, int resolution);

    int size() const { return static_cast<int>(data_->points.cols()); }
    int dim() const { return static_cast<int>(data_->points.rows()); }
    const Matrix& points() const { return data_->points; }
    Eigen::Ref<const Vector> point(int i) const { return data_->points.col(i); }
    double diameter() const { return data_->diameter; }
    std::optional<int> index_of(const Eigen::Ref<const Vector>& x) const;

    bool operator==(const GroundSpace& o) const { return data_ == o.data_; }
    bool operator!=(const GroundSpace& o) const { return data_ != o.data_; }
    const void* id() const { return data_.get(); }

private:
    struct Data {
        Matrix points;
        double diameter = 0.0;
    };
    GroundSpace(Matrix points, bool check_distinct);
    std::shared_ptr<const Data> data_;
};

struct Atom {
    int x = 0;
    double y = 0.0;
    bool operator==(const Atom&) const = default;
};

class DiscreteMeasure {
public:
    DiscreteMeasure(GroundSpace space, std::vector<Atom> atoms, Vector weights);

    static DiscreteMeasure uniform(GroundSpace space, std::vector<Atom> atoms);
    // duplicates are merged and their weights added
    static DiscreteMeasure empirical(GroundSpace space, const std::vector<Atom>& samples);

    const GroundSpace& space() const { return space_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const Vector& weights() const { return weights_; }
    int size() const { return static_cast<int>(atoms_.size()); }

private:
    GroundSpace space_;
    std::vector<Atom> atoms_;
    Vector weights_;
};

struct TvReport {
    double distance = 0.0;
    int atom_union_size = 0;
};

TvReport tv_distance(const DiscreteMeasure& p, const DiscreteMeasure& q);

// Replaces the last ell atoms of the uniform measure p.
DiscreteMeasure contaminate(const DiscreteMeasure& p, int ell, const std::vector<Atom>& replacements);
// Replaces atoms at the given positions.
DiscreteMeasure contaminate(const DiscreteMeasure& p, const std::vector<int>& positions,
                            const std::vector<Atom>& replacements);

// g(a, b) returns kernel-expansion coefficients over the ground space, or nullopt if undefined.
using PairField = std::function<std::optional<Vector>(const Atom&, const Atom&)>;

struct BochnerCheck {
    double lhs = 0.0;
    double rhs = 0.0;
};

BochnerCheck bochner_tv_check(const PairField& g, const DiscreteMeasure& p, const DiscreteMeasure& q,
                              const Kernel& k);

void require_same_space(const GroundSpace& a, const GroundSpace& b, const char* what);

} // namespace totstab
