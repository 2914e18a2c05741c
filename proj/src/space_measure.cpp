#include "totstab/space_measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "totstab/kernels.hpp"

namespace totstab {

namespace {

double max_pairwise_distance(const Matrix& pts) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < pts.cols(); ++i)
        for (Eigen::Index j = i + 1; j < pts.cols(); ++j)
            best = std::max(best, (pts.col(i) - pts.col(j)).squaredNorm());
    return std::sqrt(best);
}

bool atom_less(const Atom& a, const Atom& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
}

} // namespace

GroundSpace::GroundSpace(Matrix points) : GroundSpace(std::move(points), true) {}

GroundSpace::GroundSpace(Matrix points, bool check_distinct) {
    if (points.cols() == 0 || points.rows() == 0) throw ArgumentError("ground space must be nonempty");
    if (!points.allFinite()) throw ArgumentError("ground space points must be finite");
    if (check_distinct) {
        std::vector<Eigen::Index> order(points.cols());
        std::iota(order.begin(), order.end(), 0);
        auto lex = [&](Eigen::Index a, Eigen::Index b) {
            for (Eigen::Index r = 0; r < points.rows(); ++r)
                if (points(r, a) != points(r, b)) return points(r, a) < points(r, b);
            return false;
        };
        std::sort(order.begin(), order.end(), lex);
        for (std::size_t i = 1; i < order.size(); ++i)
            if (points.col(order[i]) == points.col(order[i - 1])) {
                std::ostringstream msg;
                msg << "duplicate points " << order[i - 1] << " and " << order[i];
                throw ArgumentError(msg.str());
            }
    }
    auto d = std::make_shared<Data>();
    d->diameter = max_pairwise_distance(points);
    d->points = std::move(points);
    data_ = std::move(d);
}

GroundSpace GroundSpace::grid(const Vector& lo, const Vector& hi, int resolution) {
    if (lo.size() != hi.size() || lo.size() == 0) throw ArgumentError("grid box bounds must share a nonzero dimension");
    if (resolution < 1) throw ArgumentError("grid resolution must be positive");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        if (!(lo(i) < hi(i)) && !(resolution == 1 && lo(i) <= hi(i)))
            throw ArgumentError("grid box needs lo < hi on every axis");
    const auto d = lo.size();
    double total = std::pow(static_cast<double>(resolution), static_cast<double>(d));
    if (total > 1e4) throw ArgumentError("grid would have more than 10000 points");
    const auto m = static_cast<Eigen::Index>(std::llround(total));
    Matrix pts(d, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        Eigen::Index rest = c;
        for (Eigen::Index a = 0; a < d; ++a) {
            Eigen::Index k = rest % resolution;
            rest /= resolution;
            pts(a, c) = resolution == 1 ? lo(a) : lo(a) + (hi(a) - lo(a)) * static_cast<double>(k) / (resolution - 1);
        }
    }
    return GroundSpace(std::move(pts), false);
}

std::optional<int> GroundSpace::index_of(const Eigen::Ref<const Vector>& x) const {
    if (x.size() != dim()) return std::nullopt;
    for (int i = 0; i < size(); ++i)
        if (data_->points.col(i) == x) return i;
    return std::nullopt;
}

void require_same_space(const GroundSpace& a, const GroundSpace& b, const char* what) {
    if (a != b) throw DomainMismatchError(std::string(what) + ": objects live on different ground spaces");
}

DiscreteMeasure::DiscreteMeasure(GroundSpace space, std::vector<Atom> atoms, Vector weights)
    : space_(std::move(space)), atoms_(std::move(atoms)), weights_(std::move(weights)) {
    if (atoms_.empty()) throw ArgumentError("measure needs at least one atom");
    if (static_cast<Eigen::Index>(atoms_.size()) != weights_.size())
        throw ArgumentError("atoms and weights differ in length");
    for (const Atom& a : atoms_) {
        if (a.x < 0 || a.x >= space_.size()) throw ArgumentError("atom x-index outside the ground space");
        if (!std::isfinite(a.y)) throw ArgumentError("atom y-value must be finite");
    }
    if (!weights_.allFinite() || (weights_.array() < 0.0).any()) throw ArgumentError("weights must be nonnegative");
    if (std::abs(weights_.sum() - 1.0) > 1e-12) throw ArgumentError("weights must sum to 1");
    std::vector<Atom> sorted = atoms_;
    std::sort(sorted.begin(), sorted.end(), atom_less);
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ArgumentError("atoms must be distinct");
}

DiscreteMeasure DiscreteMeasure::uniform(GroundSpace space, std::vector<Atom> atoms) {
    const auto n = static_cast<Eigen::Index>(atoms.size());
    if (n == 0) throw ArgumentError("measure needs at least one atom");
    return DiscreteMeasure(std::move(space), std::move(atoms), Vector::Constant(n, 1.0 / n));
}

DiscreteMeasure DiscreteMeasure::empirical(GroundSpace space, const std::vector<Atom>& samples) {
    if (samples.empty()) throw ArgumentError("measure needs at least one atom");
    std::vector<Atom> atoms;
    std::vector<double> counts;
    for (const Atom& s : samples) {
        auto it = std::find(atoms.begin(), atoms.end(), s);
        if (it == atoms.end()) {
            atoms.push_back(s);
            counts.push_back(1.0);
        } else {
            counts[it - atoms.begin()] += 1.0;
        }
    }
    Vector w = Eigen::Map<Vector>(counts.data(), static_cast<Eigen::Index>(counts.size())) /
               static_cast<double>(samples.size());
    return DiscreteMeasure(std::move(space), std::move(atoms), std::move(w));
}

TvReport tv_distance(const DiscreteMeasure& p, const DiscreteMeasure& q) {
    require_same_space(p.space(), q.space(), "tv_distance");
    struct Entry {
        Atom atom;
        double mass;
    };
    std::vector<Entry> all;
    all.reserve(p.atoms().size() + q.atoms().size());
    for (int i = 0; i < p.size(); ++i) all.push_back({p.atoms()[i], p.weights()(i)});
    for (int i = 0; i < q.size(); ++i) all.push_back({q.atoms()[i], -q.weights()(i)});
    std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return atom_less(a.atom, b.atom); });

    TvReport out;
    double l1 = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        double diff = all[i].mass;
        std::size_t j = i + 1;
        while (j < all.size() && all[j].atom.x == all[i].atom.x && all[j].atom.y - all[j - 1].atom.y < 1e-12) {
            diff += all[j].mass;
            ++j;
        }
        l1 += std::abs(diff);
        ++out.atom_union_size;
        i = j;
    }
    out.distance = std::min(1.0, 0.5 * l1);
    return out;
}

DiscreteMeasure contaminate(const DiscreteMeasure& p, int ell, const std::vector<Atom>& replacements) {
    if (ell < 0) throw ArgumentError("ell must be nonnegative");
    if (ell > p.size()) throw ArgumentError("ell exceeds the number of atoms");
    std::vector<int> positions(ell);
    std::iota(positions.begin(), positions.end(), p.size() - ell);
    return contaminate(p, positions, replacements);
}

DiscreteMeasure contaminate(const DiscreteMeasure& p, const std::vector<int>& positions,
                            const std::vector<Atom>& replacements) {
    const int n = p.size();
    const int ell = static_cast<int>(positions.size());
    if (ell > n) throw ArgumentError("ell exceeds the number of atoms");
    if (replacements.size() != positions.size()) throw ArgumentError("need exactly ell replacement atoms");
    if (((p.weights().array() - 1.0 / n).abs() > 1e-12).any())
        throw ArgumentError("contamination needs a uniform measure");
    std::vector<Atom> samples = p.atoms();
    std::vector<bool> used(n, false);
    for (int k = 0; k < ell; ++k) {
        int pos = positions[k];
        if (pos < 0 || pos >= n || used[pos]) throw ArgumentError("replacement positions must be distinct atom positions");
        used[pos] = true;
        const Atom& r = replacements[k];
        if (r.x < 0 || r.x >= p.space().size() || !std::isfinite(r.y))
            throw ArgumentError("replacement atom outside the ground space");
        samples[pos] = r;
    }
    return DiscreteMeasure::empirical(p.space(), samples);
}

BochnerCheck bochner_tv_check(const PairField& g, const DiscreteMeasure& p, const DiscreteMeasure& q,
                              const Kernel& k) {
    require_same_space(p.space(), q.space(), "bochner_tv_check");
    const GroundSpace& space = p.space();
    auto K = gram(k, space);
    const Eigen::Index m = space.size();

    auto value = [&](const Atom& a, const Atom& b) {
        auto v = g(a, b);
        if (!v) throw ArgumentError("g is undefined on a required atom pair");
        if (v->size() != m) throw ArgumentError("g value has the wrong number of coefficients");
        return *v;
    };
    auto hnorm = [&](const Vector& c) { return std::sqrt(std::max(0.0, c.dot(*K * c))); };

    Vector diff = Vector::Zero(m);
    double sup = 0.0;
    for (int a = 0; a < p.size(); ++a)
        for (int b = 0; b < p.size(); ++b) {
            Vector v = value(p.atoms()[a], p.atoms()[b]);
            diff += p.weights()(a) * p.weights()(b) * v;
            sup = std::max(sup, hnorm(v));
        }
    for (int a = 0; a < q.size(); ++a)
        for (int b = 0; b < q.size(); ++b) {
            Vector v = value(q.atoms()[a], q.atoms()[b]);
            diff -= q.weights()(a) * q.weights()(b) * v;
            sup = std::max(sup, hnorm(v));
        }
    // total variation norm of P - Q is twice the distance
    return {hnorm(diff), 2.0 * sup * 2.0 * tv_distance(p, q).distance};
}

} // namespace totstab
