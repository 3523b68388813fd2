#pragma once

// 101-colorability of ray sets.
//
// A valuation gives every ray 0 or 1 such that each orthogonal triple has
// exactly one 0 and no orthogonal pair has two. The search is complete
// DPLL-style backtracking with unit propagation; an Uncolorable verdict
// means the whole tree was refuted.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "grwlab/errors.hpp"

namespace grwlab::ks {

using Vec3 = Eigen::Vector3d;

/// p + q * sqrt(2) with integer p, q.
struct Surd {
    long long p = 0;
    long long q = 0;

    double value() const { return static_cast<double>(p) + static_cast<double>(q) * std::sqrt(2.0); }
    bool is_zero() const { return p == 0 && q == 0; }

    int sign() const {
        const int sp = (p > 0) - (p < 0), sq = (q > 0) - (q < 0);
        if (sq == 0) return sp;
        if (sp == 0 || sp == sq) return sq;
        // opposite signs: compare p^2 with 2 q^2
        const long long lhs = p * p, rhs = 2 * q * q;
        if (lhs == rhs) return 0;
        return lhs > rhs ? sp : sq;
    }

    friend Surd operator+(Surd a, Surd b) { return {a.p + b.p, a.q + b.q}; }
    friend Surd operator-(Surd a, Surd b) { return {a.p - b.p, a.q - b.q}; }
    friend Surd operator*(Surd a, Surd b) { return {a.p * b.p + 2 * a.q * b.q, a.p * b.q + a.q * b.p}; }
    Surd operator-() const { return {-p, -q}; }
};

using ExactVec = std::array<Surd, 3>;

inline Surd exact_dot(const ExactVec& a, const ExactVec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline ExactVec exact_cross(const ExactVec& a, const ExactVec& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// A direction up to sign: unit vector whose first nonzero component is
/// positive. Rays read from symbolic components keep their exact form so
/// orthogonality is decided without rounding.
class Ray {
public:
    static Ray from_vector(const Vec3& v) {
        const double n = v.norm();
        if (!(n > 0.0)) throw PreconditionError("ray must be non-zero");
        Ray r;
        r.v_ = v / n;
        for (int i = 0; i < 3; ++i) {
            if (std::abs(r.v_(i)) <= 1e-12) continue;
            if (r.v_(i) < 0.0) r.v_ = -r.v_;
            break;
        }
        return r;
    }

    static Ray from_exact(ExactVec e) {
        int s = 0;
        for (const Surd& c : e)
            if ((s = c.sign()) != 0) break;
        if (s == 0) throw PreconditionError("ray must be non-zero");
        if (s < 0)
            for (Surd& c : e) c = -c;
        Ray r = from_vector(Vec3(e[0].value(), e[1].value(), e[2].value()));
        r.exact_ = e;
        return r;
    }

    const Vec3& vector() const noexcept { return v_; }
    const std::optional<ExactVec>& exact() const noexcept { return exact_; }

private:
    Vec3 v_ = Vec3::UnitZ();
    std::optional<ExactVec> exact_;
};

inline bool orthogonal(const Ray& a, const Ray& b, double tol) {
    if (a.exact() && b.exact()) return exact_dot(*a.exact(), *b.exact()).is_zero();
    return std::abs(a.vector().dot(b.vector())) <= tol;
}

inline bool same_direction(const Ray& a, const Ray& b, double tol) {
    if (a.exact() && b.exact()) {
        const ExactVec c = exact_cross(*a.exact(), *b.exact());
        return c[0].is_zero() && c[1].is_zero() && c[2].is_zero();
    }
    return a.vector().cross(b.vector()).norm() <= tol;
}

namespace detail {

inline bool parse_integer(std::string_view s, long long& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline bool parse_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

/// Integer literal -> exact; decimal -> double; `a+b*r2` family -> exact.
struct Component {
    double value = 0.0;
    std::optional<Surd> exact;
};

inline std::optional<Component> parse_component(std::string_view tok) {
    Component c;
    long long ip = 0;
    if (parse_integer(tok, ip)) {
        c.exact = Surd{ip, 0};
        c.value = static_cast<double>(ip);
        return c;
    }
    constexpr std::string_view root = "r2";
    if (tok.size() >= root.size() && tok.substr(tok.size() - root.size()) == root) {
        std::string_view body = tok.substr(0, tok.size() - root.size());
        long long b = 1;
        if (!body.empty() && body.back() == '*') {
            body.remove_suffix(1);
            std::size_t start = body.size();
            while (start > 0 && std::isdigit(static_cast<unsigned char>(body[start - 1]))) --start;
            if (start == body.size() || !parse_integer(body.substr(start), b)) return std::nullopt;
            body = body.substr(0, start);
        }
        long long a = 0;
        int sign = 1;
        if (!body.empty()) {
            const char last = body.back();
            if (last != '+' && last != '-') return std::nullopt;
            sign = last == '-' ? -1 : 1;
            body.remove_suffix(1);
            if (!body.empty() && !parse_integer(body, a)) return std::nullopt;
        }
        c.exact = Surd{a, sign * b};
        c.value = c.exact->value();
        return c;
    }
    double d = 0.0;
    if (parse_double(tok, d)) {
        c.value = d;
        return c;
    }
    return std::nullopt;
}

}  // namespace detail

class RaySet {
public:
    static constexpr double kDefaultTolerance = 1e-9;
    static constexpr std::size_t kMaxRays = 200;

    explicit RaySet(double tolerance = kDefaultTolerance) : tol_(tolerance) {}

    /// Adds a ray unless an equal one is present; returns whether it was added.
    bool add(const Ray& r) {
        for (const Ray& existing : rays_)
            if (same_direction(existing, r, tol_)) return false;
        rays_.push_back(r);
        return true;
    }

    std::size_t size() const noexcept { return rays_.size(); }
    const Ray& operator[](std::size_t i) const { return rays_.at(i); }
    const std::vector<Ray>& rays() const noexcept { return rays_; }
    double tolerance() const noexcept { return tol_; }

    /// One ray per line, three components each: integer, decimal, or `a+b*r2`.
    /// Lines starting with '#' and blank lines are skipped.
    static RaySet parse(std::istream& in, double tolerance = kDefaultTolerance) {
        RaySet set(tolerance);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            std::istringstream ls(line);
            std::vector<std::string> toks;
            for (std::string t; ls >> t;) toks.push_back(t);
            if (toks.size() != 3)
                throw PreconditionError("ray file line " + std::to_string(lineno) + ": expected 3 components");
            ExactVec exact{};
            Vec3 v;
            bool all_exact = true;
            for (int i = 0; i < 3; ++i) {
                const auto comp = detail::parse_component(toks[static_cast<std::size_t>(i)]);
                if (!comp)
                    throw PreconditionError("ray file line " + std::to_string(lineno) + ": cannot parse component '" +
                                            toks[static_cast<std::size_t>(i)] + "'");
                v(i) = comp->value;
                if (comp->exact)
                    exact[static_cast<std::size_t>(i)] = *comp->exact;
                else
                    all_exact = false;
            }
            if (v.norm() == 0.0) throw PreconditionError("ray file line " + std::to_string(lineno) + ": zero vector");
            set.add(all_exact ? Ray::from_exact(exact) : Ray::from_vector(v));
        }
        return set;
    }

    static RaySet load(const std::string& path, double tolerance = kDefaultTolerance) {
        std::ifstream f(path);
        if (!f) throw PreconditionError("cannot open ray file '" + path + "'");
        return parse(f, tolerance);
    }

    /// All rays rotated by r (exact forms are dropped).
    RaySet rotated(const Eigen::Matrix3d& r) const {
        RaySet out(tol_);
        for (const Ray& ray : rays_) out.add(Ray::from_vector(r * ray.vector()));
        return out;
    }

    /// rays reordered so that out[i] = this[perm[i]].
    RaySet permuted(const std::vector<std::size_t>& perm) const {
        RaySet out(tol_);
        for (std::size_t i : perm) out.rays_.push_back(rays_.at(i));
        return out;
    }

    RaySet subset(const std::vector<std::size_t>& idx) const { return permuted(idx); }

private:
    std::vector<Ray> rays_;
    double tol_;
};

struct OrthogonalityStructure {
    std::size_t ray_count = 0;
    std::vector<std::array<std::size_t, 2>> pairs;    // i < j
    std::vector<std::array<std::size_t, 3>> triples;  // i < j < k
};

inline OrthogonalityStructure build_structure(const RaySet& rays) {
    const std::size_t n = rays.size();
    std::vector<std::vector<bool>> orth(n, std::vector<bool>(n, false));
    OrthogonalityStructure s;
    s.ray_count = n;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (orthogonal(rays[i], rays[j], rays.tolerance())) {
                orth[i][j] = orth[j][i] = true;
                s.pairs.push_back({i, j});
            }
    for (const auto& [i, j] : s.pairs)
        for (std::size_t k = j + 1; k < n; ++k)
            if (orth[i][k] && orth[j][k]) s.triples.push_back({i, j, k});
    return s;
}

/// Partial or total map ray -> {0, 1}; -1 marks unassigned.
class Assignment {
public:
    Assignment() = default;
    explicit Assignment(std::size_t n) : v_(n, -1) {}
    Assignment(std::initializer_list<int> values) : v_(values.begin(), values.end()) {}

    std::size_t size() const noexcept { return v_.size(); }
    std::optional<int> get(std::size_t i) const {
        if (v_.at(i) < 0) return std::nullopt;
        return v_[i];
    }
    void set(std::size_t i, int value) {
        if (value != 0 && value != 1) throw PreconditionError("assignment values must be 0 or 1");
        v_.at(i) = static_cast<signed char>(value);
    }
    void clear(std::size_t i) { v_.at(i) = -1; }
    bool assigned(std::size_t i) const { return v_.at(i) >= 0; }
    int raw(std::size_t i) const { return v_[i]; }
    std::size_t zeros() const { return static_cast<std::size_t>(std::count(v_.begin(), v_.end(), 0)); }

private:
    std::vector<signed char> v_;
};

struct Violation {
    enum class Kind { DoubleZeroPair, TripleSum };
    Kind kind;
    std::vector<std::size_t> rays;

    std::string describe() const {
        std::string s = kind == Kind::DoubleZeroPair ? "orthogonal pair with two zeros:" : "triple without exactly one zero:";
        for (std::size_t r : rays) s += " " + std::to_string(r);
        return s;
    }
};

/// First violation of the 101 rule, or nullopt when valid. Every ray that
/// appears in an orthogonal pair must be assigned.
inline std::optional<Violation> check_assignment(const Assignment& a, const OrthogonalityStructure& s) {
    if (a.size() != s.ray_count) throw PreconditionError("assignment size does not match ray count");
    for (const auto& [i, j] : s.pairs)
        if (!a.assigned(i) || !a.assigned(j)) throw PreconditionError("assignment is partial");
    for (const auto& [i, j] : s.pairs)
        if (a.raw(i) == 0 && a.raw(j) == 0) return Violation{Violation::Kind::DoubleZeroPair, {i, j}};
    for (const auto& t : s.triples) {
        const int zeros = (a.raw(t[0]) == 0) + (a.raw(t[1]) == 0) + (a.raw(t[2]) == 0);
        if (zeros != 1) return Violation{Violation::Kind::TripleSum, {t[0], t[1], t[2]}};
    }
    return std::nullopt;
}

/// Triples plus the orthogonal pairs not covered by any triple (pairs
/// inside a triple are implied by its exactly-one-zero rule).
struct Constraint {
    enum class Kind { Triple, Pair };
    Kind kind;
    std::array<std::size_t, 3> rays{};
    std::size_t arity() const { return kind == Kind::Triple ? 3 : 2; }
};

inline std::vector<Constraint> constraints_of(const OrthogonalityStructure& s) {
    std::vector<Constraint> out;
    std::set<std::pair<std::size_t, std::size_t>> covered;
    for (const auto& t : s.triples) {
        out.push_back({Constraint::Kind::Triple, t});
        covered.insert({t[0], t[1]});
        covered.insert({t[0], t[2]});
        covered.insert({t[1], t[2]});
    }
    for (const auto& [i, j] : s.pairs)
        if (!covered.count({i, j})) out.push_back({Constraint::Kind::Pair, {i, j, 0}});
    return out;
}

struct SearchCertificate {
    bool colorable = false;
    std::optional<Assignment> witness;
    std::uint64_t nodes_explored = 0;
    std::uint64_t propagation_steps = 0;
    /// Indices into constraints_of(structure) implicated in some conflict.
    std::vector<std::size_t> conflict_constraints;
};

struct PropagationResult {
    bool conflict = false;
    Assignment values;
    std::vector<std::size_t> forced;  // rays assigned by propagation, in order
};

class ColoringSolver {
public:
    /// `ray_order` is the deterministic branching order; rays not in it are
    /// never decided.
    ColoringSolver(std::size_t ray_count, std::vector<Constraint> constraints, std::vector<std::size_t> ray_order)
        : n_(ray_count), constraints_(std::move(constraints)), order_(std::move(ray_order)), values_(n_),
          reason_(n_, kDecision), watches_(n_) {
        for (std::size_t c = 0; c < constraints_.size(); ++c)
            for (std::size_t k = 0; k < constraints_[c].arity(); ++k) watches_[constraints_[c].rays[k]].push_back(c);
    }

    SearchCertificate solve() {
        SearchCertificate cert;
        // Constraints that are violated before any decision (none possible
        // for well-formed structures, but the queue handles it uniformly).
        std::vector<std::size_t> queue(constraints_.size());
        for (std::size_t c = 0; c < constraints_.size(); ++c) queue[c] = c;
        const long root_conflict = propagate(queue);
        if (root_conflict >= 0) {
            record_conflict(static_cast<std::size_t>(root_conflict));
        } else if (search()) {
            cert.colorable = true;
            Assignment w = values_;
            for (std::size_t i = 0; i < n_; ++i)
                if (!w.assigned(i)) w.set(i, 1);
            cert.witness = std::move(w);
        }
        cert.nodes_explored = nodes_;
        cert.propagation_steps = propagations_;
        cert.conflict_constraints.assign(core_.begin(), core_.end());
        return cert;
    }

    /// Unit propagation from a given partial assignment.
    PropagationResult propagate_from(const Assignment& start) {
        std::vector<std::size_t> queue;
        for (std::size_t i = 0; i < n_; ++i)
            if (start.assigned(i)) {
                assign(i, start.raw(i), kDecision);
                for (std::size_t c : watches_[i]) queue.push_back(c);
            }
        const std::size_t mark = trail_.size();
        for (std::size_t c = 0; c < constraints_.size(); ++c) queue.push_back(c);
        PropagationResult r;
        r.conflict = propagate(queue) >= 0;
        r.values = values_;
        r.forced.assign(trail_.begin() + static_cast<long>(mark), trail_.end());
        return r;
    }

private:
    static constexpr long kDecision = -1;

    void assign(std::size_t var, int value, long reason) {
        values_.set(var, value);
        reason_[var] = reason;
        trail_.push_back(var);
    }

    void undo_to(std::size_t mark) {
        while (trail_.size() > mark) {
            values_.clear(trail_.back());
            reason_[trail_.back()] = kDecision;
            trail_.pop_back();
        }
    }

    /// Returns the index of a violated constraint, or -1.
    long propagate(std::vector<std::size_t>& queue) {
        while (!queue.empty()) {
            const std::size_t c = queue.back();
            queue.pop_back();
            const Constraint& con = constraints_[c];
            int zeros = 0, ones = 0;
            std::size_t free_var = 0, free_count = 0;
            for (std::size_t k = 0; k < con.arity(); ++k) {
                const std::size_t v = con.rays[k];
                if (!values_.assigned(v)) {
                    free_var = v;
                    ++free_count;
                } else if (values_.raw(v) == 0) {
                    ++zeros;
                } else {
                    ++ones;
                }
            }
            if (zeros >= 2) return static_cast<long>(c);
            if (con.kind == Constraint::Kind::Triple && ones == 3) return static_cast<long>(c);

            std::vector<std::pair<std::size_t, int>> forced;
            if (zeros == 1) {
                for (std::size_t k = 0; k < con.arity(); ++k)
                    if (!values_.assigned(con.rays[k])) forced.push_back({con.rays[k], 1});
            } else if (con.kind == Constraint::Kind::Triple && ones == 2 && free_count == 1) {
                forced.push_back({free_var, 0});
            }
            for (const auto& [v, val] : forced) {
                assign(v, val, static_cast<long>(c));
                ++propagations_;
                for (std::size_t w : watches_[v]) queue.push_back(w);
            }
        }
        return -1;
    }

    /// Adds the constraints in the implication graph of a conflict.
    void record_conflict(std::size_t conflict) {
        std::vector<std::size_t> stack{conflict};
        std::set<std::size_t> seen;
        while (!stack.empty()) {
            const std::size_t c = stack.back();
            stack.pop_back();
            if (!seen.insert(c).second) continue;
            core_.insert(c);
            const Constraint& con = constraints_[c];
            for (std::size_t k = 0; k < con.arity(); ++k) {
                const std::size_t v = con.rays[k];
                if (values_.assigned(v) && reason_[v] != kDecision) stack.push_back(static_cast<std::size_t>(reason_[v]));
            }
        }
    }

    bool search() {
        std::size_t next = n_;
        for (std::size_t v : order_)
            if (!values_.assigned(v)) {
                next = v;
                break;
            }
        if (next == n_) return true;
        ++nodes_;
        for (int value : {0, 1}) {
            const std::size_t mark = trail_.size();
            assign(next, value, kDecision);
            std::vector<std::size_t> queue = watches_[next];
            const long conflict = propagate(queue);
            if (conflict < 0) {
                if (search()) return true;
            } else {
                record_conflict(static_cast<std::size_t>(conflict));
            }
            undo_to(mark);
        }
        return false;
    }

    std::size_t n_;
    std::vector<Constraint> constraints_;
    std::vector<std::size_t> order_;
    Assignment values_;
    std::vector<long> reason_;
    std::vector<std::vector<std::size_t>> watches_;
    std::vector<std::size_t> trail_;
    std::set<std::size_t> core_;
    std::uint64_t nodes_ = 0;
    std::uint64_t propagations_ = 0;
};

/// Branching order: descending triple membership, ties broken by the
/// lexicographic order of the canonical ray vectors. Rays outside every
/// constraint come last.
inline std::vector<std::size_t> branching_order(const RaySet& rays, const std::vector<Constraint>& constraints) {
    const std::size_t n = rays.size();
    std::vector<std::size_t> triple_count(n, 0), any_count(n, 0);
    for (const auto& c : constraints)
        for (std::size_t k = 0; k < c.arity(); ++k) {
            ++any_count[c.rays[k]];
            if (c.kind == Constraint::Kind::Triple) ++triple_count[c.rays[k]];
        }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    auto key = [&](std::size_t i) {
        const Vec3& v = rays[i].vector();
        return std::make_tuple(any_count[i] == 0, -static_cast<long>(triple_count[i]), v.x(), v.y(), v.z(), i);
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    return order;
}

inline SearchCertificate search_with_constraints(const RaySet& rays, const std::vector<Constraint>& constraints) {
    ColoringSolver solver(rays.size(), constraints, branching_order(rays, constraints));
    return solver.solve();
}

inline SearchCertificate search_coloring(const RaySet& rays) {
    if (rays.size() > RaySet::kMaxRays)
        throw PreconditionError("ray set has " + std::to_string(rays.size()) + " rays; limit is 200");
    const OrthogonalityStructure s = build_structure(rays);
    SearchCertificate cert = search_with_constraints(rays, constraints_of(s));
    if (cert.colorable) {
        if (const auto v = check_assignment(*cert.witness, s))
            throw InvariantViolation("search produced an invalid witness: " + v->describe());
    }
    return cert;
}

/// Unit propagation applied to a partial assignment over the full structure.
inline PropagationResult propagate(const RaySet& rays, const Assignment& partial) {
    const OrthogonalityStructure s = build_structure(rays);
    ColoringSolver solver(rays.size(), constraints_of(s), branching_order(rays, constraints_of(s)));
    return solver.propagate_from(partial);
}

/// An irreducible set of constraints that admits no valuation: removing any
/// single member makes the remainder colorable.
struct MinimalConflict {
    std::vector<std::array<std::size_t, 3>> triples;
    std::vector<std::array<std::size_t, 2>> pairs;
    std::uint64_t searches = 0;
};

inline MinimalConflict minimal_conflict(const RaySet& rays) {
    const std::vector<Constraint> all = constraints_of(build_structure(rays));
    SearchCertificate full = search_with_constraints(rays, all);
    if (full.colorable) throw PreconditionError("ray set is colorable; no conflict exists");

    MinimalConflict out;
    out.searches = 1;
    std::vector<Constraint> core;
    for (std::size_t c : full.conflict_constraints) core.push_back(all[c]);

    for (std::size_t i = 0; i < core.size();) {
        std::vector<Constraint> trial = core;
        trial.erase(trial.begin() + static_cast<long>(i));
        ++out.searches;
        if (!search_with_constraints(rays, trial).colorable)
            core = std::move(trial);
        else
            ++i;
    }
    for (const auto& c : core) {
        if (c.kind == Constraint::Kind::Triple)
            out.triples.push_back(c.rays);
        else
            out.pairs.push_back({c.rays[0], c.rays[1]});
    }
    return out;
}

}  // namespace grwlab::ks
