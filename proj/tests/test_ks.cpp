#include <catch_amalgamated.hpp>

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "grwlab/ck_trace.hpp"
#include "grwlab/rng.hpp"

using namespace grwlab;
using namespace grwlab::ks;

namespace {

std::string data(const std::string& name) { return std::string(GRWLAB_DATA_DIR) + "/" + name; }

RaySet parse_text(const std::string& text) {
    std::istringstream in(text);
    return RaySet::parse(in);
}

/// Every total valuation satisfying the 101 rule, by enumeration.
std::vector<std::vector<int>> all_colorings(const OrthogonalityStructure& s) {
    std::vector<std::vector<int>> out;
    const std::size_t n = s.ray_count;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        Assignment a(n);
        for (std::size_t i = 0; i < n; ++i) a.set(i, static_cast<int>((mask >> i) & 1U));
        if (!check_assignment(a, s)) {
            std::vector<int> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = a.raw(i);
            out.push_back(v);
        }
    }
    return out;
}

/// Plain backtracking in index order that only checks constraints once all
/// their rays are set; no propagation, no ordering heuristics.
bool naive_colorable(const OrthogonalityStructure& s) {
    const std::size_t n = s.ray_count;
    std::vector<std::vector<std::array<std::size_t, 3>>> triples_ending(n);
    std::vector<std::vector<std::array<std::size_t, 2>>> pairs_ending(n);
    for (const auto& t : s.triples) triples_ending[t[2]].push_back(t);
    for (const auto& p : s.pairs) pairs_ending[p[1]].push_back(p);
    std::vector<int> v(n, -1);
    std::function<bool(std::size_t)> rec = [&](std::size_t i) {
        if (i == n) return true;
        for (int val : {0, 1}) {
            v[i] = val;
            bool ok = true;
            for (const auto& p : pairs_ending[i]) ok = ok && !(v[p[0]] == 0 && v[p[1]] == 0);
            for (const auto& t : triples_ending[i]) ok = ok && (v[t[0]] == 0) + (v[t[1]] == 0) + (v[t[2]] == 0) == 1;
            if (ok && rec(i + 1)) return true;
        }
        v[i] = -1;
        return false;
    };
    return rec(0);
}

const std::vector<std::string> kSmallSets{"axes.rays", "axes_diag.rays", "two_triples.rays", "cube_diagonals.rays"};

}  // namespace

TEST_CASE("ray parsing") {
    const RaySet r = parse_text("# comment\n\n1 0 0\n 0 2 0\n0 0 -3\n-1 0 0\n1 1 r2\n0.5 -0.5 0\n1-r2 2+3*r2 -r2\n");
    REQUIRE(r.size() == 6);  // -1 0 0 duplicates the first ray
    CHECK(std::abs(r[2].vector().z() - 1.0) <= 1e-15);
    CHECK(r[3].exact().has_value());
    CHECK(std::abs(r[3].vector().z() - std::sqrt(2.0) / 2.0) <= 1e-15);
    CHECK_FALSE(r[4].exact().has_value());
    REQUIRE(r[5].exact().has_value());
    // 1 - r2 < 0, so the sign is flipped
    CHECK((*r[5].exact())[0].p == -1);
    CHECK((*r[5].exact())[0].q == 1);
    CHECK(r[5].vector().x() > 0.0);
    for (const Ray& ray : r.rays()) CHECK(std::abs(ray.vector().norm() - 1.0) <= 1e-10);
}

TEST_CASE("ray parsing errors name the line") {
    CHECK_THROWS_WITH(parse_text("1 0 0\n1 0\n"), Catch::Matchers::ContainsSubstring("line 2"));
    CHECK_THROWS_WITH(parse_text("1 0 0\n0 1 0\n1 x 0\n"), Catch::Matchers::ContainsSubstring("line 3"));
    CHECK_THROWS_AS(parse_text("0 0 0\n"), PreconditionError);
    CHECK_THROWS_AS(RaySet::load("/nonexistent/file.rays"), PreconditionError);
}

TEST_CASE("exact surd arithmetic") {
    CHECK(Surd{1, 1}.sign() == 1);
    CHECK(Surd{1, -1}.sign() == -1);
    CHECK(Surd{-2, 1}.sign() == -1);
    CHECK(Surd{2, -1}.sign() == 1);
    CHECK((Surd{0, 1} * Surd{0, 1}).p == 2);
    CHECK(exact_dot({Surd{1}, Surd{1}, Surd{0, 1}}, {Surd{1}, Surd{1}, Surd{0, -1}}).is_zero());
}

TEST_CASE("structure of small sets") {
    const OrthogonalityStructure axes = build_structure(RaySet::load(data("axes.rays")));
    CHECK(axes.pairs.size() == 3);
    CHECK(axes.triples.size() == 1);
    const OrthogonalityStructure diag = build_structure(RaySet::load(data("axes_diag.rays")));
    CHECK(diag.pairs.size() == 4);
    CHECK(diag.triples.size() == 1);
}

TEST_CASE("structure of the 33-ray set") {
    const RaySet r = RaySet::load(data("ks33.rays"));
    CHECK(r.size() == 33);
    const OrthogonalityStructure s = build_structure(r);
    CHECK(s.triples.size() >= 16);
    // regression values
    CHECK(s.triples.size() == 16);
    CHECK(s.pairs.size() == 72);
    // every triple's pairs are present
    for (const auto& t : s.triples)
        for (const auto& p : {std::array<std::size_t, 2>{t[0], t[1]}, {t[0], t[2]}, {t[1], t[2]}})
            CHECK(std::find(s.pairs.begin(), s.pairs.end(), p) != s.pairs.end());
    // floating-point parse of the same set agrees with the exact one
    RaySet approx;
    for (const Ray& ray : r.rays()) approx.add(Ray::from_vector(ray.vector()));
    const OrthogonalityStructure s2 = build_structure(approx);
    CHECK(s2.pairs == s.pairs);
    CHECK(s2.triples == s.triples);
}

TEST_CASE("check_assignment on the axes") {
    const OrthogonalityStructure s = build_structure(RaySet::load(data("axes.rays")));
    CHECK_FALSE(check_assignment(Assignment{0, 1, 1}, s).has_value());
    const auto two_zeros = check_assignment(Assignment{0, 0, 1}, s);
    REQUIRE(two_zeros.has_value());
    CHECK(two_zeros->kind == Violation::Kind::DoubleZeroPair);
    CHECK(two_zeros->rays == std::vector<std::size_t>{0, 1});
    const auto no_zero = check_assignment(Assignment{1, 1, 1}, s);
    REQUIRE(no_zero.has_value());
    CHECK(no_zero->kind == Violation::Kind::TripleSum);
    Assignment partial(3);
    partial.set(0, 1);
    CHECK_THROWS_AS(check_assignment(partial, s), PreconditionError);
}

TEST_CASE("axes are colorable with one zero") {
    const SearchCertificate c = search_coloring(RaySet::load(data("axes.rays")));
    REQUIRE(c.colorable);
    REQUIRE(c.witness.has_value());
    CHECK(c.witness->zeros() == 1);
}

TEST_CASE("small bundled sets agree with brute force") {
    for (const auto& name : kSmallSets) {
        const RaySet r = RaySet::load(data(name));
        const OrthogonalityStructure s = build_structure(r);
        const SearchCertificate c = search_coloring(r);
        CHECK(c.colorable == !all_colorings(s).empty());
        if (c.colorable) CHECK_FALSE(check_assignment(*c.witness, s).has_value());
    }
    CHECK(all_colorings(build_structure(RaySet::load(data("axes.rays")))).size() == 3);
    CHECK(search_coloring(RaySet::load(data("two_triples.rays"))).colorable);
}

TEST_CASE("33-ray set is uncolorable with a pinned node count") {
    const RaySet r = RaySet::load(data("ks33.rays"));
    const SearchCertificate c = search_coloring(r);
    CHECK_FALSE(c.colorable);
    CHECK_FALSE(c.witness.has_value());
    CHECK(c.nodes_explored == 23);
    CHECK(c.propagation_steps == 424);
    CHECK(search_coloring(r).nodes_explored == c.nodes_explored);
    CHECK_FALSE(naive_colorable(build_structure(r)));
}

TEST_CASE("verdict is invariant under reordering and rotation") {
    const RaySet r = RaySet::load(data("ks33.rays"));
    Rng rng(31);
    std::vector<std::size_t> perm(r.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (int rep = 0; rep < 10; ++rep) {
        for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        CHECK_FALSE(search_coloring(r.permuted(perm)).colorable);
        const Eigen::Matrix3d rot =
            Eigen::Quaterniond(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized().toRotationMatrix();
        const RaySet turned = r.rotated(rot);
        CHECK(turned.size() == 33);
        const OrthogonalityStructure s = build_structure(turned);
        CHECK(s.triples.size() == 16);
        CHECK(s.pairs.size() == 72);
        CHECK_FALSE(search_coloring(turned).colorable);
    }
    for (const auto& name : kSmallSets) {
        const RaySet small = RaySet::load(data(name));
        const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
        CHECK(search_coloring(small.rotated(rot)).colorable);
    }
}

TEST_CASE("adding rays to an uncolorable set keeps it uncolorable") {
    const RaySet base = RaySet::load(data("ks33.rays"));
    Rng rng(32);
    for (int rep = 0; rep < 10; ++rep) {
        RaySet more = base;
        for (int k = 0; k < 5; ++k) more.add(Ray::from_vector(Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal())));
        const RaySet cube = RaySet::load(data("cube_diagonals.rays"));
        for (const Ray& ray : cube.rays()) more.add(ray);
        CHECK_FALSE(search_coloring(more).colorable);
    }
}

TEST_CASE("propagation is sound against brute force") {
    for (const auto& name : kSmallSets) {
        const RaySet r = RaySet::load(data(name));
        const OrthogonalityStructure s = build_structure(r);
        const auto completions = all_colorings(s);
        const std::size_t n = r.size();
        // every partial assignment over {unset, 0, 1}^n
        std::size_t states = 1;
        for (std::size_t i = 0; i < n; ++i) states *= 3;
        for (std::size_t code = 0; code < states; ++code) {
            Assignment partial(n);
            std::size_t c = code;
            for (std::size_t i = 0; i < n; ++i, c /= 3)
                if (c % 3 != 2) partial.set(i, static_cast<int>(c % 3));
            std::vector<const std::vector<int>*> matching;
            for (const auto& full : completions) {
                bool ok = true;
                for (std::size_t i = 0; i < n; ++i) ok = ok && (!partial.assigned(i) || partial.raw(i) == full[i]);
                if (ok) matching.push_back(&full);
            }
            const PropagationResult pr = propagate(r, partial);
            if (pr.conflict) {
                CHECK(matching.empty());
                continue;
            }
            for (std::size_t v : pr.forced)
                for (const auto* full : matching) CHECK((*full)[v] == pr.values.raw(v));
        }
    }
}

TEST_CASE("ray limit") {
    RaySet big;
    for (int i = 0; big.size() <= RaySet::kMaxRays; ++i)
        big.add(Ray::from_vector(Eigen::Vector3d(1.0, 0.01 * i, 0.0001 * i * i)));
    CHECK_THROWS_AS(search_coloring(big), PreconditionError);
}

TEST_CASE("minimal conflict is unsatisfiable and irreducible") {
    const RaySet r = RaySet::load(data("ks33.rays"));
    const MinimalConflict m = minimal_conflict(r);
    std::vector<Constraint> core;
    for (const auto& t : m.triples) core.push_back({Constraint::Kind::Triple, t});
    for (const auto& p : m.pairs) core.push_back({Constraint::Kind::Pair, {p[0], p[1], 0}});
    REQUIRE_FALSE(core.empty());
    CHECK_FALSE(search_with_constraints(r, core).colorable);
    for (std::size_t i = 0; i < core.size(); ++i) {
        std::vector<Constraint> less = core;
        less.erase(less.begin() + static_cast<long>(i));
        CHECK(search_with_constraints(r, less).colorable);
    }
    CHECK_THROWS_AS(minimal_conflict(RaySet::load(data("axes.rays"))), PreconditionError);
}

TEST_CASE("argument trace over the 33-ray set ends in contradiction") {
    const ArgumentTrace t = ck_argument_trace(RaySet::load(data("ks33.rays")));
    CHECK(t.contradiction);
    REQUIRE(t.steps.size() == 4);
    CHECK(t.steps[0].name == "twin");
    CHECK(t.steps[3].name == "search");
    for (const auto& st : t.steps) CHECK(st.verified);
    CHECK(t.triple_count == 16);
    CHECK(t.shared_rays > 0);
    CHECK_FALSE(t.conflict.triples.empty());
    CHECK_FALSE(t.conclusion.empty());
    CHECK_FALSE(t.resolution.empty());
}

TEST_CASE("argument trace refuses colorable sets") {
    CHECK_THROWS_WITH(ck_argument_trace(RaySet::load(data("axes.rays"))),
                      Catch::Matchers::ContainsSubstring("colorable, no contradiction derivable"));
}
