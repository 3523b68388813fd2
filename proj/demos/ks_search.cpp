// Colorability search over a ray file, with a deletion-minimal conflict
// when the set is uncolorable.
//
//   demo_ks_search <file.rays>

#include <cstdio>
#include <exception>

#include "grwlab/ks.hpp"

int main(int argc, char** argv) {
    using namespace grwlab::ks;
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <file.rays>\n", argv[0]);
        return 2;
    }
    try {
        const RaySet rays = RaySet::load(argv[1]);
        const OrthogonalityStructure s = build_structure(rays);
        std::printf("%zu rays, %zu orthogonal pairs, %zu orthogonal triples\n", rays.size(), s.pairs.size(),
                    s.triples.size());
        const SearchCertificate c = search_coloring(rays);
        std::printf("verdict: %s after %llu nodes, %llu propagation steps\n", c.colorable ? "colorable" : "uncolorable",
                    static_cast<unsigned long long>(c.nodes_explored),
                    static_cast<unsigned long long>(c.propagation_steps));
        if (c.witness) {
            std::printf("witness:");
            for (std::size_t i = 0; i < c.witness->size(); ++i) std::printf(" %d", c.witness->raw(i));
            std::printf("\n");
            return 0;
        }
        const MinimalConflict m = minimal_conflict(rays);
        std::printf("minimal conflict: %zu triples, %zu pairs (%llu searches)\n", m.triples.size(), m.pairs.size(),
                    static_cast<unsigned long long>(m.searches));
        for (const auto& t : m.triples) std::printf("  triple %zu %zu %zu\n", t[0], t[1], t[2]);
        for (const auto& p : m.pairs) std::printf("  pair   %zu %zu\n", p[0], p[1]);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
