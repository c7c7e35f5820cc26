// Regenerates include/fba/hilbert_fixtures.hpp: the two stock cascade
// designs (H1: Lp=16/Lg=27, H2: Lp=22/Lg=37 at band edge 0.01*pi). Run from
// the repository root after changing the designer, then rebuild.
#include <cstdio>
#include <string>

#include "fba/hilbert.hpp"
#include "fba/io.hpp"

using namespace fba;

static void emit_array(FILE* f, const char* name, const std::vector<double>& v) {
    std::fprintf(f, "inline constexpr double %s[%zu] = {\n", name, v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        std::fprintf(f, "    %s,\n", fmt_g17(v[i]).c_str());
    std::fprintf(f, "};\n\n");
}

int main(int argc, char** argv) {
    std::string out_path = argc > 1 ? argv[1] : "include/fba/hilbert_fixtures.hpp";
    const double edge = 0.01 * kPi;

    struct Spec { const char* tag; std::size_t lp, lg; };
    const Spec specs[] = {{"h1", 16, 27}, {"h2", 22, 37}};

    FILE* f = std::fopen(out_path.c_str(), "w");
    if (!f) { std::perror("open"); return 1; }
    std::fprintf(f, "#pragma once\n\n");
    std::fprintf(f, "// Generated by tools/gen_fixtures.cpp - do not edit by hand.\n");
    std::fprintf(f, "// Stock frequency-transformation Hilbert cascades at band edge 0.01*pi.\n\n");
    std::fprintf(f, "namespace fba::fixtures {\n\n");

    for (const auto& s : specs) {
        auto g = design_equiripple(s.lg, edge);
        auto p = design_equiripple(s.lp, ft_prototype_band_edge(g.delta), kPi);
        std::fprintf(f, "// %s: Lp=%zu Lg=%zu, subfilter ripple %.6g, prototype ripple %.6g\n",
                     s.tag, s.lp, s.lg, g.delta, p.delta);
        emit_array(f, (std::string(s.tag) + "_subfilter").c_str(), g.coeffs);
        emit_array(f, (std::string(s.tag) + "_prototype").c_str(), p.coeffs);
        std::fprintf(f, "inline constexpr double %s_subfilter_delta = %s;\n", s.tag,
                     fmt_g17(g.delta).c_str());
        std::fprintf(f, "inline constexpr double %s_prototype_delta = %s;\n\n", s.tag,
                     fmt_g17(p.delta).c_str());
    }
    std::fprintf(f, "} // namespace fba::fixtures\n");
    std::fclose(f);
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}
