#pragma once

#include <stdexcept>
#include <string>

#include "fba/hilbert.hpp"
#include "fba/hilbert_fixtures.hpp"

namespace fba {

// The two stock cascades. Shipping the designed coefficient pairs as data
// keeps pipeline behavior independent of exchange-iteration convergence;
// tools/gen_fixtures.cpp regenerates them from the designer.
inline CascadeHilbertFilter stock_cascade(const std::string& name) {
    auto build = [](const double* sub, std::size_t nsub, double sub_delta, const double* proto,
                    std::size_t nproto, double proto_delta) {
        FirHilbertFilter g;
        g.coeffs.assign(sub, sub + nsub);
        g.parity = FirParity::kTypeIII;
        g.band_lo_rad = 0.01 * kPi;
        g.band_hi_rad = kPi - 0.01 * kPi;
        g.delta = sub_delta;
        FirHilbertFilter p;
        p.coeffs.assign(proto, proto + nproto);
        p.parity = FirParity::kTypeIV;
        p.band_lo_rad = ft_prototype_band_edge(sub_delta);
        p.band_hi_rad = kPi;
        p.delta = proto_delta;
        return compose_ft(p, g);
    };
    if (name == "H1" || name == "h1")
        return build(fixtures::h1_subfilter, 27, fixtures::h1_subfilter_delta,
                     fixtures::h1_prototype, 16, fixtures::h1_prototype_delta);
    if (name == "H2" || name == "h2")
        return build(fixtures::h2_subfilter, 37, fixtures::h2_subfilter_delta,
                     fixtures::h2_prototype, 22, fixtures::h2_prototype_delta);
    throw std::invalid_argument("stock_cascade: unknown filter '" + name + "' (H1 or H2)");
}

} // namespace fba
