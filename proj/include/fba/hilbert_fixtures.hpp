#pragma once

// Generated by tools/gen_fixtures.cpp - do not edit by hand.
// Stock frequency-transformation Hilbert cascades at band edge 0.01*pi.

namespace fba::fixtures {

// h1: Lp=16 Lg=27, subfilter ripple 0.525444, prototype ripple 0.00260605
inline constexpr double h1_subfilter[27] = {
    -0.2911977409915027,
    0,
    -0.061516576339218788,
    0,
    -0.073293567467946144,
    0,
    -0.092705724939826178,
    0,
    -0.1284753526167545,
    0,
    -0.21285423353098112,
    0,
    -0.63683197698700578,
    0,
    0.63683197698700578,
    0,
    0.21285423353098112,
    0,
    0.1284753526167545,
    0,
    0.092705724939826178,
    0,
    0.073293567467946144,
    0,
    0.061516576339218788,
    0,
    0.2911977409915027,
};

inline constexpr double h1_prototype[16] = {
    -0.004109562900854416,
    -0.0091624680481988685,
    -0.018670861098931776,
    -0.03420509437708065,
    -0.059353557970158441,
    -0.1028639345993457,
    -0.19671341309810914,
    -0.63131288438277777,
    0.63131288438277777,
    0.19671341309810914,
    0.1028639345993457,
    0.059353557970158441,
    0.03420509437708065,
    0.018670861098931776,
    0.0091624680481988685,
    0.004109562900854416,
};

inline constexpr double h1_subfilter_delta = 0.52544420650636647;
inline constexpr double h1_prototype_delta = 0.0026060472586365568;

// h2: Lp=22 Lg=37, subfilter ripple 0.437732, prototype ripple 4.17165e-05
inline constexpr double h2_subfilter[37] = {
    0,
    -0.23951575413851989,
    0,
    -0.043865933287873908,
    0,
    -0.049934188806558331,
    0,
    -0.05851156997903513,
    0,
    -0.071157107727235186,
    0,
    -0.091210378923595736,
    0,
    -0.12748355076616197,
    0,
    -0.21228757920820493,
    0,
    -0.63664592555783295,
    0,
    0.63664592555783295,
    0,
    0.21228757920820493,
    0,
    0.12748355076616197,
    0,
    0.091210378923595736,
    0,
    0.071157107727235186,
    0,
    0.05851156997903513,
    0,
    0.049934188806558331,
    0,
    0.043865933287873908,
    0,
    0.23951575413851989,
    0,
};

inline constexpr double h2_prototype[22] = {
    -0.00018860237511835793,
    -0.00077519832887169978,
    -0.00222142896475412,
    -0.0052075410419359517,
    -0.010703996815778327,
    -0.020067241899108249,
    -0.035330545599963369,
    -0.060156934347196239,
    -0.10336483367606153,
    -0.19697269810045095,
    -0.63139106020080771,
    0.63139106020080771,
    0.19697269810045095,
    0.10336483367606153,
    0.060156934347196239,
    0.035330545599963369,
    0.020067241899108249,
    0.010703996815778327,
    0.0052075410419359517,
    0.00222142896475412,
    0.00077519832887169978,
    0.00018860237511835793,
};

inline constexpr double h2_subfilter_delta = 0.43773237308351698;
inline constexpr double h2_prototype_delta = 4.1716478517805911e-05;

} // namespace fba::fixtures
