#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fba/hilbert.hpp"
#include "fba/version.hpp"
#include "fba/wavegen.hpp"

namespace fba {

// All numeric text output goes through these: C locale, 17 significant
// digits where bit-exact round-trip matters.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

struct ParseError : std::runtime_error {
    int line;
    ParseError(const std::string& msg, int line_no)
        : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

// --------------------------- spec <-> json ---------------------------------

inline nlohmann::json to_json(const DynamicTerm& term) {
    nlohmann::json j;
    if (auto* am = std::get_if<AmTerm>(&term)) {
        j["kind"] = "am";
        j["depth"] = am->depth;
        j["freq_hz"] = am->freq_hz;
        if (am->phase_rad) j["phase_rad"] = *am->phase_rad;
    } else if (auto* pm = std::get_if<PmTerm>(&term)) {
        j["kind"] = "pm";
        j["depth_rad"] = pm->depth_rad;
        j["freq_hz"] = pm->freq_hz;
        if (pm->phase_rad) j["phase_rad"] = *pm->phase_rad;
    } else if (auto* as = std::get_if<AsTerm>(&term)) {
        j["kind"] = "as";
        j["depth"] = as->depth;
        j["time_s"] = as->time_s;
    } else if (auto* ps = std::get_if<PsTerm>(&term)) {
        j["kind"] = "ps";
        j["depth_rad"] = ps->depth_rad;
        j["time_s"] = ps->time_s;
    } else if (auto* fr = std::get_if<FrTerm>(&term)) {
        j["kind"] = "fr";
        j["rate_hz_per_s"] = fr->rate_hz_per_s;
        if (fr->onset_s != 0.0) j["onset_s"] = fr->onset_s;
    }
    return j;
}

inline DynamicTerm dynamic_term_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "am") {
        AmTerm t;
        t.depth = j.at("depth").get<double>();
        t.freq_hz = j.at("freq_hz").get<double>();
        if (j.contains("phase_rad")) t.phase_rad = j["phase_rad"].get<double>();
        return t;
    }
    if (kind == "pm") {
        PmTerm t;
        t.depth_rad = j.at("depth_rad").get<double>();
        t.freq_hz = j.at("freq_hz").get<double>();
        if (j.contains("phase_rad")) t.phase_rad = j["phase_rad"].get<double>();
        return t;
    }
    if (kind == "as") return AsTerm{j.at("depth").get<double>(), j.at("time_s").get<double>()};
    if (kind == "ps") return PsTerm{j.at("depth_rad").get<double>(), j.at("time_s").get<double>()};
    if (kind == "fr")
        return FrTerm{j.at("rate_hz_per_s").get<double>(), j.value("onset_s", 0.0)};
    throw std::runtime_error("unknown dynamic term kind '" + kind + "'");
}

inline nlohmann::json to_json(const GroundTruthSpec& spec) {
    nlohmann::json j;
    j["a0"] = spec.a0;
    j["f0_hz"] = spec.f0_hz;
    j["phi0_rad"] = spec.phi0_rad;
    j["full_scale"] = spec.full_scale;
    j["dynamics"] = nlohmann::json::array();
    for (const auto& d : spec.dynamics) j["dynamics"].push_back(to_json(d));
    return j;
}

inline GroundTruthSpec spec_from_json(const nlohmann::json& j) {
    GroundTruthSpec s;
    s.a0 = j.at("a0").get<double>();
    s.f0_hz = j.at("f0_hz").get<double>();
    s.phi0_rad = j.value("phi0_rad", 0.0);
    s.full_scale = j.value("full_scale", 1.0);
    if (j.contains("dynamics"))
        for (const auto& d : j["dynamics"]) s.dynamics.push_back(dynamic_term_from_json(d));
    return s;
}

// --------------------------- waveform files --------------------------------
//
// Text form: key=value header, a "---" separator, one sample per line at 17
// significant digits. The JSON form carries the same fields.

inline void save_waveform_text(const Waveform& w, const GroundTruthSpec* spec,
                               const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "fba-waveform v1\n";
    out << "generator=fba " << kVersion << "\n";
    out << "prng=" << kPrngName << "\n";
    out << "fs=" << fmt_g17(w.fs_hz) << "\n";
    out << "t0=" << fmt_g17(w.t0_s) << "\n";
    out << "count=" << w.samples.size() << "\n";
    out << "full_scale=" << fmt_g17(w.full_scale) << "\n";
    if (spec) out << "spec=" << to_json(*spec).dump() << "\n";
    out << "---\n";
    for (double s : w.samples) out << fmt_g17(s) << "\n";
}

struct LoadedWaveform {
    Waveform waveform;
    std::optional<GroundTruthSpec> spec;
};

inline LoadedWaveform load_waveform_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line) || line.rfind("fba-waveform", 0) != 0)
        throw ParseError("missing fba-waveform magic", 1);
    ++line_no;
    LoadedWaveform lw;
    std::size_t count = 0;
    bool have_count = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line == "---") break;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        try {
            if (key == "fs") lw.waveform.fs_hz = std::stod(val);
            else if (key == "t0") lw.waveform.t0_s = std::stod(val);
            else if (key == "count") { count = std::stoul(val); have_count = true; }
            else if (key == "full_scale") lw.waveform.full_scale = std::stod(val);
            else if (key == "spec") lw.spec = spec_from_json(nlohmann::json::parse(val));
            // generator/prng and unknown keys are informational
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(std::string("bad value for '") + key + "': " + e.what(), line_no);
        }
    }
    if (!have_count) throw ParseError("missing count", line_no);
    lw.waveform.samples.reserve(count);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            lw.waveform.samples.push_back(std::stod(line));
        } catch (const std::exception&) {
            throw ParseError("bad sample value", line_no);
        }
    }
    if (lw.waveform.samples.size() != count)
        throw ParseError("sample count mismatch: header says " + std::to_string(count) +
                             ", file has " + std::to_string(lw.waveform.samples.size()),
                         line_no);
    if (!(lw.waveform.fs_hz > 0.0)) throw ParseError("missing or non-positive fs", line_no);
    return lw;
}

inline nlohmann::json waveform_to_json(const Waveform& w, const GroundTruthSpec* spec) {
    nlohmann::json j;
    j["format"] = "fba-waveform";
    j["version"] = 1;
    j["generator"] = std::string("fba ") + kVersion;
    j["prng"] = kPrngName;
    j["fs"] = w.fs_hz;
    j["t0"] = w.t0_s;
    j["full_scale"] = w.full_scale;
    if (spec) j["spec"] = to_json(*spec);
    j["samples"] = w.samples;
    return j;
}

inline LoadedWaveform waveform_from_json(const nlohmann::json& j) {
    LoadedWaveform lw;
    lw.waveform.fs_hz = j.at("fs").get<double>();
    lw.waveform.t0_s = j.value("t0", 0.0);
    lw.waveform.full_scale = j.value("full_scale", 1.0);
    lw.waveform.samples = j.at("samples").get<std::vector<double>>();
    if (j.contains("spec")) lw.spec = spec_from_json(j["spec"]);
    return lw;
}

// --------------------------- coefficient files -----------------------------

inline void save_filter_text(const FirHilbertFilter& f, const std::string& method,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "fba-fir v1\n";
    out << "generator=fba " << kVersion << "\n";
    out << "type=" << (f.parity == FirParity::kTypeIII ? "III" : "IV") << "\n";
    out << "length=" << f.length() << "\n";
    out << "band_lo_rad=" << fmt_g17(f.band_lo_rad) << "\n";
    out << "band_hi_rad=" << fmt_g17(f.band_hi_rad) << "\n";
    out << "delta=" << fmt_g17(f.delta) << "\n";
    out << "method=" << method << "\n";
    out << "---\n";
    for (double c : f.coeffs) out << fmt_g17(c) << "\n";
}

inline FirHilbertFilter load_filter_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line) || line.rfind("fba-fir", 0) != 0)
        throw ParseError("missing fba-fir magic", 1);
    ++line_no;
    FirHilbertFilter f;
    std::size_t length = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line == "---") break;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "type") f.parity = val == "III" ? FirParity::kTypeIII : FirParity::kTypeIV;
        else if (key == "length") length = std::stoul(val);
        else if (key == "band_lo_rad") f.band_lo_rad = std::stod(val);
        else if (key == "band_hi_rad") f.band_hi_rad = std::stod(val);
        else if (key == "delta") f.delta = std::stod(val);
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        f.coeffs.push_back(std::stod(line));
    }
    if (length != f.coeffs.size())
        throw ParseError("coefficient count mismatch", line_no);
    return f;
}

} // namespace fba
