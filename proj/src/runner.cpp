#include "gtlab/runner.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "gtlab/analysis.hpp"

namespace gtlab::runner {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Uniform draws from the raw engine output; distributions from <random>
/// are not pinned by the standard, the engine is.
struct Rng {
    std::mt19937_64 g;
    explicit Rng(std::uint64_t seed) : g(seed) {}
    double uniform() { return static_cast<double>(g() >> 11) * 0x1.0p-53; }
    double symmetric(double scale) { return scale * (2.0 * uniform() - 1.0); }
};

struct Emitter {
    fs::path dir;
    std::string prefix;
    bool want_csv = true;
    bool want_json = true;
    std::vector<std::string> artifacts;

    std::ofstream open(const std::string& name) {
        artifacts.push_back(name);
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open artifact " + name);
        return out;
    }

    void csv_orbit(const flow::OrbitSegment& o) {
        if (!want_csv) return;
        auto out = open(prefix + "_orbit.csv");
        out << "t,x,y,v1,v2,e1x,e1y,sigma,energy\n";
        bool framed = o.frames.size() == o.size();
        for (size_t i = 0; i < o.size(); ++i) {
            const auto& s = o.states[i];
            const geom::Vec2 e1 = framed ? o.frames[i] : geom::Vec2::Zero();
            out << fmt(o.times[i]) << ',' << fmt(s.p.x) << ',' << fmt(s.p.y) << ','
                << fmt(s.v.x()) << ',' << fmt(s.v.y()) << ',' << fmt(e1.x()) << ','
                << fmt(e1.y()) << ',' << fmt(o.sigma[i]) << ',' << fmt(o.energy[i])
                << '\n';
        }
    }

    void json_orbit(const flow::OrbitSegment& o) {
        if (!want_json) return;
        json j;
        j["t"] = o.times;
        std::vector<double> x, y, v1, v2;
        for (const auto& s : o.states) {
            x.push_back(s.p.x);
            y.push_back(s.p.y);
            v1.push_back(s.v.x());
            v2.push_back(s.v.y());
        }
        j["x"] = x;
        j["y"] = y;
        j["v1"] = v1;
        j["v2"] = v2;
        j["sigma"] = o.sigma;
        j["energy"] = o.energy;
        open(prefix + "_orbit.json") << j.dump(2) << '\n';
    }

    void csv_cocycle(const cocycle::TransverseCocycle& c) {
        if (!want_csv) return;
        auto out = open(prefix + "_cocycle.csv");
        out << "t,T11,T12,T21,T22,s\n";
        for (size_t i = 0; i < c.size(); ++i) {
            const auto& T = c.T[i];
            out << fmt(c.times[i]) << ',' << fmt(T(0, 0)) << ',' << fmt(T(0, 1)) << ','
                << fmt(T(1, 0)) << ',' << fmt(T(1, 1)) << ',' << fmt(c.s[i]) << '\n';
        }
    }

    void csv_cone(const analysis::ConeReport& r) {
        if (!want_csv) return;
        auto out = open(prefix + "_cone.csv");
        out << "t,margin\n";
        for (size_t i = 0; i < r.margins.size(); ++i)
            out << fmt(r.times[i]) << ',' << fmt(r.margins[i]) << '\n';
    }
};

flow::UnitTangentState initial_state(const scenario::ScenarioConfig& cfg) {
    geom::ChartPoint p{cfg.run.x0, cfg.run.y0};
    return {p, cfg.scenario.metric.unit_from_angle(p, cfg.run.phi0)};
}

json classification_json(const analysis::Classification& cl) {
    json j;
    j["class"] = analysis::orbit_class_name(cl.cls);
    j["eigenvalues"] = {{cl.eigenvalues[0].real(), cl.eigenvalues[0].imag()},
                        {cl.eigenvalues[1].real(), cl.eigenvalues[1].imag()}};
    j["moduli"] = {std::abs(cl.eigenvalues[0]), std::abs(cl.eigenvalues[1])};
    j["log_product"] = cl.log_product;
    return j;
}

json periodic_json(const analysis::PeriodicOrbit& po) {
    json j;
    j["period"] = po.period;
    j["beta"] = po.beta;
    j["s_period"] = po.s_period;
    j["residual"] = po.residual;
    j["winding"] = {po.winding_p, po.winding_q};
    j["mu"] = po.return_derivative.mu;
    j["classification"] = classification_json(analysis::classify_periodic(po.return_derivative));
    return j;
}

analysis::FindPeriodicOptions periodic_options(const scenario::RunParams& r) {
    analysis::FindPeriodicOptions o;
    o.max_iters = r.max_iters;
    o.returns = r.returns;
    o.h = r.h;
    o.tol = r.tol;
    o.max_period = r.T;
    return o;
}

json dispatch(const scenario::ScenarioConfig& cfg, const RunOptions& opt, Emitter& em) {
    const auto& sc = cfg.scenario;
    const auto& r = cfg.run;
    json out;

    if (r.kind == "orbit") {
        auto orbit = flow::integrate_orbit(sc, initial_state(cfg), r.T, r.h);
        flow::fermi_frame(sc, orbit);
        auto coc = cocycle::integrate_cocycle(sc, orbit);
        em.csv_orbit(orbit);
        em.json_orbit(orbit);
        em.csv_cocycle(coc);
        out["max_energy_drift"] = orbit.max_energy_drift;
        out["s_T"] = coc.s.back();
        const auto& fin = orbit.back();
        out["final"] = {{"x", fin.p.x}, {"y", fin.p.y}, {"v1", fin.v.x()}, {"v2", fin.v.y()}};
    } else if (r.kind == "lyapunov") {
        auto rep = analysis::lyapunov_spectrum(sc, initial_state(cfg), r.T, r.h, r.window);
        out["exponents"] = rep.exponents;
        out["b"] = rep.b;
        out["pairing_residual"] = rep.pairing_residual;
        out["T"] = rep.T;
    } else if (r.kind == "periodic") {
        analysis::SectionSpec sec{r.section_axis, r.section_value};
        auto po = analysis::find_periodic(sc, initial_state(cfg), sec, periodic_options(r));
        em.csv_orbit(po.orbit);
        em.json_orbit(po.orbit);
        em.csv_cocycle(po.coc);
        out = periodic_json(po);
    } else if (r.kind == "cone") {
        auto orbit = flow::integrate_orbit(sc, initial_state(cfg), r.T, r.h);
        flow::fermi_frame(sc, orbit);
        auto rep = analysis::cone_invariance_test(sc, orbit, r.cone_k, r.grid_stride);
        em.csv_cone(rep);
        out["k"] = rep.k;
        out["invariant"] = rep.invariant;
        out["min_margin"] = rep.min_margin;
        out["q_psd"] = rep.q_psd;
        out["gamma_positive"] = rep.gamma_positive;
        out["samples"] = rep.margins.size();
    } else if (r.kind == "domination") {
        std::vector<flow::UnitTangentState> family;
        flow::UnitTangentState s = initial_state(cfg);
        for (int i = 0; i < r.samples; ++i) {
            family.push_back(s);
            if (i + 1 < r.samples)
                s = flow::integrate_orbit(sc, s, r.sample_spacing, r.h).back();
        }
        analysis::DominationOptions dopt;
        dopt.window = r.window;
        dopt.h = r.h;
        auto est = analysis::domination_estimator(sc, family, r.l_max, dopt);
        if (est.l)
            out["l"] = *est.l;
        else
            out["l"] = nullptr;
        out["worst_ratio"] = est.worst_ratio;
        out["ratio_by_l"] = est.ratio_by_l;
        out["samples"] = family.size();
    } else if (r.kind == "surgery") {
        analysis::SectionSpec sec{r.section_axis, r.section_value};
        auto opts = periodic_options(r);
        auto before = analysis::find_periodic(sc, initial_state(cfg), sec, opts);
        auto field2 = analysis::beta_surgery(sc.field, before.winding_p, before.winding_q,
                                             r.alpha);
        flow::Scenario sc2{sc.metric, field2};
        auto after = analysis::find_periodic(sc2, before.seed, sec, opts);
        out["alpha"] = r.alpha;
        out["winding"] = {before.winding_p, before.winding_q};
        out["before"] = periodic_json(before);
        out["after"] = periodic_json(after);
        out["delta_beta"] = after.beta - before.beta;
        out["delta_log_product"] =
            std::log(after.return_derivative.mu) - std::log(before.return_derivative.mu);
        out["field_after"] = {{"c1", field2.c1()}, {"c2", field2.c2()}};
    } else if (r.kind == "franks") {
        auto orbit = flow::integrate_orbit(sc, initial_state(cfg), 1.0, r.h);
        flow::fermi_frame(sc, orbit);
        auto path = cocycle::generator_path(sc, orbit);
        cocycle::BumpProfile bumps;
        auto zero = cocycle::franks_tangent(path, cocycle::FranksPerturbation::zero(1), bumps);
        out["zero_draw_Z1_norm"] = zero.Z1.norm();
        out["s1"] = zero.s1;
        Rng rng(opt.seed);
        double worst_gap = 0.0, worst_residual = 0.0;
        for (int t = 0; t < r.trials; ++t) {
            cocycle::FranksPerturbation z = cocycle::FranksPerturbation::zero(1);
            z.a(0, 0) = rng.symmetric(r.zeta_scale);
            z.b(0, 0) = rng.symmetric(r.zeta_scale);
            z.c(0, 0) = rng.symmetric(r.zeta_scale);
            z.lambda = rng.symmetric(r.zeta_scale);
            auto res = cocycle::franks_tangent(path, z, bumps);
            worst_gap = std::max(worst_gap,
                                 std::abs(res.Y_check.v - z.lambda * res.s1));
            worst_residual = std::max(worst_residual, res.Y_check.residual);
        }
        out["trials"] = r.trials;
        out["worst_rate_gap"] = worst_gap;
        out["worst_ics_residual"] = worst_residual;
    } else if (r.kind == "cslab") {
        cs::PeriodicLinearSystem sys;
        sys.letters = cfg.letters;
        // scenario letters carry no transition words; all transitions are trivial
        const int P = static_cast<int>(cfg.letters.size());
        for (int i = 0; i < P; ++i)
            for (int k = 0; k < P; ++k) sys.transitions[{i, k}] = {};
        auto prod = cs::word_product(cfg.letters);
        out["product"] = {{"mu", prod.mu},
                          {"entries",
                           {prod.entries(0, 0), prod.entries(0, 1), prod.entries(1, 0),
                            prod.entries(1, 1)}}};
        auto pairing = cs::eigen_pairing(prod);
        json pairs = json::array();
        for (const auto& pr : pairing.pairs)
            pairs.push_back({{"lambda", {pr.lambda.real(), pr.lambda.imag()}},
                             {"partner", {pr.partner.real(), pr.partner.imag()}}});
        out["pairing"] = {{"pairs", pairs},
                          {"hyperbolic", pairing.hyperbolic},
                          {"worst_residual", pairing.worst_residual}};
        auto hit = cs::homothety_search(sys, r.epsilon, r.max_len);
        if (hit)
            out["homothety"] = {{"word", hit->description},
                                {"scalar", hit->scalar},
                                {"rel_residual", hit->rel_residual}};
        else
            out["homothety"] = nullptr;
        if (r.mane_alpha > 0.0) {
            auto s = cs::mane_complexify(prod, r.mane_alpha, 1e-3);
            if (s)
                out["mane_s"] = *s;
            else
                out["mane_s"] = nullptr;
        }
    } else {
        throw std::invalid_argument("unrecognized run kind " + r.kind);
    }
    return out;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

RunReport run(const scenario::ScenarioConfig& cfg, const RunOptions& opt) {
    fs::create_directories(opt.out_dir);
    Emitter em;
    em.dir = opt.out_dir;
    em.prefix = cfg.output.prefix;
    if (opt.emit != "csv" && opt.emit != "json" && opt.emit != "both")
        throw std::invalid_argument("emit must be csv, json or both");
    em.want_csv = opt.emit == "csv" || opt.emit == "both";
    em.want_json = opt.emit == "json" || opt.emit == "both";

    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(cfg.source)));

    json rep;
    rep["schema"] = "gtlab-report-v1";
    rep["scenario_hash"] = hash;
    rep["seed"] = opt.seed;
    rep["kind"] = cfg.run.kind;

    RunReport result;
    auto t0 = std::chrono::steady_clock::now();
    try {
        rep["outputs"] = dispatch(cfg, opt, em);
        rep["status"] = "ok";
        result.exit_code = 0;
    } catch (const std::invalid_argument& e) {
        rep["status"] = "config_error";
        rep["error"] = e.what();
        result.exit_code = 1;
    } catch (const std::exception& e) {
        rep["status"] = "numerical_failure";
        rep["error"] = e.what();
        result.exit_code = 2;
    }
    auto t1 = std::chrono::steady_clock::now();

    rep["artifacts"] = em.artifacts;
    fs::path rp = fs::path(opt.out_dir) / (cfg.output.prefix + "_report.json");
    result.json = rep.dump(2) + "\n";
    std::ofstream out(rp, std::ios::binary);
    out << result.json;
    result.report_path = rp.string();

    if (!opt.quiet) {
        double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        std::fprintf(stderr, "[gtlab] kind=%s status=%s wall=%.1fms -> %s\n",
                     cfg.run.kind.c_str(), rep["status"].get<std::string>().c_str(), ms,
                     rp.string().c_str());
    }
    return result;
}

}  // namespace gtlab::runner
