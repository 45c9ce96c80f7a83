// iunorm command-line front end.
//
// Subcommands:
//   norm    evaluate one norm of a function file
//   sweep   Monte Carlo sweep over (n, m) grids, CSV out
//   fit     log-log scaling fit of a sweep CSV
//   check   hypothesis checkers on sign combinations
//   verify  lemma oracles driven by instance JSON files
//   signs   sign search for the worst-k relative-norm ratio
//
// Exit codes: 0 success, 1 input error, 2 internal invariant failure.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <iunorm/coeffs.hpp>
#include <iunorm/expr.hpp>
#include <iunorm/io.hpp>
#include <iunorm/mc.hpp>
#include <iunorm/norms.hpp>
#include <iunorm/systems.hpp>
#include <iunorm/verify.hpp>

namespace {

using json = nlohmann::json;
using namespace iunorm;

constexpr std::uint64_t kDefaultSeed = 0xC0FFEE;

std::string timestamp_line() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_output(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream os(out_path);
    if (!os) throw std::invalid_argument("cannot open " + out_path + " for writing");
    os << content;
}

// "64" | "64,128,256" | "64:1024:x2" | "2:10:+2"
std::vector<long> parse_range(const std::string& text) {
    std::vector<long> out;
    if (text.find(',') != std::string::npos) {
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(std::stol(tok));
        return out;
    }
    const auto c1 = text.find(':');
    if (c1 == std::string::npos) {
        out.push_back(std::stol(text));
        return out;
    }
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos) throw std::invalid_argument("range needs lo:hi:step, got " + text);
    const long lo = std::stol(text.substr(0, c1));
    const long hi = std::stol(text.substr(c1 + 1, c2 - c1 - 1));
    const std::string step = text.substr(c2 + 1);
    if (step.size() < 2 || (step[0] != 'x' && step[0] != '+'))
        throw std::invalid_argument("range step must be xK or +K, got " + step);
    const long k = std::stol(step.substr(1));
    if (step[0] == 'x') {
        if (k < 2) throw std::invalid_argument("geometric range factor must be >= 2");
        for (long v = lo; v <= hi; v *= k) out.push_back(v);
    } else {
        if (k < 1) throw std::invalid_argument("arithmetic range step must be >= 1");
        for (long v = lo; v <= hi; v += k) out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty range: " + text);
    return out;
}

ConcaveProfile parse_profile(const std::string& text) {
    if (text.rfind("power:", 0) == 0) return ConcaveProfile::power(std::stod(text.substr(6)));
    if (text.rfind("file:", 0) == 0) {
        std::ifstream is(text.substr(5));
        if (!is) throw std::invalid_argument("cannot open profile file " + text.substr(5));
        json j;
        is >> j;
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : j) pts.emplace_back(p[0].get<double>(), p[1].get<double>());
        return ConcaveProfile::tabulated(std::move(pts));
    }
    throw std::invalid_argument("profile must be power:GAMMA or file:PATH, got " + text);
}

NormKind parse_norm_kind(const std::string& kind, double p, long m, const std::string& profile) {
    if (kind == "l1") return NormKind::lp(1.0);
    if (kind == "l2") return NormKind::lp(2.0);
    if (kind == "sup") return NormKind::sup();
    if (kind == "lp") return NormKind::lp(p);
    if (kind == "m-infty") return NormKind::m_infty(m);
    if (kind == "star") return NormKind::star(m);
    if (kind == "prime") return NormKind::prime(m);
    if (kind == "marc") return NormKind::marc(parse_profile(profile));
    throw std::invalid_argument("unknown norm kind: " + kind);
}

mc::Ensemble build_ensemble(const mc::SystemSpec& spec, long n, int factor) {
    mc::SystemSpec s = spec;
    s.factor = factor;
    if (s.kind == mc::SystemSpec::Kind::file)
        return mc::Ensemble::explicit_system(io::load_system(s.path));
    return mc::Ensemble::from_spec(s, n);
}

FunctionSystem build_explicit_system(const mc::SystemSpec& spec, long n, int factor) {
    switch (spec.kind) {
        case mc::SystemSpec::Kind::rademacher: return rademacher_system(static_cast<int>(n));
        case mc::SystemSpec::Kind::trig:
            return trig_system(static_cast<int>(n), factor, spec.two_sided);
        case mc::SystemSpec::Kind::indicator: return indicator_system(static_cast<int>(n));
        case mc::SystemSpec::Kind::mixed:
            return mixed_system(static_cast<int>(n), spec.q, spec.normalize);
        case mc::SystemSpec::Kind::file: return io::load_system(spec.path);
    }
    throw std::invalid_argument("bad system spec");
}

verify::FiniteSpace finite_space_from_json(const json& j) {
    verify::FiniteSpace space;
    space.probs = j.at("atoms").get<std::vector<double>>();
    for (const auto& ev : j.at("events")) {
        std::uint64_t mask = 0;
        for (const auto& a : ev) mask |= std::uint64_t{1} << a.get<unsigned>();
        space.events.push_back(mask);
    }
    return space;
}

verify::DiscreteDist discrete_from_json(const json& j) {
    verify::DiscreteDist d;
    d.values = j.at("values").get<std::vector<double>>();
    d.probs = j.at("probs").get<std::vector<double>>();
    return d;
}

int run_verify(const std::string& oracle, const json& inst, std::int64_t trials,
               std::uint64_t seed, int threads, const std::string& out_path) {
    json rep;
    rep["oracle"] = oracle;
    rep["instance_descriptor"] = inst;
    json stats;
    bool hypothesis_ok = true, conclusion_ok = true;
    if (oracle == "lemma1") {
        const auto r = verify::lemma1_check(finite_space_from_json(inst), inst.at("kappa").get<double>());
        hypothesis_ok = r.hypothesis_ok;
        conclusion_ok = r.conclusion_ok;
        stats = {{"kappa", r.kappa},
                 {"pair_sum", r.pair_sum},
                 {"single_sum_sq", r.single_sum_sq},
                 {"union_prob", r.union_prob}};
    } else if (oracle == "tver") {
        std::vector<std::pair<double, double>> intervals;
        for (const auto& iv : inst.at("intervals"))
            intervals.emplace_back(iv[0].get<double>(), iv[1].get<double>());
        const auto r = verify::shift_lemma_check(discrete_from_json(inst.at("eta")),
                                                 discrete_from_json(inst.at("etac")), intervals);
        conclusion_ok = r.conclusion_ok;
        stats = {{"sup_shift_prob", r.sup_shift_prob},
                 {"best_shift", r.best_shift},
                 {"conv_prob", r.conv_prob}};
    } else if (oracle == "tver2") {
        const auto r = verify::indicator_sum_check(inst.at("T").get<std::vector<double>>(),
                                                   finite_space_from_json(inst),
                                                   inst.at("p").get<double>());
        hypothesis_ok = r.hypothesis_ok;
        conclusion_ok = r.conclusion_ok;
        stats = {{"total", r.total}, {"prob_low", r.prob_low}, {"p", r.p}};
    } else if (oracle == "geom") {
        std::vector<std::vector<double>> vectors;
        for (const auto& v : inst.at("vectors")) vectors.push_back(v.get<std::vector<double>>());
        const std::string nk = inst.value("norm", std::string("l2"));
        verify::VectorNorm norm = nk == "l1"   ? verify::norm_l1()
                               : nk == "linf" ? verify::norm_linf()
                               : nk == "wl1"  ? verify::norm_l1_weighted(
                                                     inst.at("weights").get<std::vector<double>>())
                                              : verify::norm_l2();
        const auto r = verify::geom_lemma_ratio(vectors, norm, inst.value("beta", 0.0),
                                                inst.value("budget", static_cast<long>(1000)), seed);
        const double cap = inst.value("C", 10.0);
        conclusion_ok = r.max_ratio <= cap * std::max(r.hypothesis_c, 1.0) + 1e-9;
        stats = {{"hypothesis_c", r.hypothesis_c},
                 {"hypothesis_exhaustive", r.hypothesis_exhaustive},
                 {"max_ratio", r.max_ratio},
                 {"coeff_trials", r.coeff_trials}};
    } else if (oracle == "clt") {
        const auto r = verify::clt_error(CoeffModel::parse(inst.at("model").get<std::string>()),
                                         inst.at("N").get<long>(), inst.value("dim", 1), seed,
                                         inst.value("trials", trials));
        conclusion_ok = r.dim != 1 ||
                        r.distance <= 0.5 / std::sqrt(static_cast<double>(r.n_terms)) + 1e-12;
        stats = {{"distance", r.distance},
                 {"distance_4n", r.distance_4n},
                 {"ratio", r.ratio},
                 {"exact", r.exact}};
    } else if (oracle == "gauss") {
        verify::GaussianCompareConfig cfg;
        cfg.m = inst.at("m").get<int>();
        cfg.alpha = inst.value("alpha", 1.0);
        cfg.r2 = inst.value("r2", 1.0);
        cfg.r_eff = inst.value("R", static_cast<double>(cfg.m));
        cfg.delta = inst.value("delta", 1.0);
        cfg.c0 = inst.value("c0", 1.0);
        if (inst.contains("cov")) {
            for (const auto& row : inst.at("cov"))
                cfg.covariance.push_back(row.get<std::vector<double>>());
        } else {
            cfg.equicorrelated = true;
            cfg.diag = inst.value("diag", 1.0);
            cfg.offdiag = inst.value("offdiag", 0.0);
        }
        const auto r = verify::gaussian_comparison(cfg, inst.value("trials", trials), seed, threads);
        hypothesis_ok = r.constraint_ok;
        conclusion_ok = true; // the lemma constant is nonconstructive; the ratio is reported raw
        stats = {{"P", r.log_gain},
                 {"threshold_z", r.threshold_z},
                 {"lhs_pair_sum", r.lhs_pair_sum},
                 {"rhs_single_sq", r.rhs_single_sq},
                 {"ratio", r.ratio},
                 {"ratio_stderr", r.ratio_stderr},
                 {"avg_offdiag", r.avg_offdiag},
                 {"trials", r.trials}};
    } else if (oracle == "transfer") {
        const mc::SystemSpec spec = mc::SystemSpec::parse(inst.at("system").get<std::string>());
        const auto ens = build_ensemble(spec, inst.at("n").get<long>(), inst.value("factor", 4));
        const auto r = verify::transfer_comparison(
            ens, CoeffModel::parse(inst.value("model", std::string("rademacher"))),
            inst.at("m").get<int>(), inst.value("alpha", 1.0), inst.value("trials", trials), seed,
            threads);
        conclusion_ok = true; // descriptive report
        stats = {{"P", r.log_gain},
                 {"max_marginal_gap", r.max_marginal_gap},
                 {"max_marginal_stderr", r.max_marginal_stderr},
                 {"max_joint_gap", r.max_joint_gap},
                 {"max_joint_stderr", r.max_joint_stderr},
                 {"eta_freq", r.eta_freq},
                 {"gauss_prob", r.gauss_prob},
                 {"excluded", r.excluded}};
    } else {
        throw std::invalid_argument("unknown oracle: " + oracle);
    }
    rep["hypothesis_ok"] = hypothesis_ok;
    rep["conclusion_ok"] = conclusion_ok;
    rep["statistics"] = stats;
    write_output(out_path, rep.dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"integral-uniform and rearrangement-invariant norms of step functions"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    std::uint64_t seed = kDefaultSeed;
    int threads = 0;
    bool no_timestamp = false;
    std::string out_path;
    app.add_option("--seed", seed, "global seed (default 0xC0FFEE)")->capture_default_str();
    app.add_option("--threads", threads, "worker cap; 0 = hardware (never changes results)");
    app.add_flag("--no-timestamp", no_timestamp, "omit the timestamp header line");
    app.add_option("--out", out_path, "output path (default stdout)");

    // norm
    auto* cmd_norm = app.add_subcommand("norm", "evaluate a norm of a function file");
    std::string norm_input, norm_kind = "l1", norm_profile = "power:0.5", norm_format = "plain";
    double norm_p = 1.0;
    long norm_m = 1;
    cmd_norm->add_option("--input", norm_input, "function JSON file")->required();
    cmd_norm->add_option("--kind", norm_kind, "l1|l2|sup|lp|m-infty|star|prime|marc");
    cmd_norm->add_option("--p", norm_p, "exponent for --kind lp");
    cmd_norm->add_option("--m", norm_m, "parameter m for the m-based norms");
    cmd_norm->add_option("--profile", norm_profile, "marcinkiewicz profile: power:GAMMA or file:PATH");
    cmd_norm->add_option("--format", norm_format, "plain|json");

    // sweep
    auto* cmd_sweep = app.add_subcommand("sweep", "Monte Carlo sweep over (n, m)");
    std::string sw_system = "rademacher", sw_coeffs = "rademacher", sw_norm = "m-infty";
    std::string sw_n = "64", sw_m = "1", sw_profile = "power:0.5", sw_weights = "ones";
    double sw_p = 2.0;
    long sw_trials = 200;
    int sw_factor = 4;
    cmd_sweep->add_option("--system", sw_system, "rademacher|trig|trig2|indicator|mixed:q=Q|file:PATH");
    cmd_sweep->add_option("--coeffs", sw_coeffs, "rademacher|gaussian|uniform-sym|two-point:V");
    cmd_sweep->add_option("--norm", sw_norm, "l1|l2|sup|lp|m-infty|star|prime|marc");
    cmd_sweep->add_option("--p", sw_p, "exponent for --norm lp");
    cmd_sweep->add_option("--n", sw_n, "n range: V | V1,V2,.. | lo:hi:xK | lo:hi:+K");
    cmd_sweep->add_option("--m", sw_m, "m range (for m-based norms)");
    cmd_sweep->add_option("--trials", sw_trials, "Monte Carlo trials per point")->capture_default_str();
    cmd_sweep->add_option("--factor", sw_factor, "trig oversampling factor")->capture_default_str();
    cmd_sweep->add_option("--profile", sw_profile, "marcinkiewicz profile");
    cmd_sweep->add_option("--weights", sw_weights, "ones|spike|geometric:R")->capture_default_str();

    // fit
    auto* cmd_fit = app.add_subcommand("fit", "log-log fit of a sweep CSV");
    std::string fit_in, fit_x = "n", fit_y = "mean";
    cmd_fit->add_option("--in", fit_in, "sweep CSV file")->required();
    cmd_fit->add_option("--x", fit_x, "abscissa expression over n, m (e.g. \"n*(1+ln m)\")");
    cmd_fit->add_option("--y", fit_y, "ordinate column (default mean)");

    // check
    auto* cmd_check = app.add_subcommand("check", "hypothesis checker");
    std::string ck_condition = "d", ck_system = "rademacher";
    long ck_n = 8, ck_budget = 1000;
    int ck_factor = 4;
    cmd_check->add_option("--condition", ck_condition, "b|bprime|d|dprime");
    cmd_check->add_option("--system", ck_system, "system spec");
    cmd_check->add_option("--n", ck_n, "system size");
    cmd_check->add_option("--budget", ck_budget, "sign/coefficient sampling budget");
    cmd_check->add_option("--factor", ck_factor, "trig oversampling factor");

    // verify
    auto* cmd_verify = app.add_subcommand("verify", "lemma oracle on an instance file");
    std::string vf_oracle, vf_instance;
    long vf_trials = 100000;
    cmd_verify->add_option("--oracle", vf_oracle, "lemma1|tver|tver2|geom|clt|gauss|transfer")->required();
    cmd_verify->add_option("--instance", vf_instance, "instance JSON file")->required();
    cmd_verify->add_option("--trials", vf_trials, "Monte Carlo trials where applicable");

    // signs
    auto* cmd_signs = app.add_subcommand("signs", "sign search for the worst-k prime-norm ratio");
    std::string sg_system = "rademacher";
    long sg_n = 16, sg_budget = 200;
    int sg_kmax = 4, sg_factor = 4;
    cmd_signs->add_option("--system", sg_system, "system spec");
    cmd_signs->add_option("--n", sg_n, "system size");
    cmd_signs->add_option("--kmax", sg_kmax, "largest k; checks m = 2^1..2^kmax");
    cmd_signs->add_option("--budget", sg_budget, "random restarts when not exhaustive");
    cmd_signs->add_option("--factor", sg_factor, "trig oversampling factor");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (cmd_norm->parsed()) {
            const StepFunction f = io::load_step(norm_input);
            const NormKind kind = parse_norm_kind(norm_kind, norm_p, norm_m, norm_profile);
            const double value = kind.evaluate(rearrangement(f));
            if (norm_format == "json") {
                json j{{"kind", kind.label()}, {"value", value}};
                if (kind.uses_m()) j["m"] = kind.m;
                if (kind.tag == NormKind::Tag::relative_star)
                    j["argmax_delta"] = relative_star_max(f, kind.m).argmax;
                if (kind.tag == NormKind::Tag::marcinkiewicz)
                    j["argmax_t"] = marcinkiewicz_max(f, kind.profile).argmax;
                j["config"] = {{"input", norm_input}, {"kind", norm_kind}, {"m", norm_m}, {"p", norm_p}};
                write_output(out_path, j.dump(2) + "\n");
            } else {
                write_output(out_path, mc::format_double(value) + "\n");
            }
            return 0;
        }

        if (cmd_sweep->parsed()) {
            mc::SweepSpec spec;
            spec.system = mc::SystemSpec::parse(sw_system);
            spec.system.factor = sw_factor;
            spec.model = CoeffModel::parse(sw_coeffs);
            spec.norm = parse_norm_kind(sw_norm, sw_p, 1, sw_profile);
            spec.ns = parse_range(sw_n);
            spec.ms = parse_range(sw_m);
            spec.weights = sw_weights;
            spec.trials = sw_trials;
            spec.seed = seed;
            spec.threads = threads;
            const auto rows = mc::run_sweep(spec);
            std::vector<std::string> header{
                "command=sweep",
                "system=" + spec.system.label(),
                "coeffs=" + spec.model.name(),
                "norm=" + spec.norm.label(),
                "n=" + sw_n,
                "m=" + sw_m,
                "weights=" + sw_weights,
                "trials=" + std::to_string(sw_trials),
                "seed=" + std::to_string(seed),
                "factor=" + std::to_string(sw_factor)};
            if (!no_timestamp) header.push_back("generated_at=" + timestamp_line());
            std::ostringstream os;
            mc::write_sweep_csv(os, rows, header);
            write_output(out_path, os.str());
            return 0;
        }

        if (cmd_fit->parsed()) {
            std::ifstream is(fit_in);
            if (!is) throw std::invalid_argument("cannot open " + fit_in);
            const auto rows = mc::read_sweep_csv(is);
            const Expr expr = Expr::parse(fit_x);
            std::vector<std::pair<double, double>> pts;
            for (const auto& r : rows) {
                if (r.flag.rfind("error", 0) == 0) continue;
                double y;
                if (fit_y == "mean") y = r.mean;
                else if (fit_y == "stderr") y = r.stderr_;
                else if (fit_y == "ci_low") y = r.ci_low;
                else if (fit_y == "ci_high") y = r.ci_high;
                else throw std::invalid_argument("unknown y column: " + fit_y);
                pts.emplace_back(expr(static_cast<double>(r.n), static_cast<double>(r.m)), y);
            }
            const ScalingFit fit = scaling_fit(pts, fit_x);
            json j{{"exponent", fit.exponent},
                   {"intercept", fit.intercept},
                   {"r_squared", fit.r_squared},
                   {"residual_max", fit.residual_max},
                   {"x_descriptor", fit.x_descriptor}};
            write_output(out_path, j.dump(2) + "\n");
            return 0;
        }

        if (cmd_check->parsed()) {
            const mc::SystemSpec spec = mc::SystemSpec::parse(ck_system);
            const FunctionSystem sys = build_explicit_system(spec, ck_n, ck_factor);
            const HypothesisReport rep =
                check_condition(sys, condition_from_string(ck_condition), ck_budget, seed);
            json j{{"condition", to_string(rep.condition)},
                   {"n", rep.n},
                   {"max_norm", rep.max_norm},
                   {"grid_p", rep.grid_p},
                   {"grid_M", rep.grid_M},
                   {"fitted_p", rep.fitted_p},
                   {"fitted_M", rep.fitted_M},
                   {"trials_used", rep.trials_used},
                   {"exhaustive", rep.exhaustive},
                   {"witness_signs", rep.witness_signs}};
            if (rep.condition == ConditionTag::d_prime) {
                j["square_norm"] = rep.square_norm;
                j["fitted_p2"] = rep.fitted_p2;
                j["fitted_M2"] = rep.fitted_M2;
            }
            j["config"] = {{"system", spec.label()}, {"condition", ck_condition},
                           {"n", ck_n}, {"budget", ck_budget}, {"seed", seed}};
            write_output(out_path, j.dump(2) + "\n");
            return 0;
        }

        if (cmd_verify->parsed()) {
            std::ifstream is(vf_instance);
            if (!is) throw std::invalid_argument("cannot open " + vf_instance);
            json inst;
            is >> inst;
            return run_verify(vf_oracle, inst, vf_trials, seed, threads, out_path);
        }

        if (cmd_signs->parsed()) {
            const mc::SystemSpec spec = mc::SystemSpec::parse(sg_system);
            const auto ens = build_ensemble(spec, sg_n, sg_factor);
            const auto rep = mc::sign_search(ens, sg_kmax, sg_budget, seed);
            json j{{"c0", rep.c0},
                   {"per_k", rep.per_k},
                   {"witness", rep.witness},
                   {"exhaustive", rep.exhaustive},
                   {"evaluations", rep.evaluations}};
            j["config"] = {{"system", spec.label()}, {"n", sg_n}, {"kmax", sg_kmax},
                           {"budget", sg_budget}, {"seed", seed}};
            write_output(out_path, j.dump(2) + "\n");
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
