// Command-line front end. Every machine output is JSON or CSV, written to
// --out or stdout. Exit codes: 0 success, 1 a check failed, 2 invalid input,
// 3 a resource cap was hit.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cempac/bounds.hpp"
#include "cempac/cem.hpp"
#include "cempac/harness.hpp"
#include "cempac/io.hpp"
#include "cempac/lower_bound.hpp"
#include "cempac/mdp.hpp"
#include "cempac/reference.hpp"
#include "cempac/sampling.hpp"
#include "cempac/ttm.hpp"
#include "cempac/worlds.hpp"

using namespace cempac;
using nlohmann::json;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string out;
    Caps caps;
};

Caps load_caps(const std::string& path) {
    Caps caps;
    if (path.empty()) return caps;
    const json j = read_json_file(path);
    if (!j.is_object()) throw InvalidInput("caps file must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number_unsigned()) throw InvalidInput("cap '" + key + "' must be a non-negative integer");
        const auto v = value.get<std::uint64_t>();
        if (key == "policies") caps.policies = v;
        else if (key == "worlds") caps.worlds = v;
        else if (key == "batches") caps.batches = v;
        else if (key == "tree_nodes") caps.tree_nodes = v;
        else if (key == "sample_budget") caps.sample_budget = v;
        else if (key == "exact_cdf_trials") caps.exact_cdf_trials = v;
        else throw InvalidInput("unknown cap '" + key + "'");
    }
    return caps;
}

void emit(const Globals& g, const json& j) {
    const std::string text = j.dump(2) + "\n";
    if (g.out.empty()) {
        std::cout << text;
    } else {
        write_text_file(g.out, text);
    }
}

std::optional<int> parse_horizon(const std::string& text) {
    if (text == "inf") return std::nullopt;
    try {
        std::size_t used = 0;
        const int h = std::stoi(text, &used);
        if (used == text.size() && h >= 1) return h;
    } catch (const std::exception&) {
    }
    throw InvalidInput("horizon must be a positive integer or 'inf'");
}

FamilyMember parse_member(const std::string& text) {
    if (text.empty() || text == "base") return std::nullopt;
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw InvalidInput("member must be 'base' or 'i,j'");
    return std::make_pair(std::stoi(text.substr(0, comma)), std::stoi(text.substr(comma + 1)));
}

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto end = comma == std::string::npos ? text.size() : comma;
        if (end > start) out.push_back(text.substr(start, end - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_double(const std::string& text) {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw InvalidInput("not a number: " + text);
    return v;
}

json values_json(const ValueTable& v) {
    json j;
    to_json(j, v);
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    Globals g;
    int exit_code = 0;

    CLI::App app{"Certainty-equivalence and trajectory-tree PAC tooling with world-set verification."};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", g.seed, "Base seed for every random draw")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads for trials")->check(CLI::Range(1U, 1024U))->capture_default_str();
    app.add_option_function<std::string>(
        "--caps", [&](const std::string& path) { g.caps = load_caps(path); },
        "JSON file overriding enumeration and sample caps");
    app.add_option("--out", g.out, "Output file (stdout when omitted)");

    // gen-mdp
    auto* gen = app.add_subcommand("gen-mdp", "Write a random MDP or a fixed instance as MDP JSON");
    std::string gen_kind = "nonstationary", gen_horizon = "2", gen_preset = "random";
    RandomMdpOptions gen_opts;
    gen->add_option("--kind", gen_kind)->check(CLI::IsMember({"stationary", "nonstationary"}))->capture_default_str();
    gen->add_option("--states", gen_opts.num_states)->capture_default_str();
    gen->add_option("--actions", gen_opts.num_actions)->capture_default_str();
    gen->add_option("--horizon", gen_horizon, "Positive integer or 'inf'")->capture_default_str();
    gen->add_option("--discount", gen_opts.discount)->capture_default_str();
    gen->add_option("--preset", gen_preset, "'random' or 'sample-table' (the fixed 2x2x3 skeleton)")
        ->check(CLI::IsMember({"random", "sample-table"}))
        ->capture_default_str();
    gen->callback([&] {
        if (gen_preset == "sample-table") {
            emit(g, sample_table_skeleton());
            return;
        }
        gen_opts.kind = kind_from_string(gen_kind);
        gen_opts.horizon = parse_horizon(gen_horizon);
        emit(g, random_mdp(gen_opts, g.seed));
    });

    // sample
    auto* smp = app.add_subcommand("sample", "Draw N next-state samples per tuple");
    std::string smp_mdp;
    int smp_n = 1;
    bool smp_plain = false, smp_table = false;
    smp->add_option("--mdp", smp_mdp, "MDP JSON file");
    smp->add_option("--n", smp_n, "Samples per tuple")->capture_default_str();
    smp->add_flag("--plain", smp_plain, "Store samples as a plain JSON array");
    smp->add_flag("--sample-table", smp_table, "Emit the fixed 2x2x3 three-sample dataset instead");
    smp->callback([&] {
        Dataset d;
        if (smp_table) {
            d = sample_table_dataset();
        } else {
            if (smp_mdp.empty()) throw InvalidInput("--mdp is required");
            d = sample_dataset(read_mdp_file(smp_mdp), smp_n, g.seed, g.caps);
        }
        emit(g, dataset_to_json(d, smp_plain));
    });

    // solve
    auto* solve = app.add_subcommand("solve", "Run a planner and write the returned policy");
    solve->require_subcommand(1);
    solve->fallthrough();
    std::string sv_dataset, sv_mdp;
    auto add_cem = [&](const std::string& name, bool stationary) {
        auto* c = solve->add_subcommand(name, stationary ? "Certainty equivalence on pooled stationary estimates"
                                                         : "Certainty equivalence on time-indexed estimates");
        c->add_option("--dataset", sv_dataset)->required();
        c->add_option("--mdp", sv_mdp, "Skeleton MDP (rewards, horizon, discount)")->required();
        c->callback([&, stationary] {
            const Dataset d = read_dataset_file(sv_dataset);
            const MdpSpec skeleton = read_mdp_file(sv_mdp);
            const Solution sol = stationary ? cem_s_solve(d, skeleton) : cem_ns_solve(d, skeleton);
            emit(g, json(sol.policy));
        });
    };
    add_cem("cem-ns", false);
    add_cem("cem-s", true);
    auto* ttm = solve->add_subcommand("ttm", "Trajectory-tree selection over all Markovian policies");
    int ttm_root = 0;
    double ttm_eps = 0.0, ttm_delta = 0.0;
    std::optional<std::uint64_t> ttm_trees;
    ttm->add_option("--mdp", sv_mdp)->required();
    ttm->add_option("--root", ttm_root)->capture_default_str();
    ttm->add_option("--eps", ttm_eps)->required();
    ttm->add_option("--delta", ttm_delta)->required();
    ttm->add_option("--trees", ttm_trees, "Number of trees (default: two-sided Hoeffding count)");
    ttm->callback([&] {
        const MdpSpec m = read_mdp_file(sv_mdp);
        std::vector<Policy> policies;
        PolicyEnumerator it = enumerate_policies(m, Kind::nonstationary, g.caps.policies);
        while (it.next()) policies.push_back(it.current());
        const std::uint64_t trees =
            ttm_trees ? *ttm_trees : ttm_tree_count(m.v_max, ttm_eps, ttm_delta, policies.size());
        const TtmResult r = ttm_select(m, ttm_root, policies, trees, g.seed, g.caps.tree_nodes);
        json j = json(policies[r.index]);
        j["meta"] = {{"trees", trees}, {"policy_index", r.index}, {"estimate", r.averages[r.index]}};
        emit(g, j);
    });

    // eval
    auto* ev = app.add_subcommand("eval", "Exact value of a policy (or the optimum) on an MDP");
    std::string ev_mdp, ev_policy;
    ev->add_option("--mdp", ev_mdp)->required();
    ev->add_option("--policy", ev_policy, "Policy JSON (optimal policy when omitted)");
    ev->callback([&] {
        const MdpSpec m = read_mdp_file(ev_mdp);
        const Solution best = optimal_policy(m);
        json j;
        if (ev_policy.empty()) {
            j = {{"policy", best.policy}, {"value", values_json(best.values)}, {"gap", 0.0}};
        } else {
            const Policy pi = read_json_file(ev_policy).get<Policy>();
            const ValueTable v = evaluate_policy(m, pi);
            double gap = 0.0;
            for (int s = 0; s < m.num_states; ++s) gap = std::max(gap, best.values.at(s, 0) - v.at(s, 0));
            j = {{"value", values_json(v)}, {"optimal_value", values_json(best.values)}, {"gap", gap}};
        }
        emit(g, j);
    });

    // worlds verify
    auto* worlds = app.add_subcommand("worlds", "World-set analysis on a dataset");
    worlds->require_subcommand(1);
    worlds->fallthrough();
    auto* wv = worlds->add_subcommand("verify", "Check world-level identities on a dataset");
    std::string wv_dataset, wv_mdp, wv_check = "all";
    int wv_steps = 0;
    wv->add_option("--dataset", wv_dataset)->required();
    wv->add_option("--mdp", wv_mdp, "Skeleton MDP")->required();
    wv->add_option("--steps", wv_steps, "World length in steps (required for stationary datasets)");
    wv->add_option("--check", wv_check)
        ->check(CLI::IsMember({"consistency", "batches", "counting", "biased-fraction", "all"}))
        ->capture_default_str();
    wv->callback([&] {
        std::set<std::string> scope;
        if (wv_check == "all") {
            scope.insert(world_checks().begin(), world_checks().end());
        } else {
            scope.insert(wv_check);
        }
        const VerificationReport r =
            verify_worlds(read_dataset_file(wv_dataset), read_mdp_file(wv_mdp), wv_steps, scope, g.caps);
        emit(g, to_json(r));
        if (!r.passed()) exit_code = 1;
    });

    // bounds
    auto* bounds = app.add_subcommand("bounds", "Sample-size formulas and concentration bounds");
    bounds->require_subcommand(1);
    bounds->fallthrough();
    PacParams bp;
    std::string bp_horizon;
    std::optional<int> bp_hbar;
    auto add_pac_flags = [&](CLI::App* c) {
        c->add_option("--eps", bp.eps)->required();
        c->add_option("--delta", bp.delta)->required();
        c->add_option("--vmax", bp.v_max)->required();
        c->add_option("--states", bp.num_states)->required();
        c->add_option("--actions", bp.num_actions)->required();
    };
    auto* b_ns = bounds->add_subcommand("cem-ns", "Samples per (s, a, t) for the time-indexed estimator");
    add_pac_flags(b_ns);
    b_ns->add_option("--horizon", bp_horizon)->required();
    b_ns->callback([&] {
        bp.horizon = parse_horizon(bp_horizon);
        emit(g, to_json(cem_ns_sample_size(bp)));
    });
    auto* b_s = bounds->add_subcommand("cem-s", "Samples per (s, a) for the stationary estimator");
    add_pac_flags(b_s);
    b_s->add_option("--discount", bp.discount)->required();
    b_s->add_option("--hbar", bp_hbar, "Use this truncation horizon instead of the derived one");
    b_s->callback([&] {
        bp.horizon = std::nullopt;
        const SampleSize s = bp_hbar ? cem_s_sample_size_with_hbar(bp, *bp_hbar) : cem_s_sample_size(bp);
        emit(g, to_json(s));
    });
    auto* b_h = bounds->add_subcommand("hoeffding", "Tail bound for a weighted average of dependent means");
    std::uint64_t bh_m = 1;
    double bh_gap = 0.0, bh_lo = 0.0, bh_hi = 1.0;
    b_h->add_option("--m", bh_m)->required();
    b_h->add_option("--gap", bh_gap)->required();
    b_h->add_option("--lo", bh_lo)->capture_default_str();
    b_h->add_option("--hi", bh_hi)->capture_default_str();
    b_h->callback([&] {
        emit(g, {{"m", bh_m}, {"gap", bh_gap}, {"lo", bh_lo}, {"hi", bh_hi},
                 {"bound", hoeffding_dep_tail(bh_m, bh_gap, bh_lo, bh_hi)}});
    });
    auto* b_b = bounds->add_subcommand("biased-fraction", "Value error bound from biased stationary worlds");
    int bb_sa = 1, bb_hbar = 1;
    std::uint64_t bb_n = 1;
    double bb_vmax = 1.0;
    b_b->add_option("--sa", bb_sa, "Number of (s, a) pairs")->required();
    b_b->add_option("--hbar", bb_hbar)->required();
    b_b->add_option("--n", bb_n)->required();
    b_b->add_option("--vmax", bb_vmax)->required();
    b_b->callback([&] {
        emit(g, {{"sa", bb_sa}, {"hbar", bb_hbar}, {"N", bb_n}, {"vmax", bb_vmax},
                 {"bound", biased_fraction_bound(bb_sa, bb_hbar, bb_n, bb_vmax)}});
    });

    // lb-family
    auto* lb = app.add_subcommand("lb-family", "Hard-instance family and its lower-bound ingredients");
    lb->require_subcommand(1);
    lb->fallthrough();
    LowerBoundFamily fam;
    std::string fam_member;
    auto add_family_flags = [&](CLI::App* c) {
        c->add_option("--K", fam.K)->capture_default_str();
        c->add_option("--L", fam.L)->capture_default_str();
        c->add_option("--p", fam.p)->required();
        c->add_option("--alpha", fam.alpha)->capture_default_str();
        c->add_option("--H", fam.H)->required();
        c->add_option("--member", fam_member, "'base' or 'i,j' (0-based bumped pair)");
    };
    auto* lb_build = lb->add_subcommand("build", "Export a family member as MDP JSON");
    add_family_flags(lb_build);
    lb_build->callback([&] { emit(g, build_family_member(fam, parse_member(fam_member))); });
    auto* lb_cf = lb->add_subcommand("closed-form", "Closed-form and backward-induction values at every pair");
    add_family_flags(lb_cf);
    lb_cf->callback([&] {
        const FamilyMember which = parse_member(fam_member);
        const Solution sol = optimal_policy(build_family_member(fam, which));
        json rows = json::array();
        double worst = 0.0;
        for (int i = 0; i < fam.K; ++i) {
            for (int j = 0; j < fam.L; ++j) {
                const double closed = closed_form_value(fam, which, i, j);
                const double induced = sol.values.at(fam.y_state(i, j), 0);
                worst = std::max(worst, std::abs(closed - induced));
                rows.push_back({{"i", i}, {"j", j}, {"closed_form", closed}, {"backward_induction", induced}});
            }
        }
        emit(g, {{"values", rows}, {"max_discrepancy", worst}});
        if (worst > 1e-9) exit_code = 1;
    });
    auto* lb_gap = lb->add_subcommand("gap", "Value gap between a bumped pair and a base pair");
    int gap_h = 201;
    double gap_eps = 0.1;
    lb_gap->add_option("--H", gap_h)->required();
    lb_gap->add_option("--eps", gap_eps)->required();
    lb_gap->callback([&] {
        const GapCertificate c = gap_certificate(gap_h, gap_eps);
        emit(g, to_json(c));
        if (!c.holds) exit_code = 1;
    });
    auto* lb_ch = lb->add_subcommand("chernoff", "Probability of the binomial concentration event");
    std::uint64_t ch_l = 1;
    double ch_p = 0.6, ch_alpha = 0.0, ch_c1 = 20.0, ch_c2 = 6.0;
    lb_ch->add_option("--l", ch_l)->required();
    lb_ch->add_option("--p", ch_p)->required();
    lb_ch->add_option("--alpha", ch_alpha)->required();
    lb_ch->add_option("--c1", ch_c1)->capture_default_str();
    lb_ch->add_option("--c2", ch_c2)->capture_default_str();
    lb_ch->callback([&] {
        const ChernoffEvent e =
            chernoff_event_probability(ch_l, ch_p, ch_alpha, ch_c1, ch_c2, g.caps.exact_cdf_trials, g.seed);
        emit(g, to_json(e));
        if (e.probability < e.bound) exit_code = 1;
    });
    auto* lb_lr = lb->add_subcommand("likelihood", "Likelihood ratio between bumped and base pairs");
    std::optional<std::uint64_t> lr_s;
    lb_lr->add_option("--l", ch_l)->required();
    lb_lr->add_option("--p", ch_p)->required();
    lb_lr->add_option("--alpha", ch_alpha)->required();
    lb_lr->add_option("--c1", ch_c1)->capture_default_str();
    lb_lr->add_option("--c2", ch_c2)->capture_default_str();
    lb_lr->add_option("--s", lr_s, "Evaluate at one success count instead of the whole event");
    lb_lr->callback([&] {
        const ChernoffEvent e =
            chernoff_event_probability(ch_l, ch_p, ch_alpha, ch_c1, ch_c2, g.caps.exact_cdf_trials, g.seed);
        const double log_floor = std::log(2.0 / ch_c2) -
                                 ch_c1 * ch_alpha * ch_alpha * static_cast<double>(ch_l) / (ch_p * (1.0 - ch_p));
        if (lr_s) {
            const double lr = log_likelihood_ratio(*lr_s, ch_l, ch_p, ch_alpha);
            emit(g, {{"s", *lr_s}, {"log_ratio", lr}, {"log_floor", log_floor}, {"holds", lr >= log_floor}});
            if (lr < log_floor) exit_code = 1;
            return;
        }
        const auto upper = static_cast<std::uint64_t>(
            std::min(static_cast<double>(ch_l), std::max(0.0, std::floor(e.threshold))));
        double worst = std::numeric_limits<double>::infinity();
        std::uint64_t worst_s = 0;
        for (std::uint64_t s = 0; s <= upper; ++s) {
            const double lr = log_likelihood_ratio(s, ch_l, ch_p, ch_alpha);
            if (lr < worst) {
                worst = lr;
                worst_s = s;
            }
        }
        emit(g, {{"event_upper", upper}, {"min_log_ratio", worst}, {"argmin_s", worst_s},
                 {"log_floor", log_floor}, {"holds", worst >= log_floor}});
        if (worst < log_floor) exit_code = 1;
    });
    auto* lb_fl = lb->add_subcommand("floor", "Per-pair sample floor and the family total");
    int fl_h = 201, fl_k = 1, fl_l = 1;
    double fl_eps = 0.1, fl_delta = 0.05;
    lb_fl->add_option("--H", fl_h)->required();
    lb_fl->add_option("--eps", fl_eps)->required();
    lb_fl->add_option("--delta", fl_delta)->required();
    lb_fl->add_option("--K", fl_k)->capture_default_str();
    lb_fl->add_option("--L", fl_l)->capture_default_str();
    lb_fl->callback([&] { emit(g, to_json(sample_floor(fl_h, fl_eps, fl_delta, fl_k, fl_l))); });

    // pac-trials
    auto* pac = app.add_subcommand("pac-trials", "Seeded PAC trials against exact values");
    std::string pac_mdp, pac_solver = "cem-ns";
    TrialConfig tc;
    bool pac_summary = false;
    pac->add_option("--mdp", pac_mdp)->required();
    pac->add_option("--solver", pac_solver)->check(CLI::IsMember({"cem-ns", "cem-s", "ttm"}))->capture_default_str();
    pac->add_option("--eps", tc.eps)->required();
    pac->add_option("--delta", tc.delta)->required();
    pac->add_option("--n", tc.n_override, "Samples per tuple (trees for ttm); formula when omitted");
    pac->add_option("--trials", tc.trials)->capture_default_str();
    pac->add_option("--root", tc.root, "Root state for ttm")->capture_default_str();
    pac->add_flag("--summary", pac_summary, "Omit per-trial records");
    pac->callback([&] {
        const MdpSpec m = read_mdp_file(pac_mdp);
        tc.solver = solver_from_string(pac_solver);
        tc.base_seed = g.seed;
        tc.threads = g.threads;
        tc.caps = g.caps;
        const auto start = std::chrono::steady_clock::now();
        const TrialReport r = run_pac_trials(m, tc);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        emit(g, to_json(r, !pac_summary));
        std::fprintf(stderr, "wall time %.3f s\n", elapsed.count());
    });

    // sweep
    auto* sw = app.add_subcommand("sweep", "Resumable CSV sweep over solvers, eps, delta and N");
    std::string sw_mdp, sw_solvers = "cem-ns", sw_eps, sw_delta, sw_n = "formula";
    TrialConfig sw_base;
    sw->add_option("--mdp", sw_mdp)->required();
    sw->add_option("--solvers", sw_solvers, "Comma-separated solver list")->capture_default_str();
    sw->add_option("--eps", sw_eps, "Comma-separated values")->required();
    sw->add_option("--delta", sw_delta, "Comma-separated values")->required();
    sw->add_option("--n", sw_n, "Comma-separated sample sizes; 'formula' for the default")->capture_default_str();
    sw->add_option("--trials", sw_base.trials)->capture_default_str();
    sw->add_option("--root", sw_base.root)->capture_default_str();
    sw->callback([&] {
        if (g.out.empty()) throw InvalidInput("sweep needs --out");
        SweepGrid grid;
        for (const auto& s : split(sw_solvers)) grid.solvers.push_back(solver_from_string(s));
        for (const auto& s : split(sw_eps)) grid.eps.push_back(parse_double(s));
        for (const auto& s : split(sw_delta)) grid.delta.push_back(parse_double(s));
        for (const auto& s : split(sw_n)) {
            if (s == "formula") {
                grid.n.emplace_back(std::nullopt);
            } else {
                grid.n.emplace_back(std::stoull(s));
            }
        }
        sw_base.base_seed = g.seed;
        sw_base.threads = g.threads;
        sw_base.caps = g.caps;
        const auto start = std::chrono::steady_clock::now();
        const std::size_t computed = sweep(read_mdp_file(sw_mdp), grid, sw_base, g.out);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        std::fprintf(stderr, "computed %zu rows, wall time %.3f s\n", computed, elapsed.count());
    });

    // verify-all
    auto* va = app.add_subcommand("verify-all", "Run the verification suite");
    std::vector<std::string> va_checks;
    va->add_option("--check", va_checks, "Restrict to these checks (repeatable)");
    va->add_flag_callback("--list", [&] {
        for (const auto& name : verification_checks()) std::cout << name << "\n";
        std::exit(0);
    });
    va->callback([&] {
        std::set<std::string> scope(va_checks.begin(), va_checks.end());
        if (va_checks.empty()) scope.insert(verification_checks().begin(), verification_checks().end());
        const VerificationReport r = run_verification_suite(scope, g.caps, g.seed);
        emit(g, to_json(r));
        for (const auto& c : r.checks) {
            std::fprintf(stderr, "%-24s %s\n", c.name.c_str(), c.passed ? "pass" : "FAIL");
        }
        if (!r.passed()) exit_code = 1;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const CapExceeded& e) {
        std::fprintf(stderr, "error: %s (required: %s)\n", e.what(), e.required().c_str());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return exit_code;
}
