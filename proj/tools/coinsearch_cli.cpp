// Command-line frontend: solve a protocol, run the filter, drive searches,
// canonicalize, and print the analytic bounds.

#include "coinsearch/filter.hpp"
#include "coinsearch/search.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace coinsearch;

namespace {

int exit_code_for(const FunnelReport& report) {
    return report.survivors.empty() ? 0 : 2;
}

std::vector<StrategyCode> parse_order(const std::vector<std::string>& names) {
    std::vector<StrategyCode> order;
    for (const auto& n : names) order.push_back(parse_strategy_code(n));
    return order;
}

std::int64_t parse_nu(const std::string& text) {
    const Rational nu = parse_rational(text);
    if (numerator(nu) != 1 || denominator(nu) < 1)
        throw std::invalid_argument("nu must be of the form 1/N");
    return denominator(nu).convert_to<std::int64_t>();
}

void emit_report(const FunnelReport& report, const std::string& out_path) {
    if (out_path.empty()) {
        write_report(report, std::cout);
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        write_report(report, out);
        std::cerr << "report written to " << out_path << "\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"search and analysis for bit-commitment coin-flipping protocols"};
    app.require_subcommand(1);

    // --- solve ---
    auto* solve = app.add_subcommand("solve", "optimal cheating probabilities and bias");
    std::string solve_file;
    double solve_tol = 1e-7;
    int solve_iters = 20000;
    solve->add_option("protocol", solve_file, "protocol JSON file")->required();
    solve->add_option("--tol", solve_tol, "Frank-Wolfe gap tolerance");
    solve->add_option("--max-iter", solve_iters, "iteration cap");

    // --- filter ---
    auto* filter = app.add_subcommand("filter", "run the strategy filter on one protocol");
    std::string filter_file;
    double filter_threshold = 0.7499;
    std::vector<std::string> filter_order;
    bool show_catalog = false;
    filter->add_option("protocol", filter_file, "protocol JSON file");
    filter->add_option("--threshold", filter_threshold, "rejection threshold");
    filter->add_option("--order", filter_order, "stage order, e.g. F1 F2 F3");
    filter->add_flag("--catalog", show_catalog, "print the strategy catalog and exit");

    // --- search ---
    auto* search = app.add_subcommand("search", "mesh or offset sweep");
    SearchConfig cfg;
    std::string nu_text = "1/5", out_path, order_csv;
    std::vector<std::string> search_order;
    bool use_offset = false;
    search->add_option("--rounds", cfg.rounds, "4 or 6")->required();
    search->add_option("--d-a", cfg.d_a, "per-round dimension of Alice's messages")->required();
    search->add_option("--d-b", cfg.d_b, "per-round dimension of Bob's messages")->required();
    search->add_option("--nu", nu_text, "mesh precision 1/N")->required();
    search->add_option("--threshold", cfg.threshold, "rejection threshold");
    search->add_option("--order", search_order, "stage order override");
    search->add_option("--offset-seed", cfg.offset_seed, "random-offset mode with this seed")
        ->each([&](const std::string&) { use_offset = true; });
    search->add_option("--shards", cfg.shards, "parallel shards");
    search->add_option("--solver-tol", cfg.solver_tol, "solver gap tolerance");
    search->add_option("--checkpoint", cfg.checkpoint_path, "checkpoint file base");
    search->add_option("--max-alpha-steps", cfg.max_alpha_steps,
                       "stop after this many alpha pairs per shard (resumable)");
    search->add_option("--out", out_path, "report CSV path");

    // --- zoom ---
    auto* zoom = app.add_subcommand("zoom", "search a small ball around one protocol");
    std::string zoom_center, zoom_radius = "2nu", zoom_step = "1/10", zoom_out;
    SearchConfig zcfg;
    zoom->add_option("--center", zoom_center, "center protocol JSON")->required();
    zoom->add_option("--radius", zoom_radius, "0, 1nu or 2nu")->required();
    zoom->add_option("--step", zoom_step, "zoom precision, e.g. 1/10000000000")->required();
    zoom->add_option("--threshold", zcfg.threshold, "rejection threshold");
    zoom->add_option("--shards", zcfg.shards, "parallel shards");
    zoom->add_option("--solver-tol", zcfg.solver_tol, "solver gap tolerance");
    zoom->add_option("--out", zoom_out, "report CSV path");

    // --- canonical ---
    auto* canonical_cmd = app.add_subcommand("canonical", "canonical form and applied moves");
    std::string canon_file;
    canonical_cmd->add_option("protocol", canon_file, "protocol JSON file")->required();

    // --- bound ---
    auto* bound = app.add_subcommand("bound", "analytic bounds");
    std::vector<std::int64_t> mesh_args;
    std::string qubit_flags;
    bound->add_option("--mesh", mesh_args, "D N: mesh-approximation gap")->expected(2);
    bound->add_option("--qubit", qubit_flags, "a,b flags, e.g. true,true");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*solve) {
            const ProtocolParams params = finalize(load_protocol_file(solve_file));
            const BiasResult r = solve_bias(params, solve_tol, solve_iters);
            const char* names[4] = {"P_A0", "P_A1", "P_B0", "P_B1"};
            for (int k = 0; k < 4; ++k)
                std::printf("%s = %.9f  (gap %.2e, %d iterations)\n", names[k],
                            r.certs[k].value, r.certs[k].gap, r.certs[k].iterations);
            std::printf("bias = %.9f\n", r.bias);
            return 0;
        }
        if (*filter) {
            if (show_catalog) {
                std::printf("code,formula,party,outcome,family,needs_solver\n");
                for (const auto& s : strategy_catalog())
                    std::printf("%s,%s,%s,%d,%d,%d\n", s.name, s.formula_id,
                                s.party == Party::Alice ? "alice" : "bob", s.outcome,
                                s.family, s.needs_solver ? 1 : 0);
                return 0;
            }
            if (filter_file.empty()) throw std::invalid_argument("filter: missing protocol file");
            const ProtocolParams params = finalize(load_protocol_file(filter_file));
            const auto order = filter_order.empty()
                                   ? default_filter_order(2 * params.spec.n + 2)
                                   : parse_order(filter_order);
            const FilterOutcome out =
                run_filter(params, order, filter_threshold, default_solver_hook(params));
            for (const auto& [code, value] : out.values)
                std::printf("%-6s %.9f\n", stage_info(code).name, value);
            if (out.rejected_at)
                std::printf("rejected at %s (> %g)\n", stage_info(*out.rejected_at).name,
                            filter_threshold);
            else
                std::printf("passed all stages (threshold %g)\n", filter_threshold);
            return out.passed ? 2 : 0; // a passing protocol is a survivor
        }
        if (*search) {
            cfg.N = parse_nu(nu_text);
            cfg.mode = use_offset ? SearchMode::Offset : SearchMode::Mesh;
            if (!search_order.empty()) cfg.order = parse_order(search_order);
            const FunnelReport report = run_search(cfg);
            emit_report(report, out_path);
            return exit_code_for(report);
        }
        if (*zoom) {
            zcfg.mode = SearchMode::Zoom;
            zcfg.zoom_center = load_protocol_file(zoom_center);
            zcfg.rounds = zcfg.zoom_center->rounds;
            zcfg.zoom_step = parse_rational(zoom_step);
            if (zoom_radius == "0")
                zcfg.zoom_radius_steps = 0;
            else if (zoom_radius == "1nu" || zoom_radius == "nu")
                zcfg.zoom_radius_steps = 1;
            else if (zoom_radius == "2nu")
                zcfg.zoom_radius_steps = 2;
            else
                throw std::invalid_argument("zoom: radius must be 0, 1nu or 2nu");
            const FunnelReport report = run_search(zcfg);
            emit_report(report, zoom_out);
            return exit_code_for(report);
        }
        if (*canonical_cmd) {
            const ProtocolParams params = finalize(load_protocol_file(canon_file));
            const CanonicalForm canon = canonicalize(params);
            save_protocol(canon.params, std::cout);
            std::printf("swapped_alpha = %s\nswapped_beta  = %s\n",
                        canon.applied.swapped_alpha ? "yes" : "no",
                        canon.applied.swapped_beta ? "yes" : "no");
            auto print_perms = [](const char* label,
                                  const std::vector<std::vector<int>>& perms) {
                std::printf("%s:", label);
                for (const auto& p : perms) {
                    std::printf(" (");
                    for (std::size_t i = 0; i < p.size(); ++i)
                        std::printf("%s%d", i ? " " : "", p[i]);
                    std::printf(")");
                }
                std::printf("\n");
            };
            print_perms("a_perms", canon.applied.a_perms);
            print_perms("b_perms", canon.applied.b_perms);
            return 0;
        }
        if (*bound) {
            if (!mesh_args.empty()) {
                const BoundReport r = mesh_gap_bound(mesh_args[0], mesh_args[1]);
                std::printf("mesh_gap = %.9f\nmin_N_for_claim = %lld\n%s\n", r.mesh_gap,
                            static_cast<long long>(r.min_N_for_claim), r.context.c_str());
                return 0;
            }
            if (!qubit_flags.empty()) {
                const auto comma = qubit_flags.find(',');
                if (comma == std::string::npos)
                    throw std::invalid_argument("bound --qubit needs two comma-separated flags");
                auto truthy = [](const std::string& s) { return s == "true" || s == "1"; };
                const bool a = truthy(qubit_flags.substr(0, comma));
                const bool b = truthy(qubit_flags.substr(comma + 1));
                std::printf("qubit_lower_bound(%d,%d) = %.6f\n", a, b,
                            qubit_lower_bound(a, b));
                return 0;
            }
            throw std::invalid_argument("bound: pass --mesh D N or --qubit a,b");
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
