// SPDX-License-Identifier: Apache-2.0
//
// slotflow command line front end. Subcommands:
//   plan    pick a batch and block partition for a model
//   run     execute a deployment scenario end to end
//   bench   sweep batch sizes and emit the predicted cost curve as CSV
//   approx  fit a named activation on an interval and emit coefficients
//
// Exit codes: 0 success, 1 unreadable file, 2 no feasible plan,
// 3 access violation or aborted protocol, 4 malformed input or shape error.

#include <cstdint>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slotflow/slotflow.hpp"

namespace {

using namespace slotflow;

void emit(const std::string &text, const std::string &out_path) {
    if (out_path.empty()) {
        std::cout << text << '\n';
    } else {
        save_text(text, out_path);
    }
}

struct CommonArgs {
    std::string model_path;
    std::string params_path;
    std::string out_path;
    int scenario = 1;
    std::size_t parties = 3;
    std::uint64_t seed = 0;
    std::size_t max_split = 64;
    bool verbose = false;
};

CostOptions cost_options_for(const CommonArgs &a, bool centralized) {
    CostOptions c;
    c.weights_encrypted = a.scenario != 1;
    c.collective_bootstrap = a.scenario == 3 && !centralized;
    c.n_parties = a.parties;
    return c;
}

int cmd_plan(const CommonArgs &a, std::size_t n_hint, bool centralized) {
    ModelSpec model = load_model(a.model_path);
    HeParams params = load_params(a.params_path);
    PlanSearchOptions opts;
    opts.n_hint = n_hint;
    opts.max_split = a.max_split;
    opts.cost = cost_options_for(a, centralized);
    BlockPlan plan = plan_search(model, params, opts);
    if (a.verbose) {
        std::cerr << "plan: batch " << plan.batch << ", "
                  << plan.predicted_cost.total_mults() << " mults\n";
    }
    emit(plan_json(plan), a.out_path);
    return 0;
}

int cmd_run(const CommonArgs &a, const std::string &batch_path, const std::string &plan_path,
            const std::string &transcript_path, bool centralized, double latency_ms,
            double jitter_ms) {
    ModelSpec model = load_model(a.model_path);
    BatchFile batch = load_batch(batch_path);
    if (batch.shape.d() != model.d_in()) {
        throw ShapeError("run: batch samples have " + std::to_string(batch.shape.d()) +
                         " features, model expects " + std::to_string(model.d_in()));
    }
    ScenarioConfig cfg;
    cfg.scenario = a.scenario;
    cfg.n_parties = a.parties;
    cfg.params = load_params(a.params_path);
    if (!plan_path.empty()) {
        cfg.plan = load_plan(plan_path);
    }
    if (centralized) {
        cfg.collective_bootstrap = false;
    }
    cfg.seed = a.seed;
    cfg.latency_ms = latency_ms;
    cfg.jitter_ms = jitter_ms;
    cfg.max_split = a.max_split;
    RunResult result = run_scenario(cfg, model, batch.data);
    if (a.verbose) {
        std::cerr << "run: " << batch.shape.n << " samples in " << result.chunks
                  << " chunk(s), " << result.counters.total_mults() << " mults\n";
    }
    if (!transcript_path.empty()) {
        save_transcript(result.transcript, transcript_path);
    }
    emit(results_json(result, transcript_path), a.out_path);
    return 0;
}

int cmd_bench(const CommonArgs &a, const std::vector<std::size_t> &batches, bool centralized) {
    ModelSpec model = load_model(a.model_path);
    HeParams params = load_params(a.params_path);
    std::ostringstream csv;
    csv << "batch,total_mults,amortized_mults,bootstraps,rounds\n";
    csv.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t b : batches) {
        PlanSearchOptions opts;
        opts.n_hint = b;
        opts.max_split = a.max_split;
        opts.cost = cost_options_for(a, centralized);
        BlockPlan plan = plan_search(model, params, opts);
        const OpCounters &c = plan.predicted_cost;
        csv << b << ',' << c.total_mults() << ','
            << static_cast<double>(c.total_mults()) / static_cast<double>(b) << ','
            << c.bootstraps << ',' << c.protocol_rounds << '\n';
    }
    emit(csv.str(), a.out_path);
    return 0;
}

int cmd_approx(const std::string &function, int degree, const std::vector<double> &interval,
               const std::string &out_path) {
    ActLayer act;
    act.function = function;
    act.degree = degree;
    act.a = interval.at(0);
    act.b = interval.at(1);
    ChebApprox fit = fit_activation(act);
    emit(approx_json(function, fit), out_path);
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Packed encrypted inference planner and simulator"};
    app.require_subcommand(1);

    CommonArgs common;
    auto add_common = [&](CLI::App *sub, bool with_scenario) {
        sub->add_option("--model", common.model_path, "Model JSON path")->required();
        sub->add_option("--params", common.params_path, "Scheme parameter JSON path")->required();
        sub->add_option("--out", common.out_path, "Output path (default stdout)");
        if (with_scenario) {
            sub->add_option("--scenario", common.scenario, "Deployment scenario")
                ->check(CLI::Range(1, 3));
            sub->add_option("--parties", common.parties, "Cohort size for scenario 3");
        }
        sub->add_option("--seed", common.seed, "Deterministic seed");
        sub->add_option("--max-split", common.max_split, "Planner grid split bound");
        sub->add_flag("-v,--verbose", common.verbose, "Progress on stderr");
    };

    CLI::App *plan = app.add_subcommand("plan", "Choose a batch and block partition");
    std::size_t n_hint = 0;
    bool centralized = false;
    add_common(plan, true);
    plan->add_option("--batch", n_hint, "Batch size hint (0 = optimize freely)");
    plan->add_flag("--centralized", centralized, "Price centralized refreshes in scenario 3");

    CLI::App *run = app.add_subcommand("run", "Execute a scenario on a batch file");
    std::string batch_path, plan_path, transcript_path;
    double latency_ms = 0.0, jitter_ms = 0.0;
    add_common(run, true);
    run->add_option("--batch", batch_path, "Batch JSON/CSV path")->required();
    run->add_option("--plan", plan_path, "Evaluation plan JSON (default: search)");
    run->add_option("--transcript", transcript_path, "Write protocol transcript JSONL here");
    run->add_option("--latency", latency_ms, "Per-message latency in virtual ms");
    run->add_option("--jitter", jitter_ms, "Latency jitter bound in virtual ms");
    run->add_flag("--centralized", centralized, "Centralized refreshes in scenario 3");

    CLI::App *bench = app.add_subcommand("bench", "Predicted cost over a batch size sweep");
    std::vector<std::size_t> batches{1, 2, 4, 8, 16, 32, 64};
    add_common(bench, true);
    bench->add_option("--batches", batches, "Comma separated batch sizes")->delimiter(',');
    bench->add_flag("--centralized", centralized, "Price centralized refreshes in scenario 3");

    CLI::App *approx = app.add_subcommand("approx", "Chebyshev-fit a named activation");
    std::string function;
    int degree = 0;
    std::vector<double> interval{-8.0, 8.0};
    approx->add_option("--function", function, "relu, silu, sigmoid, tanh, square or identity")
        ->required();
    approx->add_option("--degree", degree, "Interpolation degree")->required();
    approx->add_option("--interval", interval, "Approximation interval a,b")
        ->delimiter(',')
        ->expected(2);
    std::string approx_out;
    approx->add_option("--out", approx_out, "Output path (default stdout)");

    try {
        app.parse(argc, argv);
        if (plan->parsed()) {
            return cmd_plan(common, n_hint, centralized);
        }
        if (run->parsed()) {
            return cmd_run(common, batch_path, plan_path, transcript_path, centralized,
                           latency_ms, jitter_ms);
        }
        if (bench->parsed()) {
            return cmd_bench(common, batches, centralized);
        }
        if (approx->parsed()) {
            return cmd_approx(function, degree, interval, approx_out);
        }
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    } catch (const Infeasible &e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return 2;
    } catch (const ProtocolAborted &e) {
        std::cerr << "protocol aborted: " << e.what() << '\n';
        return 3;
    } catch (const AccessViolation &e) {
        std::cerr << "access violation: " << e.what() << '\n';
        return 3;
    } catch (const WrongKey &e) {
        std::cerr << "access violation: " << e.what() << '\n';
        return 3;
    } catch (const ShapeError &e) {
        std::cerr << "bad input: " << e.what() << '\n';
        return 4;
    } catch (const DomainError &e) {
        std::cerr << "bad input: " << e.what() << '\n';
        return 4;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
