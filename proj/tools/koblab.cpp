// koblab <experiment> --plan plan.json [--out DIR] [--threads N] [--allow-violations] [--override-grid-budget]
//
// Exit status: 0 success, 1 some verdict is "violated" (unless --allow-violations), 2 errors.

#include <koblab/errors.hpp>
#include <koblab/parallel.hpp>
#include <koblab/plan.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"koblab: numerical experiments on Kobayashi geometry near boundary points"};
    app.set_version_flag("--version", "koblab 1.0");

    std::string experiment, plan_file, out_dir;
    unsigned threads = 0;
    bool allow_violations = false, override_budget = false;
    app.add_option("experiment", experiment, "experiment to run")
        ->required()
        ->check(CLI::IsMember(koblab::experiment_names()));
    app.add_option("--plan", plan_file, "plan document (JSON)")->required();
    app.add_option("--out", out_dir, "output directory (overrides plan.out)");
    app.add_option("--threads", threads, "worker threads, 0 = machine parallelism")->default_val(0);
    app.add_flag("--allow-violations", allow_violations, "exit 0 even when a verdict is violated");
    app.add_flag("--override-grid-budget", override_budget, "build graphs beyond grid.node_budget");
    CLI11_PARSE(app, argc, argv);

    try {
        koblab::set_thread_count(threads);
        auto plan = koblab::load_plan(plan_file, experiment);
        plan.grid.override_budget = override_budget;
        if (!out_dir.empty()) plan.out = out_dir;

        const auto bundle = koblab::run_plan(plan);
        const auto files = koblab::emit_reports(bundle, plan.out);
        for (const auto& r : bundle.reports) std::cout << r.name << ": " << r.verdict << "\n";
        std::cout << files.size() << " file(s) written to " << plan.out << "\n";
        if (bundle.any_violated() && !allow_violations) {
            std::cerr << "koblab: a verdict is violated (use --allow-violations to exit 0)\n";
            return 1;
        }
        return 0;
    } catch (const koblab::ParseError& e) {
        std::cerr << "koblab: plan error at " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "koblab: " << e.what() << "\n";
    }
    return 2;
}
