// Command-line pipeline: generate datasets, train the surrogate models,
// predict on individual scenarios, and evaluate the comparison metrics.

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fracnet/harness.hpp"

namespace {

using namespace fracnet;

std::set<std::string> parse_models(const std::string& csv) {
    static const std::set<std::string> known = {"spa", "op", "mcpic", "nfpz", "epz"};
    std::set<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!known.count(item)) throw CLI::ValidationError("unknown model: " + item);
        out.insert(item);
    }
    return out;
}

harness::HarnessConfig load_config(const std::string& path, unsigned long seed, int jobs) {
    json j = json::object();
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) throw CLI::ValidationError("cannot open config: " + path);
        j = json::parse(is);
    }
    auto cfg = harness::HarnessConfig::from_json(j);
    if (seed != static_cast<unsigned long>(-1)) cfg.seed = seed;
    if (jobs > 0) cfg.jobs = jobs;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reduced-order crack-network failure models and evaluation pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string out_dir = "out";
    std::string config_path;
    std::string models_csv = "spa,op,mcpic,nfpz,epz";
    unsigned long seed = static_cast<unsigned long>(-1);
    int jobs = 0;
    long predict_seed = -1;

    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", seed, "base scenario seed");
    app.add_option("--jobs", jobs, "scenario-level parallelism");
    app.add_option("--models", models_csv, "comma-separated model list")
        ->capture_default_str();

    auto* generate = app.add_subcommand("generate", "build the scenario/trace dataset");
    auto* train = app.add_subcommand("train", "fit models on the training split");
    auto* predict = app.add_subcommand("predict", "predict one scenario by seed");
    predict->add_option("--scenario-seed", predict_seed, "seed of the scenario to predict")
        ->required();
    auto* evaluate = app.add_subcommand("evaluate", "score models on the validation split");
    auto* report = app.add_subcommand("report", "print the evaluation summary");

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = load_config(config_path, seed, jobs);
        auto models = parse_models(models_csv);
        const std::filesystem::path out(out_dir);

        if (generate->parsed()) {
            auto ds = harness::build_dataset(cfg, out);
            int failed = 0;
            for (const auto& e : ds.validation) failed += e.trace.failure_time ? 1 : 0;
            std::cout << "wrote " << ds.train.size() << " training and "
                      << ds.validation.size() << " validation scenarios to " << out_dir
                      << " (" << failed << "/" << ds.validation.size()
                      << " validation runs failed)\n";
        } else if (train->parsed()) {
            auto ds = harness::load_dataset(cfg, out);
            auto trained = harness::train_models(ds, cfg, models);
            harness::save_models(trained, out);
            std::cout << "trained models saved to " << (out / "models").string() << '\n';
        } else if (predict->parsed()) {
            std::ifstream is(out / "scenarios" /
                             (harness::detail::seed_name(predict_seed) + ".json"));
            if (!is) throw std::runtime_error("scenario not found; run generate first");
            Scenario s = scenario_from_json(json::parse(is));
            auto trained = harness::load_models(out, models);
            json result = {{"seed", s.seed}};
            if (models.count("spa")) {
                auto p = spa::predict(s);
                result["spa"] = {{"path", p.path.crack_ids}, {"weight", p.weight}};
            }
            if (models.count("op") && trained.op_model) {
                auto p = op::simulate_op(s, *trained.op_model, cfg.oracle.horizon());
                json jp = {{"path", p.path.crack_ids}, {"band_y", p.band_y}};
                if (p.failure_time) jp["failure_time"] = *p.failure_time;
                result["op"] = jp;
            }
            if (models.count("mcpic") && trained.mcpic_model) {
                auto p = mcpic::predict_failure(s, *trained.mcpic_model);
                json jp = {{"path", p.path.crack_ids}};
                if (p.failure_time) jp["failure_time"] = *p.failure_time;
                result["mcpic"] = jp;
            }
            if (models.count("nfpz")) {
                auto p = nfpz::predict(s);
                json jp = {{"fallback", p.fallback}};
                if (!p.paths.empty()) {
                    jp["path"] = p.paths.front().crack_ids;
                    jp["weight"] = p.weights.front();
                }
                result["nfpz"] = jp;
            }
            if (models.count("epz") && trained.epz_params) {
                auto p = epz::predict_epz(s, *trained.epz_params);
                json jp = {{"path", p.path.crack_ids}};
                if (p.failure_time) jp["failure_time"] = *p.failure_time;
                result["epz"] = jp;
                harness::detail::write_file(
                    out / "report" /
                        ("epz_events_" + harness::detail::seed_name(s.seed) + ".jsonl"),
                    epz::events_to_jsonl(p.state));
            }
            std::cout << result.dump(2) << '\n';
        } else if (evaluate->parsed()) {
            auto ds = harness::load_dataset(cfg, out);
            auto trained = harness::load_models(out, models);
            auto rep = harness::evaluate(ds, trained, cfg, models);
            harness::emit_report(rep, ds, out);
            std::cout << harness::table1_csv(rep);
        } else if (report->parsed()) {
            std::ifstream is(out / "report" / "report.json");
            if (!is) throw std::runtime_error("no report found; run evaluate first");
            json j = json::parse(is);
            std::cout << "category sizes: " << j.at("category_sizes").dump() << '\n';
            std::cout << "match counts:   " << j.at("match_counts").dump() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
