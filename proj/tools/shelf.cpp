#include "shelf/config.hpp"
#include "shelf/error.hpp"
#include "shelf/service.hpp"
#include "shelf/synthetic.hpp"
#include "shelf/workspace.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace shelf;

namespace {

HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grocery product recognition: patch mining, classification, word index and active learning."};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    ConfigValues flags;
    std::string dataset, workdir, variant, log_level = "info";
    std::uint64_t seed = 0;
    unsigned workers = 0;
    double tau_flag = 0.0;
    app.add_option("-c,--config", config_path, "Config file (key = value)");
    app.add_option("--dataset", dataset, "Dataset root (config: dataset)");
    app.add_option("--workdir", workdir, "Artifact directory (config: workdir)");
    app.add_option("--seed", seed, "Random seed (config: seed)");
    app.add_option("--workers", workers, "Worker threads (config: workers)");
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error")->capture_default_str();

    auto* synth = app.add_subcommand("synth", "Write a synthetic catalog");
    std::string synth_out;
    int synth_classes = 4, synth_per_class = 20, synth_shelves = 40;
    double synth_shift = 0.0;
    bool synth_logo = false;
    synth->add_option("out", synth_out, "Output directory")->required();
    synth->add_option("--classes", synth_classes)->capture_default_str();
    synth->add_option("--per-class", synth_per_class)->capture_default_str();
    synth->add_option("--shelves", synth_shelves, "Number of test composites")->capture_default_str();
    synth->add_option("--domain-shift", synth_shift, "Extra test degradation in [0, 1]")->capture_default_str();
    synth->add_flag("--shared-logo", synth_logo, "Classes 0 and 1 share a logo glyph");

    auto* mine = app.add_subcommand("mine", "Mine the detector bank");
    auto* train = app.add_subcommand("train", "Train the classifier of the configured variant");
    train->add_option("--variant", variant, "FULL, DP_SVM, DP_HS, DP_PYR_HS or BASELINE");

    auto* classify = app.add_subcommand("classify", "Classify one image");
    std::string image_path;
    classify->add_option("image", image_path, "Image file")->required()->check(CLI::ExistingFile);
    auto* tau_opt = classify->add_option("--tau", tau_flag, "Notification threshold (config: tau)");
    classify->add_option("--variant", variant);

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate on the test manifest");
    evaluate->add_option("--variant", variant);
    auto* pr = app.add_subcommand("pr-curve", "Precision-recall sweep over the classification score");
    pr->add_option("--variant", variant);

    auto* build_index = app.add_subcommand("build-index", "Build the word-to-class index");
    auto* query = app.add_subcommand("query-word", "Look a word up in the index");
    std::string token;
    query->add_option("token", token)->required();

    auto* active = app.add_subcommand("active-learn", "Run the labeling protocol and write a learning curve");
    SplitSpec spec{180, 500, 20, 10, 0};
    bool random_selection = false, margin = false;
    active->add_option("--learning", spec.learning_size)->capture_default_str();
    active->add_option("--testing", spec.testing_size)->capture_default_str();
    active->add_option("--step", spec.step)->capture_default_str();
    active->add_option("--runs", spec.runs)->capture_default_str();
    active->add_flag("--random", random_selection, "Random instead of uncertainty selection");
    active->add_flag("--margin", margin, "Confidence = margin to the runner-up class");
    active->add_option("--variant", variant);

    auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
    std::string host;
    int port = -1;
    serve->add_option("--host", host);
    serve->add_option("--port", port);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help() << '\n';
        const int code = app.exit(e);
        return code == 0 ? 2 : code;
    }
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*synth) {
            SyntheticParams p;
            p.num_classes = synth_classes;
            p.per_class = synth_per_class;
            p.shelf_images = synth_shelves;
            p.seed = seed;
            p.domain_shift = synth_shift;
            if (synth_logo) p.shared_logos = {{0, 1}};
            const Catalog cat = generate_synthetic(p, synth_out);
            print({{"command", "synth"}, {"root", synth_out}, {"classes", cat.classes}, {"test_images", cat.test_images.size()}});
            return 0;
        }

        PipelineConfig config;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw Error(ErrorCode::NotFound, "cannot open config file " + config_path);
            std::stringstream buffer;
            buffer << in.rdbuf();
            apply_config(config, parse_config_text(buffer.str()));
        }
        apply_config(config, environment_overrides());
        ConfigValues cli;
        if (!dataset.empty()) cli["dataset"] = dataset;
        if (!workdir.empty()) cli["workdir"] = workdir;
        if (app.count("--seed")) cli["seed"] = std::to_string(seed);
        if (workers) cli["workers"] = std::to_string(workers);
        if (!variant.empty()) cli["variant"] = variant;
        if (!host.empty()) cli["host"] = host;
        if (port >= 0) cli["port"] = std::to_string(port);
        if (*tau_opt) cli["tau"] = std::to_string(tau_flag);
        apply_config(config, cli);
        validate_config(config);

        Workspace ws(config);
        if (*mine) print(ws.mine());
        else if (*train) print(ws.train());
        else if (*evaluate) print(ws.evaluate());
        else if (*pr) print(ws.pr_curve());
        else if (*build_index) print(ws.build_index());
        else if (*query) {
            const auto index = WordClassIndex::load(ws.index_path());
            nlohmann::json report = query_json(index, query_word(index, token));
            print(report);
            report["command"] = "query-word";
            report["token"] = token;
            write_json(ws.report_path("query_word"), report);
        } else if (*classify) {
            const auto state = ws.load_model_state();
            const GrayImage image = limit_height(read_gray(image_path), kMaxTestHeight);
            const ClassifyResult r = state->classify(image, config.tau);
            nlohmann::json report = classify_json(r);
            report["command"] = "classify";
            report["image"] = image_path;
            report["tau"] = config.tau;
            write_json(ws.report_path("classify"), report);
            if (r.notified) std::cout << r.class_name << ' ' << r.score << '\n';
            else std::cout << "no confident product (best " << r.class_name << ' ' << r.score << " <= tau " << config.tau << ")\n";
        } else if (*active) {
            spec.seed = config.seed;
            ProtocolOptions opt;
            opt.selection = random_selection ? SelectionRule::Random : SelectionRule::Uncertainty;
            opt.confidence = margin ? ConfidenceRule::Margin : ConfidenceRule::TopValue;
            opt.workers = config.workers;
            const auto report = ws.active_learn(spec, opt);
            for (const auto& p : report["points"]) std::cout << p["count"] << ',' << p["mean"] << ',' << p["std"] << '\n';
        } else if (*serve) {
            auto service = service_from_workspace(ws);
            HttpServer server(*service);
            const int bound = server.bind(config.host, config.port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            write_json(ws.report_path("serve"), {{"command", "serve"}, {"host", config.host}, {"port", bound},
                                                 {"model_version", service->model()->version}});
            spdlog::info("serving on http://{}:{}", config.host, bound);
            server.listen();
            g_server = nullptr;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
