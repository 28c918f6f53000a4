#include "semcache/client.hpp"
#include "semcache/core.hpp"
#include "semcache/csv.hpp"
#include "semcache/metrics.hpp"
#include "semcache/protocol.hpp"
#include "semcache/savings.hpp"
#include "semcache/scorer.hpp"
#include "semcache/server.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

constexpr const char* kVersion = "0.1.0";

using nlohmann::json;

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Reproducibility record written next to each subcommand's outputs.
struct RunManifest {
    std::string subcommand;
    json config = json::object();
    std::optional<std::uint64_t> seed;
    std::string started = iso_timestamp();
    std::vector<std::string> outputs;

    void write(const std::filesystem::path& primary_output) const {
        json doc{{"subcommand", subcommand},
                 {"version", kVersion},
                 {"config", config},
                 {"started", started},
                 {"finished", iso_timestamp()},
                 {"outputs", outputs}};
        if (seed) doc["seed"] = *seed;
        auto path = primary_output;
        path += ".manifest.json";
        std::ofstream out(path);
        out << doc.dump(2) << "\n";
    }
};

std::string format_double(double value) {
    std::ostringstream out;
    out.precision(12);
    out << value;
    return out.str();
}

int run_validate(const std::string& manifest) {
    const auto dataset = semcache::load_dataset(manifest);
    std::size_t pairs = 0;
    for (const auto& [scope, matrix] : dataset.matrices) {
        pairs += matrix.size() * (matrix.size() - 1) / 2;
    }
    std::cout << "ok: " << dataset.website_names.size() << " websites, "
              << dataset.matrices.size() << " categories, " << dataset.images.size()
              << " images, " << pairs << " unordered pairs\n";
    return 0;
}

int run_model(int n, std::vector<double> u, double s, double p, double i,
              std::vector<int> thresholds, int xmax, int overhead, const std::string& out) {
    semcache::SavingsParams params;
    params.comparisons = n;
    if (u.size() == 1) {
        params.useful = {u[0], u[0], u[0], u[0]};
    } else if (u.size() == 4) {
        params.useful = {u[0], u[1], u[2], u[3]};
    } else {
        throw CLI::ValidationError("--u", "expects 1 or 4 comma-separated fractions");
    }
    params.avg_image_bytes = s;
    params.page_weight_bytes = p;
    params.images_per_article = i;
    params.id_overhead_bytes = overhead;
    params.validate();

    if (thresholds.empty()) thresholds = {1, 2, 3, 4};
    if (xmax < 0) xmax = n;

    RunManifest manifest;
    manifest.subcommand = "model";
    manifest.config = {{"N", n},        {"u", u},       {"S", s},
                       {"P", p},        {"I", i},       {"t", thresholds},
                       {"xmax", xmax},  {"overhead", overhead}};

    for (int t : thresholds) {
        const auto curve = semcache::savings_curve(params, t, xmax);
        std::vector<std::vector<std::string>> rows{{"x", "p", "mu_bytes", "m_fraction"}};
        for (const auto& point : curve) {
            rows.push_back({std::to_string(point.x), format_double(point.hit_probability),
                            format_double(point.mu_bytes),
                            format_double(point.page_weight_fraction)});
        }
        const std::string path = out + "_t" + std::to_string(t) + ".csv";
        semcache::csv::write_file(path, rows);
        manifest.outputs.push_back(path);
        std::cout << "wrote " << path << "\n";
    }
    manifest.write(out);
    return 0;
}

int run_simulate(const std::string& dataset_path, std::vector<int> fw_list,
                 std::vector<int> ac_list, int trials, int threshold, std::uint64_t seed,
                 bool overhead, std::size_t lru_cap, const std::string& out) {
    const auto dataset = semcache::load_dataset(dataset_path);
    if (fw_list.empty()) fw_list = {1};
    if (ac_list.empty()) ac_list = {10};

    RunManifest manifest;
    manifest.subcommand = "simulate";
    manifest.seed = seed;
    manifest.config = {{"dataset", dataset_path}, {"fw", fw_list},
                       {"ac", ac_list},           {"trials", trials},
                       {"threshold", threshold},  {"overhead", overhead},
                       {"lru", lru_cap}};

    std::vector<std::vector<std::string>> rows{
        {"fw", "ac", "trial", "exact_bytes", "semantic_bytes", "savings_pct"}};
    std::vector<std::vector<std::string>> summary{
        {"fw", "ac", "trials", "mean", "q1", "median", "q3", "min", "max"}};

    for (int fw : fw_list) {
        for (int ac : ac_list) {
            semcache::SimConfig config;
            config.frequented_websites = fw;
            config.requests = ac;
            config.trials = trials;
            config.threshold = threshold;
            config.include_overhead = overhead;
            config.rng_seed = seed;
            if (lru_cap > 0) config.policy = semcache::CachePolicy::lru(lru_cap);

            const auto result = semcache::run_simulation(dataset, config);
            for (std::size_t trial = 0; trial < result.trials.size(); ++trial) {
                const auto& record = result.trials[trial];
                rows.push_back({std::to_string(fw), std::to_string(ac), std::to_string(trial),
                                std::to_string(record.exact_bytes),
                                std::to_string(record.semantic_bytes),
                                format_double(record.savings_pct)});
            }
            const auto cell = semcache::summarize(result);
            summary.push_back({std::to_string(fw), std::to_string(ac), std::to_string(trials),
                               format_double(cell.mean), format_double(cell.q1),
                               format_double(cell.median), format_double(cell.q3),
                               format_double(cell.min), format_double(cell.max)});
        }
    }

    semcache::csv::write_file(out, rows);
    manifest.outputs.push_back(out);
    std::filesystem::path summary_path(out);
    summary_path.replace_extension();
    summary_path += "_summary.csv";
    semcache::csv::write_file(summary_path, summary);
    manifest.outputs.push_back(summary_path.string());
    manifest.write(out);
    std::cout << "wrote " << out << " and " << summary_path.string() << "\n";
    return 0;
}

int run_serve(const std::string& config_path) {
    const auto config = semcache::load_server_config(config_path);
    const auto dataset = semcache::load_dataset(config.dataset_path);
    semcache::CacheServer server(dataset, config.blob_root, config.log_path);
    std::cerr << "serving " << dataset.images.size() << " images on " << config.bind_host << ":"
              << config.bind_port << "\n";
    if (!server.serve(config.bind_host, config.bind_port)) {
        std::cerr << "error: failed to bind " << config.bind_host << ":" << config.bind_port
                  << "\n";
        return 1;
    }
    return 0;
}

int run_score(const std::string& dataset_path, const std::string& pairs_path,
              const std::string& scorer, const std::string& template_name, int attempts,
              const std::string& out) {
    const auto dataset = semcache::load_dataset(dataset_path);
    const auto pairs = semcache::csv::read_file(pairs_path);
    if (pairs.empty() || pairs[0] != std::vector<std::string>{"pair_id", "website", "category",
                                                              "id_a", "id_b"}) {
        throw std::runtime_error("pairs file needs header pair_id,website,category,id_a,id_b");
    }

    semcache::LlmScoreOptions llm_options;
    llm_options.prompt = template_name == "base" ? semcache::PromptKind::Base
                                                 : semcache::PromptKind::MetricDriven;
    llm_options.max_attempts = attempts;
    llm_options.pipeline = scorer == "llm-two-step" ? semcache::PipelineKind::TwoStep
                                                    : semcache::PipelineKind::Direct;
    std::optional<semcache::HttpEndpoint> endpoint;
    if (scorer == "llm-direct" || scorer == "llm-two-step") {
        endpoint.emplace(semcache::EndpointConfig::from_env());
    }

    std::vector<std::vector<std::string>> rows{{"pair_id", "score", "justification"}};
    for (std::size_t r = 1; r < pairs.size(); ++r) {
        const auto& row = pairs[r];
        if (row.size() != 5) {
            throw std::runtime_error("pairs row " + std::to_string(r) + " has " +
                                     std::to_string(row.size()) + " fields, expected 5");
        }
        const semcache::ScopeKey scope{row[1], row[2]};
        const auto* image_a = dataset.find_image(scope, static_cast<semcache::ImageId>(
                                                            std::stoul(row[3])));
        const auto* image_b = dataset.find_image(scope, static_cast<semcache::ImageId>(
                                                            std::stoul(row[4])));
        if (!image_a || !image_b) {
            throw std::runtime_error("pair " + row[0] + ": unknown image in " + row[1] + "/" +
                                     row[2]);
        }
        const auto pair = semcache::make_pair_context(*image_a, *image_b);

        semcache::Rating rating;
        if (scorer == "ground-truth") {
            const auto* matrix = dataset.find_matrix(scope);
            rating = semcache::score_ground_truth(*matrix, pair);
        } else if (scorer == "heuristic") {
            rating = semcache::score_heuristic(pair);
        } else {
            rating = semcache::score_llm(*endpoint, &*endpoint, pair, llm_options);
        }
        rows.push_back({row[0], std::to_string(rating.score), rating.justification});
    }

    semcache::csv::write_file(out, rows);
    RunManifest manifest;
    manifest.subcommand = "score";
    manifest.config = {{"dataset", dataset_path},
                       {"pairs", pairs_path},
                       {"scorer", scorer},
                       {"template", template_name},
                       {"attempts", attempts}};
    manifest.outputs.push_back(out);
    manifest.write(out);
    std::cout << "wrote " << out << " (" << rows.size() - 1 << " pairs)\n";
    return 0;
}

int run_evaluate(const std::string& pred_path, const std::string& out,
                 const std::string& confusion_out, const std::string& normalize) {
    const auto rows = semcache::csv::read_file(pred_path);
    if (rows.empty() || rows[0] != std::vector<std::string>{"pair_id", "predicted", "truth"}) {
        throw std::runtime_error("predictions file needs header pair_id,predicted,truth");
    }
    semcache::RatingSeries series;
    std::vector<int> rater_a;
    std::vector<int> rater_b;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const int predicted = std::stoi(rows[r].at(1));
        const int truth = std::stoi(rows[r].at(2));
        series.push_back({predicted, truth});
        rater_a.push_back(predicted);
        rater_b.push_back(truth);
    }

    const auto prf = semcache::weighted_prf(series);
    const auto kappa_linear = semcache::weighted_kappa(series, semcache::KappaWeighting::Linear);
    const auto kappa_quadratic =
        semcache::weighted_kappa(series, semcache::KappaWeighting::Quadratic);

    json report{{"count", series.size()},
                {"nrmse", semcache::nrmse(series)},
                {"weighted_precision", prf.precision},
                {"weighted_recall", prf.recall},
                {"weighted_f1", prf.f1},
                {"weighted_kappa_linear", kappa_linear ? json(*kappa_linear) : json(nullptr)},
                {"weighted_kappa_quadratic",
                 kappa_quadratic ? json(*kappa_quadratic) : json(nullptr)},
                {"krippendorff_alpha_ordinal",
                 semcache::krippendorff_alpha_ordinal(rater_a, rater_b)}};

    const auto mode = normalize == "none" ? semcache::ConfusionNormalize::None
                                          : semcache::ConfusionNormalize::Row;
    const auto confusion = semcache::confusion_matrix(series, mode);
    std::vector<std::vector<std::string>> confusion_rows{
        {"truth", "pred_0", "pred_1", "pred_2", "pred_3", "pred_4", "zero_support"}};
    for (int row = 0; row < semcache::kNumClasses; ++row) {
        std::vector<std::string> line{std::to_string(row)};
        for (int col = 0; col < semcache::kNumClasses; ++col) {
            line.push_back(format_double(
                confusion.cells[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)]));
        }
        line.push_back(confusion.zero_support[static_cast<std::size_t>(row)] ? "1" : "0");
        confusion_rows.push_back(std::move(line));
    }

    std::ofstream report_file(out);
    report_file << report.dump(2) << "\n";
    semcache::csv::write_file(confusion_out, confusion_rows);

    RunManifest manifest;
    manifest.subcommand = "evaluate";
    manifest.config = {{"predictions", pred_path}, {"normalize", normalize}};
    manifest.outputs = {out, confusion_out};
    manifest.write(out);
    std::cout << report.dump(2) << "\n";
    return 0;
}

int run_usefraction(const std::string& dataset_path, int threshold, const std::string& out) {
    const auto dataset = semcache::load_dataset(dataset_path);
    std::vector<int> thresholds;
    if (threshold == 0) {
        thresholds = {1, 2, 3, 4};
    } else {
        thresholds = {threshold};
    }

    std::vector<std::string> header{"website", "category", "images", "inter_article_pairs"};
    for (int t : thresholds) header.push_back("u" + std::to_string(t));
    std::vector<std::vector<std::string>> rows{header};

    std::vector<double> totals(thresholds.size(), 0.0);
    for (const auto& [scope, matrix] : dataset.matrices) {
        std::uint64_t inter_article = 0;
        const auto& ids = matrix.ids();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            for (std::size_t j = i + 1; j < ids.size(); ++j) {
                if (matrix.article_of(ids[i]) != matrix.article_of(ids[j])) ++inter_article;
            }
        }
        std::vector<std::string> row{scope.website, scope.category,
                                     std::to_string(matrix.size()),
                                     std::to_string(inter_article)};
        for (std::size_t i = 0; i < thresholds.size(); ++i) {
            const double u = semcache::useful_fraction(matrix, thresholds[i]);
            totals[i] += u;
            row.push_back(format_double(u));
        }
        rows.push_back(std::move(row));
    }

    std::vector<std::string> mean_row{"(mean)", "", "", ""};
    for (double total : totals) {
        mean_row.push_back(format_double(total / static_cast<double>(dataset.matrices.size())));
    }
    rows.push_back(std::move(mean_row));

    if (out.empty()) {
        for (const auto& row : rows) std::cout << semcache::csv::join_row(row);
    } else {
        semcache::csv::write_file(out, rows);
        RunManifest manifest;
        manifest.subcommand = "usefraction";
        manifest.config = {{"dataset", dataset_path}, {"t", threshold}};
        manifest.outputs = {out};
        manifest.write(out);
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

int run_cost(int in_tokens, int out_tokens, const std::string& prices_path,
             const std::string& out) {
    auto table = semcache::default_price_table();
    if (!prices_path.empty()) {
        std::ifstream in(prices_path);
        if (!in) throw std::runtime_error("cannot open " + prices_path);
        json doc;
        in >> doc;
        table.clear();
        for (const auto& [name, entry] : doc.items()) {
            semcache::CostModel model;
            model.input_price_per_token = entry.at("input_price_per_token").get<double>();
            model.output_price_per_token = entry.at("output_price_per_token").get<double>();
            table.emplace_back(name, model);
        }
    }

    std::vector<std::vector<std::string>> rows{
        {"model", "input_cost", "output_cost", "total_cost"}};
    for (auto& [name, model] : table) {
        model.in_tokens = in_tokens;
        model.out_tokens = out_tokens;
        rows.push_back({name, format_double(model.in_tokens * model.input_price_per_token),
                        format_double(model.out_tokens * model.output_price_per_token),
                        format_double(semcache::cost_per_comparison(model))});
    }

    if (out.empty()) {
        for (const auto& row : rows) std::cout << semcache::csv::join_row(row);
    } else {
        semcache::csv::write_file(out, rows);
        RunManifest manifest;
        manifest.subcommand = "cost";
        manifest.config = {{"in_tokens", in_tokens}, {"out_tokens", out_tokens}};
        manifest.outputs = {out};
        manifest.write(out);
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semantic image cache toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // validate
    std::string validate_manifest;
    auto* validate = app.add_subcommand("validate", "load and validate a dataset manifest");
    validate->add_option("manifest", validate_manifest, "dataset manifest JSON")->required();

    // model
    int model_n = 164;
    std::vector<double> model_u;
    double model_s = 0.0;
    double model_p = 0.0;
    double model_i = 0.0;
    std::vector<int> model_t;
    int model_xmax = -1;
    int model_overhead = semcache::kIdOverheadBytes;
    std::string model_out = "savings";
    auto* model = app.add_subcommand("model", "emit analytic byte-savings curves as CSV");
    model->add_option("--N", model_n, "average comparisons per category")->required();
    model->add_option("--u", model_u, "useful-comparison fraction(s): one value or u1,u2,u3,u4")
        ->required()
        ->delimiter(',');
    model->add_option("--S", model_s, "average image size in bytes")->required();
    model->add_option("--P", model_p, "average page weight in bytes")->required();
    model->add_option("--I", model_i, "average images per article")->required();
    model->add_option("--t", model_t, "threshold(s) 1..4, default all")->delimiter(',');
    model->add_option("--xmax", model_xmax, "largest cached-image count, default N");
    model->add_option("--overhead", model_overhead, "bytes per appended id");
    model->add_option("--out", model_out, "output prefix; writes <prefix>_t<t>.csv");

    // simulate
    std::string sim_dataset;
    std::vector<int> sim_fw;
    std::vector<int> sim_ac;
    int sim_trials = 100;
    int sim_threshold = 1;
    std::uint64_t sim_seed = 0;
    bool sim_overhead = false;
    std::size_t sim_lru = 0;
    std::string sim_out = "simulation.csv";
    auto* simulate = app.add_subcommand("simulate", "run FW/AC pseudo-client cache simulation");
    simulate->add_option("--dataset", sim_dataset, "dataset manifest JSON")->required();
    simulate->add_option("--fw", sim_fw, "frequented websites per pseudo-client (repeatable)");
    simulate->add_option("--ac", sim_ac, "image requests per pseudo-client (repeatable)");
    simulate->add_option("--trials", sim_trials, "pseudo-clients per (FW, AC) cell");
    simulate->add_option("--threshold", sim_threshold, "replaceability threshold 1..4");
    simulate->add_option("--seed", sim_seed, "RNG seed");
    simulate->add_flag("--overhead", sim_overhead, "charge 2 bytes per appended cached id");
    simulate->add_option("--lru", sim_lru, "cap cache entries (0 = unbounded)");
    simulate->add_option("--out", sim_out, "per-trial CSV output path");

    // serve
    std::string serve_config;
    auto* serve = app.add_subcommand("serve", "run the semantic cache origin server");
    serve->add_option("config", serve_config, "server config JSON")->required();

    // score
    std::string score_dataset;
    std::string score_pairs;
    std::string score_scorer = "heuristic";
    std::string score_template = "metric";
    int score_attempts = 3;
    std::string score_out = "scores.csv";
    auto* score = app.add_subcommand("score", "score image pairs with a pluggable scorer");
    score->add_option("--dataset", score_dataset, "dataset manifest JSON")->required();
    score->add_option("--pairs", score_pairs, "pairs CSV: pair_id,website,category,id_a,id_b")
        ->required();
    score->add_option("--scorer", score_scorer, "ground-truth | heuristic | llm-direct | llm-two-step")
        ->check(CLI::IsMember({"ground-truth", "heuristic", "llm-direct", "llm-two-step"}));
    score->add_option("--template", score_template, "base | metric")
        ->check(CLI::IsMember({"base", "metric"}));
    score->add_option("--attempts", score_attempts, "max parse-retry attempts");
    score->add_option("--out", score_out, "scores CSV output path");

    // evaluate
    std::string eval_pred;
    std::string eval_out = "report.json";
    std::string eval_confusion = "confusion.csv";
    std::string eval_normalize = "row";
    auto* evaluate = app.add_subcommand("evaluate", "compute agreement metrics for predictions");
    evaluate->add_option("--pred", eval_pred, "CSV: pair_id,predicted,truth")->required();
    evaluate->add_option("--out", eval_out, "JSON report path");
    evaluate->add_option("--confusion", eval_confusion, "confusion matrix CSV path");
    evaluate->add_option("--normalize", eval_normalize, "row | none")
        ->check(CLI::IsMember({"row", "none"}));

    // usefraction
    std::string uf_dataset;
    int uf_threshold = 0;
    std::string uf_out;
    auto* usefraction = app.add_subcommand("usefraction",
                                           "useful-comparison fractions per category");
    usefraction->add_option("manifest", uf_dataset, "dataset manifest JSON")->required();
    usefraction->add_option("--t", uf_threshold, "threshold 1..4 (default: all four)")
        ->check(CLI::Range(0, 4));
    usefraction->add_option("--out", uf_out, "CSV output path (default: stdout)");

    // cost
    int cost_in = 1300;
    int cost_out_tokens = 300;
    std::string cost_prices;
    std::string cost_out;
    auto* cost = app.add_subcommand("cost", "per-comparison cost table");
    cost->add_option("--in-tokens", cost_in, "average input tokens per comparison");
    cost->add_option("--out-tokens", cost_out_tokens, "average output tokens per comparison");
    cost->add_option("--prices", cost_prices, "JSON price table overriding the built-in one");
    cost->add_option("--out", cost_out, "CSV output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(validate)) return run_validate(validate_manifest);
        if (app.got_subcommand(model)) {
            return run_model(model_n, model_u, model_s, model_p, model_i, model_t, model_xmax,
                             model_overhead, model_out);
        }
        if (app.got_subcommand(simulate)) {
            return run_simulate(sim_dataset, sim_fw, sim_ac, sim_trials, sim_threshold, sim_seed,
                                sim_overhead, sim_lru, sim_out);
        }
        if (app.got_subcommand(serve)) return run_serve(serve_config);
        if (app.got_subcommand(score)) {
            return run_score(score_dataset, score_pairs, score_scorer, score_template,
                             score_attempts, score_out);
        }
        if (app.got_subcommand(evaluate)) {
            return run_evaluate(eval_pred, eval_out, eval_confusion, eval_normalize);
        }
        if (app.got_subcommand(usefraction)) {
            return run_usefraction(uf_dataset, uf_threshold, uf_out);
        }
        if (app.got_subcommand(cost)) {
            return run_cost(cost_in, cost_out_tokens, cost_prices, cost_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
