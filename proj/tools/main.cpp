// Command-line front end: simulate / analyze / verifactor / compare.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
// All stochastic behavior is pinned by --seed; reports are byte-stable
// across runs and thread counts.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "refactor/refactor.hpp"

namespace {

using nlohmann::json;

/// JSON config support for CLI11: {"option": value} at the top level or
/// {"subcommand": {"option": value}}. Flags given on the command line
/// take precedence; unknown keys are rejected by the parser.
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        input >> j;
        if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> out;
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                for (const auto& [sub_key, sub_value] : value.items())
                    append_item(out, {key}, sub_key, sub_value);
            } else {
                append_item(out, {}, key, value);
            }
        }
        return out;
    }

  private:
    static void append_item(std::vector<CLI::ConfigItem>& out, std::vector<std::string> parents,
                            const std::string& name, const json& value) {
        CLI::ConfigItem item;
        item.parents = std::move(parents);
        item.name = name;
        if (value.is_array()) {
            for (const auto& v : value) item.inputs.push_back(scalar(v));
        } else {
            item.inputs.push_back(scalar(value));
        }
        out.push_back(std::move(item));
    }

    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }
};

std::vector<refactor::AssociationKind> parse_kinds(const std::string& csv) {
    std::vector<refactor::AssociationKind> kinds;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) kinds.push_back(refactor::association_kind_from_string(item));
    if (kinds.empty()) throw CLI::ValidationError("--assoc", "no association kinds given");
    return kinds;
}

std::set<std::string> parse_metrics(const std::string& csv) {
    std::set<std::string> out;
    if (csv.empty()) return out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if (!refactor::reconstruction_metric_ids().count(item) &&
            !refactor::traditional_metric_ids().count(item))
            throw CLI::ValidationError("--metrics", "unknown metric id: " + item);
        out.insert(item);
    }
    return out;
}

std::pair<int, int> parse_folds(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos)
        throw CLI::ValidationError("--folds", "expected ROWSxCOLS, e.g. 2x2");
    try {
        return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
    } catch (const std::exception&) {
        throw CLI::ValidationError("--folds", "expected ROWSxCOLS, e.g. 2x2");
    }
}

std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> grid;
    if (s.find(':') != std::string::npos) {
        std::stringstream ss(s);
        std::string a, b, c;
        std::getline(ss, a, ':');
        std::getline(ss, b, ':');
        std::getline(ss, c, ':');
        const double lo = std::stod(a), hi = std::stod(b), step = std::stod(c);
        if (step <= 0) throw CLI::ValidationError("--gamma-grid", "step must be positive");
        for (double g = lo; g <= hi + 1e-12; g += step) grid.push_back(std::min(g, hi));
    } else {
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) grid.push_back(std::stod(item));
    }
    if (grid.empty()) throw CLI::ValidationError("--gamma-grid", "empty grid");
    return grid;
}

std::string resolve_out(const std::string& path) {
    if (path.empty() || std::filesystem::path(path).has_parent_path()) return path;
    if (const char* dir = std::getenv("REFACTOR_OUT_DIR"))
        return (std::filesystem::path(dir) / path).string();
    return path;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct DataOpts {
    std::string path;
    std::string format = "wide";
    std::string missing_token = "NA";
    std::string row_column = "row";
    std::string col_column = "col";
    std::string value_column = "value";

    void attach(CLI::App* cmd) {
        cmd->add_option("--data", path, "dataset CSV path")->required();
        cmd->add_option("--format", format, "wide or long")->capture_default_str();
        cmd->add_option("--missing-token", missing_token, "cell token treated as missing")
            ->capture_default_str();
        cmd->add_option("--row-col", row_column, "long format: respondent id column")
            ->capture_default_str();
        cmd->add_option("--col-col", col_column, "long format: item id column")
            ->capture_default_str();
        cmd->add_option("--value-col", value_column, "long format: response column")
            ->capture_default_str();
    }

    refactor::ResponseMatrix load() const {
        if (refactor::dataset_format_from_string(format) == refactor::DatasetFormat::wide_csv)
            return refactor::load_wide(path, missing_token);
        return refactor::load_long(path, row_column, col_column, value_column, missing_token);
    }
};

json echo_config(const CLI::App* cmd) {
    json j = json::object();
    for (const CLI::Option* opt : cmd->get_options()) {
        if (opt->get_name().rfind("--", 0) != 0) continue;
        const std::string name = opt->get_name().substr(2);
        // thread count and stamping change no result, so they stay out
        // of the echo to keep equal-seed reports byte-identical
        if (name == "help" || name == "config" || name == "threads" || name == "stamp") continue;
        if (opt->count() > 0) {
            const auto& results = opt->results();
            if (results.size() == 1)
                j[name] = results[0];
            else
                j[name] = results;
        } else if (!opt->get_default_str().empty()) {
            j[name] = opt->get_default_str();
        }
    }
    return j;
}

void finish_report(refactor::ReportDocument& doc, const CLI::App* cmd, bool stamp,
                   const std::string& out_json, const std::string& out_csv) {
    doc.config_echo = echo_config(cmd);
    if (stamp) doc.generated_at = utc_now();
    if (!out_json.empty())
        refactor::write_report(doc, resolve_out(out_json), refactor::ReportFormat::json);
    if (!out_csv.empty())
        refactor::write_report(doc, resolve_out(out_csv), refactor::ReportFormat::csv_long);
}

int run(int argc, char** argv) {
    CLI::App app{"rank-1 reconstruction analysis of binary response matrices"};
    app.require_subcommand(1);
    app.fallthrough(true);  // --seed etc. may follow the subcommand name
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON config file; command-line flags win on conflict");
    app.allow_config_extras(CLI::config_extras_mode::error);

    int threads = refactor::hardware_threads();
    std::uint64_t seed = 0;
    bool stamp = false;
    app.add_option("--threads", threads, "worker thread count (results do not depend on it)")
        ->capture_default_str();
    app.add_option("--seed", seed, "master seed; fixes all stochastic behavior")
        ->capture_default_str();
    app.add_flag("--stamp", stamp, "record wall-clock time in reports (breaks byte determinism)");

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "run a simulation study and write the results table");
    std::string study = "sim1", gamma_grid, sim_metrics, sim_kinds = "phi,tetrachoric,quadrant";
    std::string sim_out = "simulation";
    std::string sim_folds = "2x2", sim_predictor = "loading_outer", sim_estimator =
        "leading_eigenvector";
    int reps = 100;
    refactor::SimThresholdConfig s1;
    refactor::SimHierConfig s2;
    sim->add_option("--study", study, "sim1 (threshold rank-1) or sim2 (hierarchical)")
        ->required();
    sim->add_option("--reps", reps, "replications per grid point")->capture_default_str();
    sim->add_option("--gamma-grid", gamma_grid, "sim2 grid, LO:HI:STEP or comma list");
    sim->add_option("--n", s1.n, "respondents")->capture_default_str();
    sim->add_option("--p", s1.p, "items (sim1)")->capture_default_str();
    sim->add_option("--tau-mean", s1.tau_mean, "item threshold mean")->capture_default_str();
    sim->add_option("--tau-sd", s1.tau_sd, "item threshold sd")->capture_default_str();
    sim->add_option("--eta-mean", s1.eta_mean, "person threshold mean")->capture_default_str();
    sim->add_option("--eta-sd", s1.eta_sd, "person threshold sd")->capture_default_str();
    sim->add_option("--items-per-factor", s2.items_per_factor, "sim2 items per group factor")
        ->capture_default_str();
    sim->add_option("--factor-blocks", s2.n_factor_blocks, "sim2 loading-pattern replications")
        ->capture_default_str();
    sim->add_option("--minor-factors", s2.n_minor_factors, "sim2 noise factor count")
        ->capture_default_str();
    sim->add_option("--minor-magnitude", s2.minor_magnitude, "sim2 noise loading magnitude")
        ->capture_default_str();
    sim->add_option("--kinds", sim_kinds, "association kinds, comma separated")
        ->capture_default_str();
    sim->add_option("--metrics", sim_metrics, "metric ids to compute (default: all)");
    sim->add_option("--folds", sim_folds, "verifactor folds ROWSxCOLS")->capture_default_str();
    sim->add_option("--predictor", sim_predictor, "loading_outer or pseudoinverse")
        ->capture_default_str();
    sim->add_option("--estimator", sim_estimator, "leading_eigenvector or minres1")
        ->capture_default_str();
    sim->add_option("--out", sim_out, "output prefix (.csv and .json are appended)")
        ->capture_default_str();

    // ---- analyze ----
    auto* ana = app.add_subcommand("analyze", "in-sample refactor evaluation of a dataset");
    DataOpts ana_data;
    ana_data.attach(ana);
    std::string ana_assoc = "phi,tetrachoric,quadrant", ana_metrics, ana_estimator =
        "leading_eigenvector";
    std::string ana_out = "report.json", ana_csv;
    int ecv_factors = 3;
    ana->add_option("--assoc", ana_assoc, "association kinds, comma separated")
        ->capture_default_str();
    ana->add_option("--metrics", ana_metrics, "metric ids to compute (default: all)");
    ana->add_option("--estimator", ana_estimator, "leading_eigenvector or minres1")
        ->capture_default_str();
    ana->add_option("--ecv-factors", ecv_factors, "factor count for ECV")->capture_default_str();
    ana->add_option("--out", ana_out, "JSON report path")->capture_default_str();
    ana->add_option("--csv", ana_csv, "also write a long-form CSV here");

    // ---- verifactor ----
    auto* ver = app.add_subcommand("verifactor", "bi-cross-validated block prediction");
    DataOpts ver_data;
    ver_data.attach(ver);
    std::string ver_assoc = "phi,tetrachoric,quadrant", ver_metrics, ver_estimator =
        "leading_eigenvector";
    std::string ver_folds = "2x2", ver_predictor = "loading_outer";
    std::string ver_out = "report.json", ver_csv;
    ver->add_option("--assoc", ver_assoc, "association kinds, comma separated")
        ->capture_default_str();
    ver->add_option("--metrics", ver_metrics, "metric ids to compute (default: all)");
    ver->add_option("--estimator", ver_estimator, "leading_eigenvector or minres1")
        ->capture_default_str();
    ver->add_option("--folds", ver_folds, "folds ROWSxCOLS")->capture_default_str();
    ver->add_option("--predictor", ver_predictor, "loading_outer or pseudoinverse")
        ->capture_default_str();
    ver->add_option("--out", ver_out, "JSON report path")->capture_default_str();
    ver->add_option("--csv", ver_csv, "also write a long-form CSV here");

    // ---- compare ----
    auto* cmp = app.add_subcommand("compare",
                                   "rank association kinds by refactor and verifactor metrics");
    DataOpts cmp_data;
    cmp_data.attach(cmp);
    std::string cmp_assoc = "phi,tetrachoric,quadrant", cmp_metrics, cmp_estimator =
        "leading_eigenvector";
    std::string cmp_folds = "2x2", cmp_predictor = "loading_outer";
    std::string cmp_out = "report.json", cmp_csv;
    cmp->add_option("--assoc", cmp_assoc, "association kinds, comma separated")
        ->capture_default_str();
    cmp->add_option("--metrics", cmp_metrics, "metric ids to compute (default: all)");
    cmp->add_option("--estimator", cmp_estimator, "leading_eigenvector or minres1")
        ->capture_default_str();
    cmp->add_option("--folds", cmp_folds, "folds ROWSxCOLS")->capture_default_str();
    cmp->add_option("--predictor", cmp_predictor, "loading_outer or pseudoinverse")
        ->capture_default_str();
    cmp->add_option("--out", cmp_out, "JSON report path")->capture_default_str();
    cmp->add_option("--csv", cmp_csv, "also write a long-form CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) {
            refactor::ReplicateConfig rc;
            rc.study = refactor::study_from_string(study);
            rc.reps = reps;
            if (!gamma_grid.empty()) rc.gamma_grid = parse_grid(gamma_grid);
            rc.kinds = parse_kinds(sim_kinds);
            rc.metrics = parse_metrics(sim_metrics);
            rc.master_seed = refactor::RngSpec{seed, 0};
            rc.threads = threads;
            s1.seed = rc.master_seed;
            s2.n = s1.n;
            s2.seed = rc.master_seed;
            rc.sim1_base = s1;
            rc.sim2_base = s2;
            const auto [fr, fc] = parse_folds(sim_folds);
            rc.bcv_f_rows = fr;
            rc.bcv_f_cols = fc;
            rc.predictor = refactor::block_predictor_from_string(sim_predictor);
            rc.estimator = refactor::loading_estimator_from_string(sim_estimator);

            const std::vector<refactor::ResultRow> rows = refactor::replicate(rc);
            const std::string prefix = resolve_out(sim_out);
            refactor::write_results_csv(rows, prefix + ".csv");
            json doc{{"schema_version", 1},
                     {"config", echo_config(sim)},
                     {"seed", seed},
                     {"results", refactor::results_to_json(rows)}};
            doc["generated_at"] = stamp ? json(utc_now()) : json();
            std::ofstream out(prefix + ".json", std::ios::binary);
            if (!out) throw std::runtime_error("cannot open " + prefix + ".json");
            out << doc.dump(2) << '\n';
            std::cout << "wrote " << prefix << ".csv and " << prefix << ".json (" << rows.size()
                      << " rows)\n";
            return 0;
        }

        if (ana->parsed()) {
            const refactor::ResponseMatrix x = ana_data.load();
            refactor::ReportDocument doc;
            doc.dataset_id = std::filesystem::path(ana_data.path).stem().string();
            doc.n_rows = x.rows();
            doc.n_cols = x.cols();
            doc.missing_rate = x.missing_rate();
            const auto metrics = parse_metrics(ana_metrics);
            const auto estimator = refactor::loading_estimator_from_string(ana_estimator);
            for (const auto kind : parse_kinds(ana_assoc)) {
                refactor::RefactorResult r = refactor::refactor_functional(
                    x, kind, metrics, estimator, threads, true, ecv_factors);
                r.panel.dataset_id = doc.dataset_id;
                r.panel.seed = seed;
                doc.panels.push_back(std::move(r.panel));
            }
            finish_report(doc, ana, stamp, ana_out, ana_csv);
            std::cout << "wrote " << resolve_out(ana_out) << " (" << doc.panels.size()
                      << " panels)\n";
            return 0;
        }

        if (ver->parsed()) {
            const refactor::ResponseMatrix x = ver_data.load();
            refactor::ReportDocument doc;
            doc.dataset_id = std::filesystem::path(ver_data.path).stem().string();
            doc.n_rows = x.rows();
            doc.n_cols = x.cols();
            doc.missing_rate = x.missing_rate();
            const auto metrics = parse_metrics(ver_metrics);
            const auto [fr, fc] = parse_folds(ver_folds);
            json skipped = json::object();
            for (const auto kind : parse_kinds(ver_assoc)) {
                refactor::BcvConfig bcv;
                bcv.f_rows = fr;
                bcv.f_cols = fc;
                bcv.kind = kind;
                bcv.predictor = refactor::block_predictor_from_string(ver_predictor);
                bcv.estimator = refactor::loading_estimator_from_string(ver_estimator);
                bcv.seed = refactor::RngSpec{seed, 0};
                refactor::VerifactorResult r =
                    refactor::verifactor_functional(x, bcv, metrics, threads);
                r.panel.dataset_id = doc.dataset_id;
                doc.panels.push_back(r.panel);
                json folds = json::array();
                for (const auto& f : r.folds) {
                    json fj{{"row_fold", f.row_fold},
                            {"col_fold", f.col_fold},
                            {"skipped", f.skipped},
                            {"skip_reason", f.skip_reason}};
                    if (!f.skipped) {
                        refactor::MetricPanel p = f.panel;
                        p.dataset_id = doc.dataset_id;
                        fj["metrics"] = refactor::panel_to_json(p).at("metrics");
                    }
                    folds.push_back(std::move(fj));
                }
                skipped[refactor::to_string(kind)] =
                    json{{"skipped_folds", r.skipped_folds}, {"folds", folds}};
            }
            doc.extras["verifactor"] = skipped;
            finish_report(doc, ver, stamp, ver_out, ver_csv);
            std::cout << "wrote " << resolve_out(ver_out) << " (" << doc.panels.size()
                      << " panels)\n";
            return 0;
        }

        if (cmp->parsed()) {
            const refactor::ResponseMatrix x = cmp_data.load();
            refactor::ReportDocument doc;
            doc.dataset_id = std::filesystem::path(cmp_data.path).stem().string();
            doc.n_rows = x.rows();
            doc.n_cols = x.cols();
            doc.missing_rate = x.missing_rate();
            const auto metrics = parse_metrics(cmp_metrics);
            const auto kinds = parse_kinds(cmp_assoc);
            const auto [fr, fc] = parse_folds(cmp_folds);
            const auto estimator = refactor::loading_estimator_from_string(cmp_estimator);
            json verifactor_notes = json::object();
            for (const auto kind : kinds) {
                refactor::RefactorResult r =
                    refactor::refactor_functional(x, kind, metrics, estimator, threads);
                r.panel.dataset_id = doc.dataset_id;
                r.panel.seed = seed;
                doc.panels.push_back(std::move(r.panel));
                refactor::BcvConfig bcv;
                bcv.f_rows = fr;
                bcv.f_cols = fc;
                bcv.kind = kind;
                bcv.predictor = refactor::block_predictor_from_string(cmp_predictor);
                bcv.estimator = estimator;
                bcv.seed = refactor::RngSpec{seed, 0};
                try {
                    refactor::VerifactorResult v =
                        refactor::verifactor_functional(x, bcv, metrics, threads);
                    v.panel.dataset_id = doc.dataset_id;
                    verifactor_notes[refactor::to_string(kind)] =
                        json{{"skipped_folds", v.skipped_folds}};
                    doc.panels.push_back(std::move(v.panel));
                } catch (const std::exception& e) {
                    verifactor_notes[refactor::to_string(kind)] = json{{"failed", e.what()}};
                }
            }
            doc.extras["verifactor"] = std::move(verifactor_notes);

            // per (mode, metric) ranking over kinds; cross_entropy ranks
            // ascending, everything else descending; ties share a rank
            // and break stably by kind name
            json rankings = json::object();
            for (const std::string mode : {"refactor", "verifactor"}) {
                std::set<std::string> metric_ids;
                for (const auto& p : doc.panels)
                    if (p.mode == mode)
                        for (const auto& [id, v] : p.values)
                            if (!v.missing()) metric_ids.insert(id);
                for (const std::string& id : metric_ids) {
                    struct Entry {
                        std::string kind;
                        double value;
                    };
                    std::vector<Entry> entries;
                    for (const auto& p : doc.panels)
                        if (p.mode == mode && p.has(id) && !p.at(id).missing())
                            entries.push_back({p.kind, p.at(id).value});
                    const bool ascending = id.find("cross_entropy") != std::string::npos;
                    std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
                        if (a.value != b.value)
                            return ascending ? a.value < b.value : a.value > b.value;
                        return a.kind < b.kind;
                    });
                    json list = json::array();
                    int rank = 0;
                    for (std::size_t i = 0; i < entries.size(); ++i) {
                        if (i == 0 || entries[i].value != entries[i - 1].value)
                            rank = static_cast<int>(i) + 1;
                        list.push_back(json{{"kind", entries[i].kind},
                                            {"value", entries[i].value},
                                            {"rank", rank}});
                    }
                    rankings[mode + ":" + id] = std::move(list);
                }
            }
            doc.extras["rankings"] = std::move(rankings);
            finish_report(doc, cmp, stamp, cmp_out, cmp_csv);
            std::cout << "wrote " << resolve_out(cmp_out) << " (" << doc.panels.size()
                      << " panels)\n";
            return 0;
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
