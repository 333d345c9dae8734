#include "rohm/attacks.hpp"
#include "rohm/harness.hpp"
#include "rohm/mtd.hpp"
#include "rohm/target.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using rohm::AttackReport;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out)
        throw rohm::data_error("write-failed", "cannot write " + path);
    out << text;
}

void write_matrix_csv(const std::string& path,
                      const std::vector<std::vector<double>>& rows) {
    std::ostringstream ss;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            ss << (i ? "," : "") << row[i];
        ss << "\n";
    }
    write_text(path, ss.str());
}

void write_report(const std::string& dir, const std::string& method,
                  const AttackReport& rep) {
    nlohmann::json j;
    j["method"] = method;
    j["key_rank"] = rep.key_rank;
    j["best_guess"] = int(rep.best_guess);
    j["max_true_statistic"] = rep.max_true_stat;
    j["max_wrong_statistic"] = rep.max_wrong_stat;
    j["margin"] = rep.max_wrong_stat > 0 ? rep.max_true_stat / rep.max_wrong_stat : 0.0;
    j["degenerate_partitions"] = rep.degenerate_partitions;
    write_text(dir + "/report.json", j.dump(2) + "\n");
    write_matrix_csv(dir + "/statistic_matrix.csv", rep.statistic_matrix);
    if (!rep.progressive.empty()) {
        std::ostringstream ss;
        for (std::size_t c = 0; c < rep.checkpoints.size(); ++c) {
            ss << rep.checkpoints[c];
            for (double v : rep.progressive[c])
                ss << "," << v;
            ss << "\n";
        }
        write_text(dir + "/progressive.csv", ss.str());
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Impedance side-channel simulator with a moving-target defense engine"};
    app.require_subcommand(1);

    std::string config_path, out_dir, in_dir, method, rates_str, checkpoints_str, format =
        "json";
    double profile_split = 0.9;
    int k_points = 20;
    uint64_t seed_override = 0;
    bool has_seed = false;
    bool serial = false;

    auto* cap = app.add_subcommand("capture", "run a capture campaign");
    cap->add_option("--config", config_path, "campaign config JSON")->required();
    cap->add_option("--out", out_dir, "output archive directory")->required();
    cap->add_option("--seed", seed_override, "override the campaign seed")
        ->each([&](const std::string&) { has_seed = true; });
    cap->add_flag("--serial", serial, "disable the parallel worker pool");

    auto* att = app.add_subcommand("attack", "run an attack on an archive");
    att->add_option("--in", in_dir, "archive directory")->required();
    att->add_option("--method", method, "cima|dima|tima")->required();
    att->add_option("--profile-split", profile_split, "tima profiling fraction");
    att->add_option("--k-points", k_points, "tima template points per bit");
    att->add_option("--checkpoints", checkpoints_str, "progressive checkpoints, e.g. 500,1000");

    auto* sw = app.add_subcommand("sweep", "PR-rate overhead/leakage sweep");
    sw->add_option("--config", config_path, "campaign config JSON")->required();
    sw->add_option("--rates", rates_str, "comma-separated PR rates")->required();
    sw->add_option("--out", out_dir, "output CSV (default stdout)");

    auto* rep = app.add_subcommand("report", "summarize an archive");
    rep->add_option("--in", in_dir, "archive directory")->required();
    rep->add_option("--format", format, "csv|json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (cap->parsed()) {
        rohm::CampaignConfig cfg = rohm::load_config(config_path);
        if (has_seed)
            cfg.campaign_seed = seed_override;
        rohm::CaptureResult result = rohm::capture(cfg, !serial);
        rohm::write_archive(out_dir, cfg, result);
        std::cout << "captured " << result.traces.n_traces << " traces ("
                  << result.pr_applications << " PR applications) -> " << out_dir << "\n";
        return 0;
    }

    if (att->parsed()) {
        rohm::Archive ar = rohm::read_archive(in_dir);
        if (method == "cima" || method == "dima") {
            if (ar.config.scenario != rohm::Scenario::CimaDima)
                throw rohm::usage_error("method-mismatch",
                                        method + " needs a cima_dima archive");
            AttackReport r;
            if (!checkpoints_str.empty()) {
                std::vector<std::size_t> cps;
                std::stringstream ss(checkpoints_str);
                std::string tok;
                while (std::getline(ss, tok, ','))
                    cps.push_back(std::stoul(tok));
                r = rohm::progressive_leakage(ar.traces,
                                              method == "cima" ? rohm::AttackMethod::Cima
                                                               : rohm::AttackMethod::Dima,
                                              ar.config.key_byte, cps);
            } else {
                r = method == "cima" ? rohm::cima(ar.traces, ar.config.key_byte)
                                     : rohm::dima(ar.traces, ar.config.key_byte);
            }
            write_report(in_dir, method, r);
            std::cout << method << ": key rank " << r.key_rank << ", best guess 0x" << std::hex
                      << int(r.best_guess) << std::dec << "\n";
            return 0;
        }
        if (method == "tima") {
            if (ar.config.scenario != rohm::Scenario::Tima)
                throw rohm::usage_error("method-mismatch", "tima needs a tima archive");
            if (profile_split <= 0.0 || profile_split >= 1.0)
                throw rohm::usage_error("bad-split", "--profile-split must be in (0,1)");
            std::size_t n_prof = std::size_t(double(ar.traces.n_traces) * profile_split);
            auto slice = [&](std::size_t lo, std::size_t hi) {
                rohm::TraceSet t;
                t.grid = ar.traces.grid;
                t.n_points = ar.traces.n_points;
                t.n_traces = hi - lo;
                t.n_label_bits = ar.traces.n_label_bits;
                t.traces.assign(ar.traces.traces.begin() + lo * t.n_points,
                                ar.traces.traces.begin() + hi * t.n_points);
                t.bit_labels.assign(
                    ar.traces.bit_labels.begin() + lo * t.n_label_bits,
                    ar.traces.bit_labels.begin() + hi * t.n_label_bits);
                return t;
            };
            rohm::TraceSet prof = slice(0, n_prof);
            rohm::TraceSet atk = slice(n_prof, ar.traces.n_traces);
            auto templates = rohm::tima_profile(prof, k_points);
            rohm::TimaResult res = rohm::tima_attack(templates, atk);
            nlohmann::json j;
            j["method"] = "tima";
            j["profile_traces"] = n_prof;
            j["attack_traces"] = atk.n_traces;
            j["per_bit_accuracy"] = res.per_bit_accuracy;
            double mn = 1.0;
            for (double a : res.per_bit_accuracy)
                mn = std::min(mn, a);
            j["min_bit_accuracy"] = mn;
            write_text(in_dir + "/report.json", j.dump(2) + "\n");
            std::cout << "tima: min per-bit accuracy " << mn << "\n";
            return 0;
        }
        throw rohm::usage_error("bad-method", "--method must be cima, dima or tima");
    }

    if (sw->parsed()) {
        rohm::CampaignConfig cfg = rohm::load_config(config_path);
        std::vector<int> rates;
        std::stringstream ss(rates_str);
        std::string tok;
        while (std::getline(ss, tok, ','))
            rates.push_back(std::stoi(tok));
        if (rates.empty())
            throw rohm::usage_error("bad-rates", "--rates must list at least one rate");
        auto rows = rohm::sweep(cfg, rates);
        std::ostringstream csv;
        csv << "rate,delay_ms,clb_factor,true_key_rank,max_true_correlation\n";
        for (const auto& r : rows)
            csv << r.rate << "," << r.delay_ms << "," << r.clb_factor << ","
                << r.true_key_rank << "," << r.max_true_correlation << "\n";
        if (out_dir.empty())
            std::cout << csv.str();
        else
            write_text(out_dir, csv.str());
        return 0;
    }

    if (rep->parsed()) {
        rohm::Archive ar = rohm::read_archive(in_dir);
        double mn = 1e300, mx = -1e300, s = 0;
        for (float v : ar.traces.traces) {
            mn = std::min(mn, double(v));
            mx = std::max(mx, double(v));
            s += v;
        }
        std::size_t n = ar.traces.traces.size();
        if (format == "json") {
            nlohmann::json j;
            j["n_traces"] = ar.traces.n_traces;
            j["n_points"] = ar.traces.n_points;
            j["scenario"] =
                ar.config.scenario == rohm::Scenario::CimaDima ? "cima_dima" : "tima";
            j["pr_applications"] = ar.pr_applications;
            j["phase_min_deg"] = mn;
            j["phase_max_deg"] = mx;
            j["phase_mean_deg"] = n ? s / double(n) : 0.0;
            std::cout << j.dump(2) << "\n";
        } else if (format == "csv") {
            std::cout << "n_traces,n_points,pr_applications,phase_min,phase_max,phase_mean\n"
                      << ar.traces.n_traces << "," << ar.traces.n_points << ","
                      << ar.pr_applications << "," << mn << "," << mx << ","
                      << (n ? s / double(n) : 0.0) << "\n";
        } else {
            throw rohm::usage_error("bad-format", "--format must be csv or json");
        }
        return 0;
    }
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const rohm::Error& e) {
        std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
