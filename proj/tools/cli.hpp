#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI/CLI.hpp>
#include <nlohmann/json.hpp>

#include "effectsize/design_metrics.hpp"
#include "effectsize/design_metrics_json.hpp"
#include "effectsize/effect_model.hpp"
#include "effectsize/effect_model_json.hpp"
#include "effectsize/elicitation.hpp"
#include "effectsize/errors.hpp"
#include "effectsize/http_server.hpp"
#include "effectsize/scenario_bench.hpp"
#include "effectsize/service_api.hpp"
#include "effectsize/session_store.hpp"

namespace effectsize::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

// Raised for flag combinations CLI11 cannot express; maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string(flag) + ": '" + item + "' is not a number");
        }
    }
    if (expected != 0 && out.size() != expected)
        throw UsageError(std::string(flag) + " expects " + std::to_string(expected) + " comma-separated numbers");
    return out;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + " is not valid JSON: " + e.what(), "file");
    }
}

inline std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

inline void print_distribution(std::ostream& out, const json& dist) {
    for (const auto& c : dist.at("components")) {
        out << "  weight " << fmt(c.at("weight").get<double>()) << "  " << c.at("kind").get<std::string>();
        for (auto& [k, v] : c.items()) {
            if (k == "weight" || k == "kind") continue;
            out << "  " << k << "=" << v.dump();
        }
        out << '\n';
    }
}

inline void print_diagnostics(std::ostream& out, const json& report) {
    const json& d = report.at("diagnostics");
    const json& in = report.at("inputs");
    out << "method        " << report.at("method").get<std::string>() << '\n';
    if (in.contains("effect")) out << "effect        " << fmt(in.at("effect").get<double>()) << '\n';
    out << "se            " << fmt(d.at("se").get<double>()) << '\n';
    out << "z_crit        " << fmt(d.at("z_crit").get<double>()) << '\n';
    out << "power         " << fmt(d.at("power").get<double>()) << '\n';
    out << "type_s        " << fmt(d.at("type_s").get<double>()) << '\n';
    const json& ex = d.at("exaggeration");
    out << "exaggeration  " << (ex.is_number() ? fmt(ex.get<double>()) : ex.get<std::string>()) << '\n';
    if (in.contains("draws")) out << "draws         " << in.at("draws").get<std::size_t>() << '\n';
    if (in.contains("seed")) out << "seed          " << in.at("seed").get<std::uint64_t>() << '\n';
    for (const auto& w : d.at("warnings")) out << "warning: " << w.get<std::string>() << '\n';
}

// ---------------------------------------------------------------------------
// Interactive wizard
// ---------------------------------------------------------------------------

class Wizard {
public:
    Wizard(std::istream& in, std::ostream& out, std::optional<std::int64_t> fixed_time)
        : in_(in), out_(out), fixed_time_(fixed_time) {}

    // Walks the remaining stages, saving after every transition. Returns
    // false if input ran out first.
    bool run(ElicitationSession& session, const std::filesystem::path& save_to) {
        while (session.stage != Stage::compared) {
            std::optional<StagePayload> payload;
            try {
                payload = prompt(session);
            } catch (const ValidationError& e) {
                out_ << "invalid input: " << e.what() << "\n";
                continue;
            }
            if (!payload) return false;
            try {
                session = advance(session, *payload, fixed_time_ ? *fixed_time_ : now_ms());
            } catch (const ValidationError& e) {
                out_ << "invalid input: " << e.what() << "\n";
                continue;
            }
            save_session_file(save_to, session);
            if (session.stage == Stage::derived) show_comparison(session);
        }
        return true;
    }

private:
    std::optional<std::string> ask(const std::string& question) {
        out_ << question << std::flush;
        std::string line;
        if (!std::getline(in_, line)) return std::nullopt;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

    std::optional<double> ask_number(const std::string& question, std::optional<double> fallback = std::nullopt) {
        auto line = ask(question);
        if (!line) return std::nullopt;
        if (line->empty() && fallback) return fallback;
        try {
            std::size_t used = 0;
            const double v = std::stod(*line, &used);
            if (line->find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(*line);
            return v;
        } catch (const std::exception&) {
            throw ValidationError("'" + *line + "' is not a number", "input");
        }
    }

    std::optional<ExtremeJudgment> ask_extreme(ExtremeKind kind) {
        const std::string name = kind == ExtremeKind::largest ? "Largest" : "Smallest";
        ExtremeJudgment e;
        e.kind = kind;
        auto effect = ask_number(name + " individual treatment effect: ");
        if (!effect) return std::nullopt;
        e.effect = *effect;
        auto who = ask("  Who are these units? ");
        if (!who) return std::nullopt;
        e.description = *who;
        auto unc = ask_number("  Uncertainty in that effect [0]: ", 0.0);
        if (!unc) return std::nullopt;
        e.uncertainty = *unc;
        auto tail = ask_number(kind == ExtremeKind::largest ? "  Share of units at or above this effect [0]: "
                                                            : "  Share of units at or below this effect [0]: ",
                               0.0);
        if (!tail) return std::nullopt;
        e.tail_share = *tail;
        return e;
    }

    std::optional<StagePayload> prompt(const ElicitationSession& s) {
        switch (s.stage) {
        case Stage::context: {
            out_ << "-- Study context\n";
            StudyContext c;
            const std::pair<const char*, std::string*> text[] = {{"Population: ", &c.population}};
            for (const auto& [q, dst] : text) {
                auto v = ask(q);
                if (!v) return std::nullopt;
                *dst = *v;
            }
            auto n = ask_number("Estimated sample size: ");
            if (!n) return std::nullopt;
            c.sample_size_estimate = static_cast<long long>(*n);
            const std::pair<const char*, std::string*> rest[] = {{"Treatment: ", &c.treatment},
                                                                 {"Control or comparator: ", &c.control},
                                                                 {"Outcome and how it is measured: ", &c.outcome_measure},
                                                                 {"Analysis plan: ", &c.analysis_plan},
                                                                 {"Effect units: ", &c.effect_units}};
            for (const auto& [q, dst] : rest) {
                auto v = ask(q);
                if (!v) return std::nullopt;
                *dst = *v;
            }
            return c;
        }
        case Stage::ate_pre: {
            auto v = ask_number("-- Average treatment effect if the treatment works as intended (ATE_pre): ");
            if (!v) return std::nullopt;
            return AtePre{*v};
        }
        case Stage::extremes: {
            out_ << "-- Individual-level extremes\n";
            auto largest = ask_extreme(ExtremeKind::largest);
            if (!largest) return std::nullopt;
            auto smallest = ask_extreme(ExtremeKind::smallest);
            if (!smallest) return std::nullopt;
            return Extremes{*largest, *smallest};
        }
        case Stage::allocation: {
            auto method = ask("-- Distribution of the remaining units [balls/midpoint]: ");
            if (!method) return std::nullopt;
            if (*method == "midpoint") {
                auto lower = ask_number("Share between the smallest effect and the midpoint: ");
                if (!lower) return std::nullopt;
                return MidpointSplit{*lower, 1.0 - *lower};
            }
            if (*method != "balls") throw ValidationError("answer 'balls' or 'midpoint'", "allocation");
            auto edges = ask("Bin edges, comma-separated (k + 1 values): ");
            if (!edges) return std::nullopt;
            auto balls = ask("Balls per bin, comma-separated (k values): ");
            if (!balls) return std::nullopt;
            auto total = ask_number("Total balls [20]: ", 20.0);
            if (!total) return std::nullopt;
            BallsAllocation b;
            try {
                b.bin_edges = parse_list(*edges, 0, "bin edges");
                for (double v : parse_list(*balls, 0, "balls")) b.balls.push_back(static_cast<long long>(v));
            } catch (const UsageError& e) {
                throw ValidationError(e.what(), "allocation");
            }
            b.total_balls = static_cast<long long>(*total);
            return b;
        }
        case Stage::null_share: {
            auto v = ask_number("-- Share of pure nulls (defaults: 0.5 direct intervention, 0.9 marketing): ");
            if (!v) return std::nullopt;
            return NullShare{*v};
        }
        case Stage::derived: {
            auto v = ask("-- Which estimate better matches your domain knowledge, and why? ");
            if (!v) return std::nullopt;
            return Reflection{*v};
        }
        case Stage::compared: break;
        }
        return std::nullopt;
    }

    void show_comparison(const ElicitationSession& s) {
        const auto r = comparison_report(s);
        out_ << "ATE_pre   " << fmt(r.ate_pre) << '\n';
        out_ << "ATE_post  " << fmt(r.ate_post) << '\n';
        out_ << "ratio     " << (r.ratio ? fmt(*r.ratio) : std::string("undefined")) << '\n';
        for (const auto& w : r.warnings) out_ << "warning: " << w << '\n';
        for (const auto& p : r.prompts) out_ << p << '\n';
    }

    std::istream& in_;
    std::ostream& out_;
    std::optional<std::int64_t> fixed_time_;
};

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(int argc, char** argv, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hypothesize distributions of treatment effects and analyze study designs."};
    app.require_subcommand(1);
    std::string format = "table";
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "table"}));

    // ate
    auto* ate = app.add_subcommand("ate", "Implied average treatment effect");
    std::string range, balls_file, types;
    std::optional<double> p_null;
    auto* range_opt = ate->add_option("--range", range, "Plausible range lo,hi");
    auto* balls_opt = ate->add_option("--balls", balls_file, "Balls-in-bins allocation JSON file");
    auto* types_opt = ate->add_option("--types", types, "Binary type shares always,saved,harmed,never");
    range_opt->excludes(balls_opt)->excludes(types_opt);
    balls_opt->excludes(types_opt);
    ate->add_option("--p-null", p_null, "Share of pure nulls");

    // power
    auto* power = app.add_subcommand("power", "Power, type S error and exaggeration ratio");
    std::optional<double> effect, se, base_rate, sd;
    std::optional<long long> n_per_arm;
    double alpha = 0.05;
    std::string sides = "two_sided";
    std::string dist_file;
    std::optional<std::size_t> draws;
    std::optional<std::uint64_t> seed;
    bool conservative = false;
    power->add_option("--effect", effect, "Fixed effect");
    auto* se_opt = power->add_option("--se", se, "Standard error");
    auto* n_opt = power->add_option("--n-per-arm", n_per_arm, "Sample size per arm");
    se_opt->excludes(n_opt);
    auto add_outcome_flags = [&](CLI::App* cmd) {
        auto* c = cmd->add_flag("--binary-conservative", conservative, "Binary outcome, SE at rates 0.5 (default)");
        auto* b = cmd->add_option("--base-rate", base_rate, "Binary outcome with this control rate");
        auto* s = cmd->add_option("--sd", sd, "Continuous outcome with this residual SD");
        c->excludes(b)->excludes(s);
        b->excludes(s);
    };
    add_outcome_flags(power);
    power->add_option("--alpha", alpha, "Significance level");
    power->add_option("--sides", sides)->check(CLI::IsMember({"two_sided", "one_sided"}));
    power->add_option("--dist", dist_file, "Effect distribution JSON file (Monte Carlo)");
    power->add_option("--draws", draws, "Monte Carlo draws");
    power->add_option("--seed", seed, "Monte Carlo seed");

    // solve-n
    auto* solve = app.add_subcommand("solve-n", "Smallest per-arm sample size reaching a target power");
    double target_power = 0.8;
    double allocation = 1.0;
    solve->add_option("--effect", effect, "Effect to detect")->required();
    solve->add_option("--target-power", target_power, "Target power")->required();
    add_outcome_flags(solve);
    solve->add_option("--alpha", alpha, "Significance level");
    solve->add_option("--sides", sides)->check(CLI::IsMember({"two_sided", "one_sided"}));
    solve->add_option("--allocation", allocation, "n_control / n_treat");

    // elicit
    auto* elicit = app.add_subcommand("elicit", "Guided elicitation wizard (stdin/stdout)");
    std::string out_file = "session.json", resume_file, replay_file, session_id;
    std::optional<std::int64_t> fixed_time;
    elicit->add_option("--out", out_file, "Session file written after every stage");
    auto* resume_opt = elicit->add_option("--resume", resume_file, "Continue a saved session");
    auto* replay_opt = elicit->add_option("--replay", replay_file, "Recompute ATE_post of a saved session");
    resume_opt->excludes(replay_opt);
    elicit->add_option("--id", session_id, "Session id for a new session");
    elicit->add_option("--fixed-time", fixed_time, "Use this timestamp (ms) for log entries")->group("");

    // scenario
    auto* scenario = app.add_subcommand("scenario", "Worked-example scenarios");
    scenario->require_subcommand(1);
    std::string scenario_dir = default_scenario_dir().string();
    scenario->add_option("--scenario-dir", scenario_dir, "Fixture directory");
    auto* scenario_run = scenario->add_subcommand("run", "Run one scenario or all");
    std::string target;
    scenario_run->add_option("target", target, "Scenario name or 'all'")->required();
    auto* scenario_list = scenario->add_subcommand("list", "List scenario names");

    // serve
    auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
    int port = 8080;
    std::string host = "127.0.0.1";
    std::string session_dir = "sessions";
    serve->add_option("--port", port, "Port");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--session-dir", session_dir, "Session store directory");
    serve->add_option("--scenario-dir", scenario_dir, "Fixture directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }

    const bool as_json = format == "json";
    auto outcome_json = [&]() -> json {
        if (base_rate) return json{{"type", "binary"}, {"base_rate", *base_rate}};
        if (sd) return json{{"type", "continuous"}, {"sd", *sd}};
        return json{{"type", "binary"}, {"conservative", true}};
    };

    try {
        if (ate->parsed()) {
            json req;
            if (!range.empty()) {
                const auto r = parse_list(range, 2, "--range");
                req["range"] = r;
            } else if (!balls_file.empty()) {
                req["balls"] = read_json_file(balls_file);
            } else if (!types.empty()) {
                const auto t = parse_list(types, 4, "--types");
                req["types"] = {{"p_always", t[0]}, {"p_saved", t[1]}, {"p_harmed", t[2]}, {"p_never", t[3]}};
            } else {
                throw UsageError("ate needs one of --range, --balls or --types");
            }
            if (p_null) {
                if (!types.empty()) throw UsageError("--p-null does not apply to --types");
                req["p_null"] = *p_null;
            } else if (types.empty()) {
                throw UsageError("--p-null is required with --range or --balls");
            }
            const json res = Service::compute_ate(req);
            if (as_json) {
                out << res.dump(2) << '\n';
            } else {
                out << "ATE  " << fmt(res.at("ate").get<double>()) << '\n';
                if (res.contains("treat_rate"))
                    out << "treatment rate " << fmt(res.at("treat_rate").get<double>()) << "  control rate "
                        << fmt(res.at("control_rate").get<double>()) << '\n';
                out << "distribution:\n";
                print_distribution(out, res.at("distribution"));
            }
            return kOk;
        }

        if (power->parsed()) {
            json req{{"alpha", alpha}, {"sides", sides}};
            if (!dist_file.empty()) {
                req["distribution"] = read_json_file(dist_file);
                if (effect) err << "note: --effect is ignored when --dist is given\n";
                if (draws) req["draws"] = *draws;
                if (seed) req["seed"] = *seed;
            } else {
                if (!effect) throw UsageError("power needs --effect (or --dist)");
                if (draws || seed) throw UsageError("--draws and --seed apply only with --dist");
                req["effect"] = *effect;
            }
            if (se) {
                req["se"] = *se;
            } else if (n_per_arm) {
                req["design"] = {{"n_treat", *n_per_arm}, {"n_control", *n_per_arm}, {"outcome", outcome_json()},
                                 {"alpha", alpha}, {"sides", sides}};
            } else {
                throw UsageError("power needs --se or --n-per-arm");
            }
            const json res = Service::compute_diagnostics(req);
            if (as_json)
                out << res.dump(2) << '\n';
            else
                print_diagnostics(out, res);
            return kOk;
        }

        if (solve->parsed()) {
            const auto r = required_n(*effect, outcome_from_json(outcome_json()), alpha, sides_from_string(sides),
                                      target_power, allocation);
            if (as_json) {
                json j = to_json(r);
                j["inputs"] = {{"effect", *effect}, {"target_power", target_power}, {"outcome", outcome_json()},
                               {"alpha", alpha}, {"sides", sides}, {"allocation", allocation}};
                out << j.dump(2) << '\n';
            } else {
                out << "n_treat        " << r.n_treat << '\n'
                    << "n_control      " << r.n_control << '\n'
                    << "n_total        " << r.total() << '\n'
                    << "achieved_power " << fmt(r.achieved_power) << '\n';
            }
            return kOk;
        }

        if (elicit->parsed()) {
            if (!replay_file.empty()) {
                const auto s = load_session_file(replay_file);
                if (!s.ate_post) {
                    err << "session is at stage '" << to_string(s.stage) << "' and has no ATE_post to replay\n";
                    return kFailure;
                }
                const double recomputed = derive_ate_post(s);
                const bool same = recomputed == *s.ate_post;
                if (as_json) {
                    out << json{{"id", s.id}, {"stored_ate_post", *s.ate_post}, {"recomputed_ate_post", recomputed},
                                {"identical", same}}
                               .dump(2)
                        << '\n';
                } else {
                    out << "stored ATE_post      " << json(*s.ate_post).dump() << '\n'
                        << "recomputed ATE_post  " << json(recomputed).dump() << '\n'
                        << (same ? "identical" : "MISMATCH") << '\n';
                }
                return same ? kOk : kFailure;
            }
            ElicitationSession session;
            std::filesystem::path save_to = out_file;
            if (!resume_file.empty()) {
                session = load_session_file(resume_file);
                if (elicit->count("--out") == 0) save_to = resume_file;
                out << "resuming session " << session.id << " at stage " << to_string(session.stage) << '\n';
            } else {
                session = session_id.empty() ? new_session() : new_session(session_id);
                save_session_file(save_to, session);
            }
            Wizard wizard(in, out, fixed_time);
            if (!wizard.run(session, save_to)) {
                err << "\ninput ended at stage '" << to_string(session.stage) << "'; resume with --resume "
                    << save_to.string() << '\n';
                return kFailure;
            }
            out << "session " << session.id << " complete; saved to " << save_to.string() << '\n';
            return kOk;
        }

        if (scenario->parsed()) {
            const auto registry = ScenarioRegistry::from_directory(scenario_dir);
            if (scenario_list->parsed()) {
                if (as_json)
                    out << json(registry.names()).dump(2) << '\n';
                else
                    for (const auto& n : registry.names()) out << n << '\n';
                return kOk;
            }
            std::vector<ScenarioResult> results;
            if (target == "all")
                results = registry.run_all();
            else
                results.push_back(registry.run(target));
            bool all_pass = true;
            json arr = json::array();
            for (const auto& r : results) {
                all_pass = all_pass && r.pass();
                if (as_json)
                    arr.push_back(to_json(r));
                else
                    out << to_table(r);
            }
            if (as_json)
                out << json{{"pass", all_pass}, {"scenarios", arr}}.dump(2) << '\n';
            else
                out << (all_pass ? "all scenarios passed" : "some scenarios FAILED") << '\n';
            return all_pass ? kOk : kFailure;
        }

        if (serve->parsed()) {
            FileSessionStore store(session_dir);
            Service service(store, ScenarioRegistry::from_directory(scenario_dir));
            httplib::Server server;
            mount(server, service);
            if (!server.bind_to_port(host, port)) {
                err << "cannot bind " << host << ":" << port << '\n';
                return kFailure;
            }
            out << "listening on http://" << host << ":" << port << std::endl;
            server.listen_after_bind();
            return kOk;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const StageMismatchError& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

} // namespace effectsize::cli
