#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hpn/api.hpp"
#include "hpn/errors.hpp"
#include "hpn/formats.hpp"
#include "hpn/store.hpp"

namespace hpn::api {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kInfeasible = 1;
constexpr int kEngine = 2;
constexpr int kUsage = 64;

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("cannot read " + path, path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw NotFound("cannot write " + out, out);
    f << text;
}

std::string default_repo() {
    if (const char* env = std::getenv("HPN_REPO"); env && *env) return env;
    return "hpn-repo";
}

int default_port() {
    if (const char* env = std::getenv("HPN_PORT"); env && *env) return std::atoi(env);
    return 8080;
}

/// A file path, or a model id looked up in the repository.
HybridNet load_net_arg(const std::string& arg, const std::string& repo) {
    std::error_code ec;
    if (fs::is_regular_file(arg, ec)) return load_net(read_text(arg));
    return store::ModelRepository(repo).get(arg);
}

int exit_code(const ApiError& e) {
    switch (e.code) {
        case ErrorCode::Conflict:
        case ErrorCode::NonConvergence: return kEngine;
        default: return kInfeasible;
    }
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Hybrid Petri net modelling and routing decision support"};
    app.require_subcommand(1);

    std::string repo = default_repo();
    app.add_option("--repo", repo, "Model repository directory (HPN_REPO)");

    std::string net_arg, scenario_arg, out;

    auto* validate_cmd = app.add_subcommand("validate", "Check structural invariants of a net");
    validate_cmd->add_option("net", net_arg, "Net file")->required();

    std::string horizon, sample_dt;
    bool record = false;
    auto* simulate_cmd = app.add_subcommand("simulate", "Evolve a net under a scenario");
    simulate_cmd->add_option("net", net_arg, "Net file or model id")->required();
    simulate_cmd->add_option("scenario", scenario_arg, "Scenario file")->required();
    simulate_cmd->add_option("--horizon", horizon, "Override the scenario horizon (p/q)");
    simulate_cmd->add_option("--sample-dt", sample_dt, "Write a sampled CSV trajectory instead of JSON");
    simulate_cmd->add_option("--out", out, "Output file");
    simulate_cmd->add_flag("--record", record, "Append the run to the repository history");

    std::string mode = "heuristic";
    auto* search_cmd = app.add_subcommand("search", "Search priority assignments for the first feasible one");
    search_cmd->add_option("net", net_arg, "Net file or model id")->required();
    search_cmd->add_option("scenario", scenario_arg, "Scenario file with a deadline")->required();
    search_cmd->add_option("--mode", mode, "heuristic or exhaustive")
        ->check(CLI::IsMember({"heuristic", "exhaustive"}));
    search_cmd->add_option("--out", out, "Output file");
    search_cmd->add_flag("--record", record, "Append the selected run to the repository history");

    std::string net_b, fusion_arg, store_name;
    auto* compose_cmd = app.add_subcommand("compose", "Fuse two nets along shared places and transitions");
    compose_cmd->add_option("a", net_arg, "First net file or model id")->required();
    compose_cmd->add_option("b", net_b, "Second net file or model id")->required();
    compose_cmd->add_option("--fusion", fusion_arg, "Fusion map file")->required();
    compose_cmd->add_option("--out", out, "Output file");
    compose_cmd->add_option("--store", store_name, "Also store the result under this name");

    auto* store_cmd = app.add_subcommand("store", "Model repository and run history");
    store_cmd->require_subcommand(1);
    std::string name, id;
    std::vector<std::string> ids;
    bool csv = false;
    auto* put_cmd = store_cmd->add_subcommand("put", "Store a net");
    put_cmd->add_option("net", net_arg, "Net file")->required();
    put_cmd->add_option("--name", name, "Model name")->required();
    auto* get_cmd = store_cmd->add_subcommand("get", "Print a stored net");
    get_cmd->add_option("id", id, "Model id or hash")->required();
    get_cmd->add_option("--out", out, "Output file");
    auto* list_cmd = store_cmd->add_subcommand("list", "List stored models");
    auto* history_cmd = store_cmd->add_subcommand("history", "List runs, or print one");
    history_cmd->add_option("id", id, "History entry id");
    auto* compare_cmd = store_cmd->add_subcommand("compare", "Compare recorded runs");
    compare_cmd->add_option("ids", ids, "History entry ids")->required();
    compare_cmd->add_flag("--csv", csv, "CSV instead of JSON");

    std::string host = "127.0.0.1";
    int port = default_port();
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--port", port, "Port (HPN_PORT)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*validate_cmd) {
            ValidationReport report = validate(load_net(read_text(net_arg)));
            emit(formats::dump(validation_json(report)), out);
            return report.ok() ? kOk : kInfeasible;
        }
        if (*simulate_cmd) {
            HybridNet net = load_net_arg(net_arg, repo);
            dss::Scenario s = formats::load_scenario(read_text(scenario_arg));
            if (!horizon.empty()) s.horizon = Rational::parse(horizon);
            dss::ScenarioResult r = dss::run_scenario(net, s, s.name);
            if (!sample_dt.empty()) {
                emit(formats::trajectory_csv(dss::apply_scenario(net, s), r.graph, Rational::parse(sample_dt)), out);
            } else {
                emit(formats::dump(formats::result_to_json(net, r)), out);
            }
            if (record) std::cerr << "recorded " << store::ModelRepository(repo).append_history(net, r) << "\n";
            return r.feasible ? kOk : kInfeasible;
        }
        if (*search_cmd) {
            HybridNet net = load_net_arg(net_arg, repo);
            dss::Scenario s = formats::load_scenario(read_text(scenario_arg));
            auto m = mode == "exhaustive" ? dss::SearchMode::Exhaustive : dss::SearchMode::Heuristic;
            dss::SearchResult r = dss::search_first_feasible(net, s, m);
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
            emit(formats::dump(formats::search_to_json(net, r)), out);
            if (record && !r.trace.empty())
                std::cerr << "recorded " << store::ModelRepository(repo).append_history(net, r.result) << "\n";
            return r.feasible ? kOk : kInfeasible;
        }
        if (*compose_cmd) {
            HybridNet a = load_net_arg(net_arg, repo);
            HybridNet b = load_net_arg(net_b, repo);
            HybridNet c = store::compose(a, b, store::load_fusion(read_text(fusion_arg)));
            emit(save_net(c), out);
            if (!store_name.empty()) std::cerr << "stored " << store::ModelRepository(repo).put(c, store_name) << "\n";
            return kOk;
        }
        if (*store_cmd) {
            store::ModelRepository r(repo);
            if (*put_cmd) {
                json j;
                j["id"] = r.put(load_net(read_text(net_arg)), name);
                emit(formats::dump(j), out);
            } else if (*get_cmd) {
                emit(save_net(r.get(id)), out);
            } else if (*list_cmd) {
                emit(formats::dump(models_json(r.list())), out);
            } else if (*history_cmd) {
                if (!id.empty()) {
                    emit(r.history_document(id), out);
                } else {
                    emit(formats::dump(history_index_json(r.history_index())), out);
                }
            } else if (*compare_cmd) {
                auto rows = dss::compare_runs(r.load_history(), ids);
                emit(csv ? dss::comparison_csv(rows) : formats::dump(formats::comparison_to_json(rows)), out);
            }
            return kOk;
        }
        if (*serve_cmd) {
            HttpServer server{Service(repo)};
            int bound = server.bind(host, port);
            if (bound < 0) {
                std::cerr << "cannot bind " << host << ":" << port << "\n";
                return kEngine;
            }
            std::cerr << "listening on " << host << ":" << bound << "\n";
            server.run();
            return kOk;
        }
    } catch (const std::exception& e) {
        ApiError err = to_api_error(e);
        std::cerr << formats::dump(err.to_json());
        return exit_code(err);
    }
    return kUsage;
}

}  // namespace hpn::api
