// grwlab command-line front end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grwlab/config.hpp"
#include "grwlab/runner.hpp"

namespace fs = std::filesystem;
using namespace grwlab;

namespace {

std::string flag_name(const std::string& key) {
    std::string dashed = key;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    return dashed == key ? "--" + key : "--" + dashed + ",--" + key;
}

// Files are written next to their destination and renamed into place; on
// failure every file this run created is removed.
class OutputFiles {
public:
    void write(const std::string& key, const std::string& path, const std::string& content) {
        const std::string tmp = path + ".partial";
        tmps_.push_back(tmp);
        {
            std::ofstream f(tmp, std::ios::binary);
            if (!f) throw ConfigError(key, "cannot write '" + path + "'");
            f << content;
            f.flush();
            if (!f) throw ConfigError(key, "write failed for '" + path + "'");
        }
        fs::rename(tmp, path);
        tmps_.pop_back();
        done_.push_back(path);
    }

    void discard() noexcept {
        std::error_code ec;
        for (const auto& p : tmps_) fs::remove(p, ec);
        for (const auto& p : done_) fs::remove(p, ec);
        tmps_.clear();
        done_.clear();
    }

private:
    std::vector<std::string> tmps_, done_;
};

int run_subcommand(const std::string& name, const std::string& config_path, const KeyValues& flags) {
    OutputFiles files;
    try {
        const KeyValues file = config_path.empty() ? KeyValues{} : read_config_file(config_path);
        const RunConfig cfg = parse_config(name, file, flags);
        const ExperimentReport rep = run_scenario(cfg);
        if (cfg.has("out")) files.write("out", cfg.text("out"), rep.json_text());
        if (cfg.has("csv")) files.write("csv", cfg.text("csv"), rep.trials.to_csv());
        if (!cfg.has("out")) std::cout << (cfg.text("format") == "csv" ? rep.trials.to_csv() : rep.json_text());
        return kExitOk;
    } catch (const std::exception& e) {
        files.discard();
        const int code = exit_code_for(e);
        std::cerr << "grwlab " << name << ": error: " << e.what() << "\n";
        return code;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grwlab: localization-dynamics experiments, spin-1 correlations and ray-set colorability"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every subcommand");

    struct Sub {
        CLI::App* app;
        std::string config;
        std::map<std::string, std::string> values;
        std::vector<std::string> order;
    };
    std::vector<Sub> subs;
    subs.reserve(scenario_specs().size());
    for (const auto& spec : scenario_specs()) {
        Sub& s = subs.emplace_back();
        s.app = app.add_subcommand(spec.name, spec.description);
        s.app->allow_extras();  // unknown keys go to parse_config, which suggests a near match
        s.app->add_option("--config", s.config, "key = value file; flags override it")->check(CLI::ExistingFile);
        for (const auto& k : scenario_keys(spec)) {
            s.order.push_back(k.name);
            const std::string help = k.help + (k.default_value.empty() ? "" : " [default: " + k.default_value + "]");
            std::string& target = s.values[k.name];
            if (k.kind == KeyKind::Bool)
                s.app->add_option(flag_name(k.name), target, help)->expected(0, 1)->default_str("true");
            else
                s.app->add_option(flag_name(k.name), target, help);
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    for (Sub& s : subs) {
        if (!s.app->parsed()) continue;
        KeyValues flags;
        for (const auto& key : s.order) {
            const CLI::Option* opt = s.app->get_option(flag_name(key).substr(0, flag_name(key).find(',')));
            if (opt->count() == 0) continue;
            std::string v = s.values[key];
            if (v.empty()) v = "true";
            flags.emplace_back(key, v);
        }
        const std::vector<std::string> extra = s.app->remaining();
        for (std::size_t i = 0; i < extra.size(); ++i) {
            std::string tok = extra[i];
            if (tok.rfind("--", 0) != 0) {
                std::cerr << "grwlab " << s.app->get_name() << ": error: unexpected argument '" << tok << "'\n";
                return kExitConfig;
            }
            tok.erase(0, 2);
            std::string value = "true";
            if (const auto eq = tok.find('='); eq != std::string::npos) {
                value = tok.substr(eq + 1);
                tok.erase(eq);
            } else if (i + 1 < extra.size() && extra[i + 1].rfind("--", 0) != 0) {
                value = extra[++i];
            }
            std::replace(tok.begin(), tok.end(), '-', '_');
            flags.emplace_back(tok, value);
        }
        return run_subcommand(s.app->get_name(), s.config, flags);
    }
    return kExitConfig;
}
