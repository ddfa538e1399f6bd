#include "commands.hpp"
#include "config.hpp"

#include "mixkin/errors.hpp"
#include "mixkin/parallel.hpp"
#include "mixkin/version.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw mixkin::ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream f(p);
    f << j.dump(2) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-species kinetic and fluid verification studies"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int threads = 0;
    long long seed = -1;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory (overrides the config)");
    app.add_option("--threads", threads, "Worker cap")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Seed (overrides the config)")->check(CLI::NonNegativeNumber);
    app.fallthrough();
    for (const auto& name : mixkin::cli::command_names()) app.add_subcommand(name);

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    fs::path out;
    try {
        const std::string text = config_path.empty() ? std::string("{}") : read_file(config_path);
        auto cfg = mixkin::cli::parse_config(text);
        json overrides = json::object();
        if (!out_dir.empty()) {
            cfg.output = out_dir;
            overrides["output"] = out_dir;
        }
        if (threads > 0) {
            cfg.threads = threads;
            overrides["threads"] = threads;
        }
        if (seed >= 0) {
            cfg.seed = static_cast<std::uint64_t>(seed);
            overrides["seed"] = seed;
        }
        cfg.validate();
        out = cfg.output;
        fs::create_directories(out);
        mixkin::set_threads(cfg.threads);

        const json resolved = cfg.to_json();
        write_json(out / "manifest.json", {{"command", command},
                                           {"config", resolved},
                                           {"config_sha256", mixkin::cli::sha256_hex(resolved.dump())},
                                           {"input_sha256", mixkin::cli::sha256_hex(text)},
                                           {"defaults_applied", cfg.defaults_applied},
                                           {"overrides", overrides},
                                           {"build", mixkin::build_info()}});

        const auto res = mixkin::cli::run_command(command, cfg, out.string());
        std::cout << command << ": " << (res.pass ? "pass" : "FAIL") << '\n';
        return res.pass ? 0 : 1;
    } catch (const std::exception& e) {
        const json err = mixkin::cli::error_json(e);
        std::cerr << err.dump() << '\n';
        if (!out.empty()) {
            std::error_code ec;
            if (fs::is_directory(out, ec)) write_json(out / "error.json", err);
        }
        return mixkin::cli::exit_code_for(e);
    }
}
