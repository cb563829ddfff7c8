// nfkit command-line front end.
#include "nfkit/scenario.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

using namespace nfkit;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot read config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

unsigned parse_thread_count(const std::string& text, const std::string& source) {
    try {
        std::size_t used = 0;
        const long v = std::stol(text, &used);
        if (used == text.size() && v >= 1 && v <= 4096) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw Error(Errc::configuration, source + ": expected a thread count in [1, 4096], got '" + text + "'");
}

// --threads wins, then NFKIT_THREADS, then the hardware concurrency.
unsigned resolve_threads(std::optional<unsigned> flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("NFKIT_THREADS"); env && *env) return parse_thread_count(env, "NFKIT_THREADS");
    return std::max(1u, std::thread::hardware_concurrency());
}

int fail(const Error& e) {
    std::cerr << "nfkit: error [" << to_string(e.code()) << "] " << e.what() << "\n";
    return scenario::exit_code(e.code());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"near-field wireless simulation toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", scenario::toolkit_version);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;

    auto* run = app.add_subcommand("run", "run one experiment and write CSVs plus manifest.json");
    run->add_option("config", config_path, "scenario config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory, overrides output_dir");
    run->add_option("--seed", seed, "random seed, overrides seed");
    run->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 4096u));

    auto* validate = app.add_subcommand("validate", "parse a config and print it with every default resolved");
    validate->add_option("config", config_path, "scenario config (JSON)")->required();

    auto* list = app.add_subcommand("list-experiments", "list experiment kinds and their outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*list) {
            for (const auto& s : scenario::schemas()) {
                std::cout << s.name << "\t" << s.description << "\n";
                for (const auto& o : s.outputs) std::cout << "\t" << o << "\n";
            }
            return 0;
        }
        auto config = scenario::parse_config(read_file(config_path));
        if (*validate) {
            std::cout << scenario::serialize_config(config);
            return 0;
        }
        if (out_dir) config.output_dir = *out_dir;
        if (seed) config.seed = *seed;
        const auto manifest = scenario::run_scenario(config, resolve_threads(threads));
        for (const auto& f : manifest.files) std::cout << f.sha256 << "  " << f.name << "\n";
        std::cout << "manifest: " << (std::filesystem::path(config.output_dir) / "manifest.json").string() << "\n";
        return 0;
    } catch (const Error& e) {
        return fail(e);
    } catch (const std::exception& e) {
        std::cerr << "nfkit: error [internal] " << e.what() << "\n";
        return 1;
    }
}
