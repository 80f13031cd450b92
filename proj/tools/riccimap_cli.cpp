// Batch front end for the riccimap pipeline: fixture generation, conformal /
// orthographic flattening to 9-channel images, distortion comparison, rigid
// alignment, and report/export utilities.

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "riccimap/riccimap.hpp"

namespace fs = std::filesystem;
using namespace riccimap;

namespace {

constexpr int kMaxFlowIters = 500;

std::mutex g_log_mutex;

void log_line(const std::string& msg)
{
    std::lock_guard<std::mutex> lock(g_log_mutex);
    std::cerr << msg << '\n';
}

/// Expands shell-style patterns (also accepting literal paths), returning a
/// sorted, de-duplicated list.
std::vector<std::string> expand_inputs(const std::vector<std::string>& patterns)
{
    std::set<std::string> found;
    for (const auto& pattern : patterns) {
        glob_t g{};
        int rc = glob(pattern.c_str(), GLOB_TILDE, nullptr, &g);
        if (rc == 0)
            for (std::size_t i = 0; i < g.gl_pathc; ++i) found.insert(g.gl_pathv[i]);
        globfree(&g);
        if (rc != 0 && fs::exists(pattern)) found.insert(pattern);
    }
    return {found.begin(), found.end()};
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

/// Writes content through a temp file in the destination directory followed by
/// an atomic rename, so readers never observe a partial file.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& emit)
{
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw FormatError("cannot write " + tmp);
        emit(out);
        if (!out) throw FormatError("short write to " + tmp);
    }
    fs::rename(tmp, path);
}

void write_json(const std::string& path, const nlohmann::json& j)
{
    atomic_write(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

TriMesh load_input(const std::string& path, const std::string& kind)
{
    if (kind == "depth") {
        std::string ext = fs::path(path).extension().string();
        DepthGrid grid = (ext == ".csv") ? load_depth_csv(path) : load_depth_pgm(path);
        return mesh_from_depth(grid);
    }
    return load_mesh(path);
}

struct FlattenConfig {
    std::vector<std::string> inputs;
    std::string kind = "mesh";
    std::string out_dir;
    std::string size = "182x182";
    double epsilon = 1e-6;
    std::string mode = "newton";
    std::string projection = "conformal";
    std::string reference;
    bool no_align = false;
    int jobs = 1;
    int width = 182;
    int height = 182;
};

bool parse_size(const std::string& text, int& w, int& h)
{
    auto x = text.find('x');
    if (x == std::string::npos) return false;
    try {
        w = std::stoi(text.substr(0, x));
        h = std::stoi(text.substr(x + 1));
    } catch (const std::exception&) {
        return false;
    }
    return w >= 2 && h >= 2;
}

/// Applies key=value pairs from a config file to options the user did not set
/// on the command line (flags win). Unknown keys are usage errors.
bool apply_config(const std::string& path, FlattenConfig& cfg, const CLI::App& cmd)
{
    std::ifstream in(path);
    if (!in) {
        std::cerr << "cannot read config file " << path << '\n';
        return false;
    }
    auto trim = [](std::string s) {
        auto a = s.find_first_not_of(" \t\r");
        auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::cerr << path << ":" << lineno << ": expected key=value\n";
            return false;
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        auto overridden = [&](const std::string& flag) { return cmd.count(flag) > 0; };
        try {
            if (key == "input") {
                if (!overridden("--input")) cfg.inputs.push_back(value);
            } else if (key == "kind") {
                if (!overridden("--kind")) cfg.kind = value;
            } else if (key == "out") {
                if (!overridden("--out")) cfg.out_dir = value;
            } else if (key == "size") {
                if (!overridden("--size")) cfg.size = value;
            } else if (key == "epsilon") {
                if (!overridden("--epsilon")) cfg.epsilon = std::stod(value);
            } else if (key == "mode") {
                if (!overridden("--mode")) cfg.mode = value;
            } else if (key == "projection") {
                if (!overridden("--projection")) cfg.projection = value;
            } else if (key == "reference") {
                if (!overridden("--reference")) cfg.reference = value;
            } else if (key == "no-align") {
                if (!overridden("--no-align")) cfg.no_align = (value == "true" || value == "1");
            } else if (key == "jobs") {
                if (!overridden("--jobs")) cfg.jobs = std::stoi(value);
            } else {
                std::cerr << path << ":" << lineno << ": unknown key '" << key << "'\n";
                return false;
            }
        } catch (const std::exception&) {
            std::cerr << path << ":" << lineno << ": bad value for '" << key << "'\n";
            return false;
        }
    }
    if ((cfg.mode != "gradient" && cfg.mode != "newton") ||
        (cfg.projection != "conformal" && cfg.projection != "orthographic") ||
        (cfg.kind != "mesh" && cfg.kind != "depth")) {
        std::cerr << path << ": invalid mode/projection/kind value\n";
        return false;
    }
    return true;
}

nlohmann::json distortion_json(const DistortionStats& d)
{
    return {{"mean", d.mean}, {"max", d.max}, {"flipped", d.flipped}};
}

/// Full single-input pipeline: load -> optional ICP -> geometry -> flow ->
/// layout (or orthographic) -> channels -> MCI + JSON reports.
void flatten_one(const FlattenConfig& cfg, const TriMesh* reference, const std::string& input)
{
    TriMesh mesh = load_input(input, cfg.kind);
    std::string stem = stem_of(input);
    std::string base = (fs::path(cfg.out_dir) / stem).string();

    nlohmann::json stats;
    stats["input"] = input;
    stats["projection"] = cfg.projection;
    if (reference) {
        auto icp = icp_align(mesh, *reference);
        mesh = apply_transform(mesh, icp.transform);
        stats["icp"] = {{"transform", icp.transform}, {"rms", icp.rms}, {"iterations", icp.iterations}};
    }

    auto normals = vertex_normals(mesh);
    auto curvature = weighted_curvature(mesh);

    PlanarEmbedding emb;
    VertexScalars factors;
    const VertexScalars* factors_ptr = nullptr;
    if (cfg.projection == "conformal") {
        auto metric = init_circle_packing(mesh);
        FlowMode mode = cfg.mode == "gradient" ? FlowMode::GRADIENT : FlowMode::NEWTON;
        auto [flowed, report] = ricci_flow(mesh, metric, cfg.epsilon, kMaxFlowIters, mode);
        write_json(base + ".flow.json", report);
        if (!report.converged)
            throw NonConvergedMetricError("flow did not reach epsilon within " +
                                          std::to_string(kMaxFlowIters) + " iterations");
        emb = layout(mesh, flowed, std::max(cfg.epsilon * 10.0, 1e-3));
        factors = conformal_factors(mesh, emb);
        factors_ptr = &factors;
    } else {
        emb = orthographic(mesh);
    }

    auto table = assemble_channels(mesh, emb, normals, curvature, factors_ptr);
    auto img = rasterize(table, emb, mesh, cfg.width, cfg.height);
    atomic_write(base + ".mci", [&](std::ostream& out) { write_mci(img, out); });

    stats["distortion"] = distortion_json(qc_distortion(mesh, emb));
    stats["vertices"] = mesh.vertex_count();
    stats["faces"] = mesh.face_count();
    write_json(base + ".stats.json", stats);
}

int run_flatten(const FlattenConfig& cfg)
{
    auto inputs = expand_inputs(cfg.inputs);
    if (inputs.empty()) {
        std::cerr << "no inputs matched\n";
        return 2;
    }
    fs::create_directories(cfg.out_dir);

    TriMesh reference;
    bool have_reference = false;
    if (!cfg.reference.empty()) {
        reference = load_mesh(cfg.reference);
        have_reference = true;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= inputs.size()) return;
            try {
                flatten_one(cfg, have_reference ? &reference : nullptr, inputs[i]);
                log_line("flatten: ok " + inputs[i]);
            } catch (const std::exception& e) {
                ++failures;
                log_line("flatten: FAILED " + inputs[i] + ": " + e.what());
            }
        }
    };
    int jobs = std::clamp(cfg.jobs, 1, 64);
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    int failed = failures.load();
    std::cout << "flatten: " << (inputs.size() - failed) << "/" << inputs.size()
              << " inputs succeeded\n";
    return failed == 0 ? 0 : 1;
}

int run_compare(const std::vector<std::string>& patterns, const std::string& out_dir, double epsilon,
                const std::string& mode)
{
    auto inputs = expand_inputs(patterns);
    if (inputs.empty()) {
        std::cerr << "no inputs matched\n";
        return 2;
    }
    fs::create_directories(out_dir);
    int failed = 0;
    for (const auto& input : inputs) {
        try {
            TriMesh mesh = load_mesh(input);
            auto orth = qc_distortion(mesh, orthographic(mesh));
            auto metric = init_circle_packing(mesh);
            FlowMode fm = mode == "gradient" ? FlowMode::GRADIENT : FlowMode::NEWTON;
            auto [flowed, report] = ricci_flow(mesh, metric, epsilon, kMaxFlowIters, fm);
            if (!report.converged) throw NonConvergedMetricError("flow did not converge");
            auto conf = qc_distortion(mesh, layout(mesh, flowed, std::max(epsilon * 10.0, 1e-3)));
            nlohmann::json j = {{"input", input},
                                {"conformal", distortion_json(conf)},
                                {"orthographic", distortion_json(orth)},
                                {"ratio_mean", conf.mean / orth.mean}};
            write_json((fs::path(out_dir) / (stem_of(input) + ".compare.json")).string(), j);
            log_line("compare: ok " + input);
        } catch (const std::exception& e) {
            ++failed;
            log_line("compare: FAILED " + input + ": " + e.what());
        }
    }
    std::cout << "compare: " << (inputs.size() - failed) << "/" << inputs.size()
              << " inputs succeeded\n";
    return failed == 0 ? 0 : 1;
}

int run_icp(const std::vector<std::string>& patterns, const std::string& reference_path,
            const std::string& out_dir)
{
    auto inputs = expand_inputs(patterns);
    if (inputs.empty()) {
        std::cerr << "no inputs matched\n";
        return 2;
    }
    fs::create_directories(out_dir);
    TriMesh reference = load_mesh(reference_path);
    int failed = 0;
    for (const auto& input : inputs) {
        try {
            TriMesh mesh = load_mesh(input);
            auto icp = icp_align(mesh, reference);
            nlohmann::json j = {{"input", input},
                                {"reference", reference_path},
                                {"transform", icp.transform},
                                {"rms", icp.rms},
                                {"iterations", icp.iterations},
                                {"rms_history", icp.rms_history}};
            write_json((fs::path(out_dir) / (stem_of(input) + ".icp.json")).string(), j);
            log_line("icp: ok " + input);
        } catch (const std::exception& e) {
            ++failed;
            log_line("icp: FAILED " + input + ": " + e.what());
        }
    }
    std::cout << "icp: " << (inputs.size() - failed) << "/" << inputs.size() << " inputs succeeded\n";
    return failed == 0 ? 0 : 1;
}

int run_stats(const std::vector<std::string>& patterns, const std::string& out_dir)
{
    auto inputs = expand_inputs(patterns);
    if (inputs.empty()) {
        std::cerr << "no inputs matched\n";
        return 2;
    }
    fs::create_directories(out_dir);
    int failed = 0;
    for (const auto& input : inputs) {
        try {
            nlohmann::json j;
            j["input"] = input;
            if (fs::path(input).extension() == ".mci") {
                auto img = read_mci(input);
                int mask_pixels = 0;
                for (auto m : img.mask) mask_pixels += m;
                nlohmann::json norms = nlohmann::json::array();
                for (const auto& mm : img.norm) norms.push_back({mm[0], mm[1]});
                j["width"] = img.width;
                j["height"] = img.height;
                j["channels"] = NUM_CHANNELS;
                j["mask_pixels"] = mask_pixels;
                j["norm"] = norms;
            } else {
                TriMesh mesh = load_mesh(input);
                int boundary = 0;
                for (int v = 0; v < mesh.vertex_count(); ++v)
                    if (mesh.is_boundary_vertex(v)) ++boundary;
                auto k = angle_deficit_curvature(mesh);
                double total = 0.0;
                for (double v : k.values) total += v;
                double mean_edge = 0.0;
                for (int e = 0; e < mesh.edge_count(); ++e) mean_edge += mesh.edge_length(e);
                mean_edge /= std::max(1, mesh.edge_count());
                j["vertices"] = mesh.vertex_count();
                j["edges"] = mesh.edge_count();
                j["faces"] = mesh.face_count();
                j["boundary_vertices"] = boundary;
                j["total_curvature"] = total;
                j["mean_edge_length"] = mean_edge;
                j["has_colors"] = mesh.has_colors();
            }
            write_json((fs::path(out_dir) / (stem_of(input) + ".report.json")).string(), j);
            log_line("stats: ok " + input);
        } catch (const std::exception& e) {
            ++failed;
            log_line("stats: FAILED " + input + ": " + e.what());
        }
    }
    std::cout << "stats: " << (inputs.size() - failed) << "/" << inputs.size()
              << " inputs succeeded\n";
    return failed == 0 ? 0 : 1;
}

int run_export_pgm(const std::vector<std::string>& patterns, const std::string& out_dir)
{
    static const char* names[NUM_CHANNELS] = {"r", "g", "b", "nx", "ny", "nz", "k", "cf", "d"};
    auto inputs = expand_inputs(patterns);
    if (inputs.empty()) {
        std::cerr << "no inputs matched\n";
        return 2;
    }
    fs::create_directories(out_dir);
    int failed = 0;
    for (const auto& input : inputs) {
        try {
            auto img = read_mci(input);
            for (int ch = 0; ch < NUM_CHANNELS; ++ch) {
                std::string path =
                    (fs::path(out_dir) / (stem_of(input) + "." + names[ch] + ".pgm")).string();
                export_channel_pgm(img, ch, path);
            }
            log_line("export-pgm: ok " + input);
        } catch (const std::exception& e) {
            ++failed;
            log_line("export-pgm: FAILED " + input + ": " + e.what());
        }
    }
    std::cout << "export-pgm: " << (inputs.size() - failed) << "/" << inputs.size()
              << " inputs succeeded\n";
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Conformal face flattening via discrete surface Ricci flow"};
    app.require_subcommand(1);

    // fixtures
    auto* fixtures_cmd = app.add_subcommand("fixtures", "Generate the deterministic test meshes");
    std::string fixtures_out;
    fixtures_cmd->add_option("--out", fixtures_out, "Output directory")->required();

    // flatten
    FlattenConfig cfg;
    auto* flatten_cmd =
        app.add_subcommand("flatten", "Flatten meshes to 9-channel images (MCI + JSON reports)");
    flatten_cmd->add_option("--input", cfg.inputs, "Input paths or glob patterns")->required();
    flatten_cmd->add_option("--kind", cfg.kind, "Input kind")
        ->check(CLI::IsMember({"mesh", "depth"}));
    flatten_cmd->add_option("--out", cfg.out_dir, "Output directory")->required();
    flatten_cmd->add_option("--size", cfg.size, "Raster size WxH (default 182x182)");
    flatten_cmd->add_option("--epsilon", cfg.epsilon, "Flow curvature tolerance");
    flatten_cmd->add_option("--mode", cfg.mode, "Flow solver")
        ->check(CLI::IsMember({"gradient", "newton"}));
    flatten_cmd->add_option("--projection", cfg.projection, "Flattening method")
        ->check(CLI::IsMember({"conformal", "orthographic"}));
    flatten_cmd->add_option("--reference", cfg.reference, "ICP reference mesh");
    flatten_cmd->add_flag("--no-align", cfg.no_align, "Skip ICP alignment");
    flatten_cmd->add_option("--jobs", cfg.jobs, "Parallel worker count");
    std::string config_path;
    flatten_cmd->add_option("--config", config_path, "key=value config file; command-line flags win");

    // compare
    auto* compare_cmd =
        app.add_subcommand("compare", "Conformal vs orthographic distortion report per mesh");
    std::vector<std::string> compare_inputs;
    std::string compare_out, compare_mode = "newton";
    double compare_epsilon = 1e-6;
    compare_cmd->add_option("--input", compare_inputs, "Input meshes or globs")->required();
    compare_cmd->add_option("--out", compare_out, "Output directory")->required();
    compare_cmd->add_option("--epsilon", compare_epsilon, "Flow curvature tolerance");
    compare_cmd->add_option("--mode", compare_mode, "Flow solver")
        ->check(CLI::IsMember({"gradient", "newton"}));

    // icp
    auto* icp_cmd = app.add_subcommand("icp", "Rigid alignment of scans to a reference");
    std::vector<std::string> icp_inputs;
    std::string icp_reference, icp_out;
    icp_cmd->add_option("--input", icp_inputs, "Source meshes or globs")->required();
    icp_cmd->add_option("--reference", icp_reference, "Reference mesh")->required();
    icp_cmd->add_option("--out", icp_out, "Output directory")->required();

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Summaries of meshes or MCI images");
    std::vector<std::string> stats_inputs;
    std::string stats_out;
    stats_cmd->add_option("--input", stats_inputs, "Meshes or .mci files")->required();
    stats_cmd->add_option("--out", stats_out, "Output directory")->required();

    // export-pgm
    auto* export_cmd = app.add_subcommand("export-pgm", "Export MCI channels as P5 PGM images");
    std::vector<std::string> export_inputs;
    std::string export_out;
    export_cmd->add_option("--input", export_inputs, ".mci files or globs")->required();
    export_cmd->add_option("--out", export_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*fixtures_cmd) {
            fs::create_directories(fixtures_out);
            auto written = fixtures::write_all(fixtures_out);
            for (const auto& path : written) log_line("fixtures: wrote " + path);
            std::cout << "fixtures: " << written.size() << " files written\n";
            return 0;
        }
        if (*flatten_cmd) {
            if (!config_path.empty() && !apply_config(config_path, cfg, *flatten_cmd)) return 2;
            if (!parse_size(cfg.size, cfg.width, cfg.height)) {
                std::cerr << "bad --size (expect WxH with W,H >= 2)\n";
                return 2;
            }
            if (cfg.epsilon <= 0.0) {
                std::cerr << "--epsilon must be positive\n";
                return 2;
            }
            if (cfg.projection == "orthographic" && cfg.reference.empty() && !cfg.no_align) {
                std::cerr << "orthographic projection requires --reference or --no-align\n";
                return 2;
            }
            return run_flatten(cfg);
        }
        if (*compare_cmd) return run_compare(compare_inputs, compare_out, compare_epsilon, compare_mode);
        if (*icp_cmd) return run_icp(icp_inputs, icp_reference, icp_out);
        if (*stats_cmd) return run_stats(stats_inputs, stats_out);
        if (*export_cmd) return run_export_pgm(export_inputs, export_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
