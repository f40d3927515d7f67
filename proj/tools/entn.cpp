// entn: event-stream tensor network toolkit.
//
//   entn gen        synthetic labeled event stream from a scene file
//   entn bin        event CSV -> binary tensor dump
//   entn decompose  event CSV -> factor checkpoint + solver trace
//   entn classify   labeled CSV + checkpoint -> AUC report
//   entn denoise    CSV + checkpoint -> filtered CSV + report
//   entn sweep      (lambda1, lambda2) grid -> AUC table + gaps
//
// Every subcommand writes its resolved configuration next to its outputs;
// `entn --config <that file> <subcommand>` reproduces the run.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "entn/entn.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

int g_verbosity = 1;

void log_info(const std::string& msg) {
    if (g_verbosity >= 1) std::cerr << "[entn] " << msg << '\n';
}
void log_warn(const std::string& msg) { std::cerr << "[entn] warning: " << msg << '\n'; }
void log_debug(const std::string& msg) {
    if (g_verbosity >= 2) std::cerr << "[entn] " << msg << '\n';
}

std::size_t default_threads() {
    if (const char* env = std::getenv("ENTN_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return std::size_t(v);
    }
    return 1;
}

std::ofstream open_out(const fs::path& p, bool binary = false) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
    if (!out) throw entn::ArgumentError("cannot write '" + p.string() + "'");
    return out;
}

std::ifstream open_in(const std::string& p, bool binary = false) {
    std::ifstream in(p, binary ? std::ios::binary : std::ios::in);
    if (!in) throw entn::ArgumentError("cannot open '" + p + "'");
    return in;
}

std::vector<double> parse_grid(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw entn::ArgumentError(std::string(flag) + ": bad grid value '" + item + "'");
        }
    }
    if (out.empty()) throw entn::ArgumentError(std::string(flag) + ": empty grid");
    return out;
}

// Options shared by the subcommands that read an event CSV.
struct InputOpts {
    std::string input;
    std::size_t rows = 0, cols = 0, frames = 60;

    void add(CLI::App* app, bool with_frames = true) {
        app->add_option("--input,-i", input, "Event CSV")->required();
        app->add_option("--rows", rows, "Sensor rows (I)")->required()->check(CLI::PositiveNumber);
        app->add_option("--cols", cols, "Sensor columns (J)")->required()->check(CLI::PositiveNumber);
        if (with_frames) app->add_option("--frames,-N", frames, "Time segments (N)")->capture_default_str()->check(CLI::PositiveNumber);
    }
    entn::EventStream load() const {
        auto in = open_in(input);
        return entn::parse_events(in, {rows, cols});
    }
};

struct SolverOpts {
    entn::SolverConfig cfg;

    void add(CLI::App* app) {
        app->add_option("--f-max", cfg.f_max, "Maximal rank")->capture_default_str();
        app->add_option("--lambda1", cfg.lambda1, "L1 coefficient")->capture_default_str();
        app->add_option("--lambda2", cfg.lambda2, "L2 / proximal coefficient")->capture_default_str();
        app->add_option("--s-max", cfg.s_max, "Iteration cap")->capture_default_str();
        app->add_option("--grow-tol", cfg.grow_tol, "Rank growth threshold")->capture_default_str();
        app->add_option("--conv-tol", cfg.conv_tol, "Convergence threshold")->capture_default_str();
        app->add_option("--init-scale", cfg.init_scale, "Initial factor magnitude")->capture_default_str();
        app->add_flag("--clamp-x", cfg.clamp_x, "Reset observed entries of X to 1 after each update");
    }
};

void write_config(const CLI::App& app, const fs::path& path, const std::string& sub) {
    auto out = open_out(path);
    out << "# re-run with: entn --config " << path.filename().string() << ' ' << sub << '\n';
    // Keep the globals and the invoked subcommand's section; unset options
    // come out as "" and would not parse back.
    std::istringstream all(app.config_to_str(true, false));
    for (std::string line; std::getline(all, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos || line.compare(eq + 1, std::string::npos, "\"\"") == 0) continue;
        const auto dot = line.find('.');
        if (dot < eq && line.compare(0, dot, sub) != 0) continue;
        out << line << '\n';
    }
    log_debug("resolved configuration written to " + path.string());
}

std::string model_label(const entn::SolverConfig& cfg) {
    return cfg.lambda1 == 0.0 ? "FCTN-ablation" : "ENTN";
}

entn::Task parse_task(const std::string& s) {
    if (s == "objects") return entn::Task::Objects;
    if (s == "noise") return entn::Task::SignalVsNoise;
    throw entn::ArgumentError("--task must be 'objects' or 'noise'");
}

entn::FactorTriple load_checkpoint(const std::string& path, const entn::EventTensor& tensor) {
    auto in = open_in(path, true);
    entn::FactorTriple g = entn::read_checkpoint(in);
    if (g.output_dims() != tensor.dims())
        throw entn::ConsistencyError("checkpoint covers " + entn::dims_string(g.output_dims()) +
                                     " but the binned stream is " + entn::dims_string(tensor.dims()));
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-stream representation learning with an elastic-net tensor network"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand
    app.set_config("--config", "", "Read options from a file written by a previous run");
    std::uint64_t seed = 0;
    std::size_t threads = default_threads();
    app.add_option("--seed", seed, "Global seed")->capture_default_str();
    app.add_option("--threads", threads, "Worker cap (default: $ENTN_THREADS or 1)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_flag("-v,--verbose", [](std::int64_t n) { g_verbosity = 1 + int(n); }, "More logging");
    app.add_flag("-q,--quiet", [](std::int64_t) { g_verbosity = 0; }, "Errors only");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic labeled event stream");
    std::string gen_spec, gen_out;
    gen->add_option("--spec", gen_spec, "Scene file")->required();
    gen->add_option("--out,-o", gen_out, "Output event CSV")->required();

    // bin
    auto* bin = app.add_subcommand("bin", "Bin an event CSV into a binary tensor dump");
    InputOpts bin_in;
    std::string bin_out;
    bin_in.add(bin);
    bin->add_option("--out,-o", bin_out, "Tensor dump file")->required();

    // decompose
    auto* dec = app.add_subcommand("decompose", "Learn the factor triple of a binned stream");
    InputOpts dec_in;
    SolverOpts dec_solver;
    std::string dec_dir;
    bool dec_binary = false;
    dec_in.add(dec);
    dec_solver.add(dec);
    dec->add_option("--out-dir,-o", dec_dir, "Output directory")->required();
    dec->add_flag("--binary", dec_binary, "Write the checkpoint in the binary format");

    // classify
    auto* cls = app.add_subcommand("classify", "AUC of a linear SVM on per-event latent features");
    InputOpts cls_in;
    std::string cls_ckpt, cls_dir, cls_task = "objects";
    entn::SvmParams cls_svm;
    cls_in.add(cls);
    cls->add_option("--checkpoint", cls_ckpt, "Factor checkpoint from decompose")->required();
    cls->add_option("--task", cls_task, "objects | noise")->capture_default_str();
    cls->add_option("--svm-c", cls_svm.c, "SVM penalty C")->capture_default_str();
    cls->add_option("--svm-epochs", cls_svm.epochs, "SVM epoch cap")->capture_default_str();
    cls->add_option("--out-dir,-o", cls_dir, "Output directory")->required();

    // denoise
    auto* den = app.add_subcommand("denoise", "Drop events with a low reconstruction score");
    InputOpts den_in;
    std::string den_ckpt, den_dir;
    double den_quantile = 0.2;
    double den_tau = 0.0;
    den_in.add(den);
    den->add_option("--checkpoint", den_ckpt, "Factor checkpoint from decompose")->required();
    auto* q_opt = den->add_option("--quantile", den_quantile, "Threshold at this score quantile")
                      ->capture_default_str()
                      ->check(CLI::Range(0.0, 1.0));
    den->add_option("--tau", den_tau, "Explicit score threshold")->excludes(q_opt);
    den->add_option("--out-dir,-o", den_dir, "Output directory")->required();

    // sweep
    auto* swp = app.add_subcommand("sweep", "AUC over a (lambda1, lambda2) grid");
    InputOpts swp_in;
    SolverOpts swp_solver;
    std::string swp_dir, swp_task = "objects", swp_l1 = "0,0.2,0.4,0.6", swp_l2 = "0,0.2,0.4,0.6";
    entn::SvmParams swp_svm;
    swp_in.add(swp);
    swp_solver.add(swp);
    swp->add_option("--lambda1-grid", swp_l1, "Comma-separated lambda1 values")->capture_default_str();
    swp->add_option("--lambda2-grid", swp_l2, "Comma-separated lambda2 values")->capture_default_str();
    swp->add_option("--task", swp_task, "objects | noise")->capture_default_str();
    swp->add_option("--svm-c", swp_svm.c, "SVM penalty C")->capture_default_str();
    swp->add_option("--out-dir,-o", swp_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            entn::SceneSpec spec = entn::load_scene(gen_spec);
            // The scene file's seed applies unless --seed is given; the
            // echoed config records whichever one was used.
            auto* seed_opt = app.get_option("--seed");
            if (seed_opt->count() > 0) spec.seed = seed;
            else seed_opt->add_result(std::to_string(spec.seed));
            const auto scene = entn::generate(spec);
            for (const auto& w : scene.warnings) log_warn(w);
            const fs::path out(gen_out);
            {
                auto f = open_out(out);
                entn::write_events(f, scene.stream);
            }
            {
                auto f = open_out(fs::path(out.string() + ".scene"));
                entn::write_scene(f, spec);
            }
            write_config(app, fs::path(out.string() + ".run.ini"), "gen");
            const auto summary = entn::describe(spec);
            std::cout << "events " << scene.stream.size() << " (expected " << summary.expected_events << ")\n"
                      << "expected_density " << summary.expected_density << '\n';
            return 0;
        }

        if (bin->parsed()) {
            const auto stream = bin_in.load();
            const auto tensor = entn::bin_to_tensor(stream, bin_in.frames);
            {
                auto f = open_out(bin_out);
                entn::write_tensor_dump(f, tensor);
            }
            write_config(app, fs::path(bin_out + ".run.ini"), "bin");
            std::cout << "dims " << entn::dims_string(tensor.dims()) << "\nones " << tensor.ones() << "\ndensity "
                      << entn::tensor_density(tensor) << '\n';
            return 0;
        }

        if (dec->parsed()) {
            entn::SolverConfig cfg = dec_solver.cfg;
            cfg.seed = seed;
            cfg.validate();
            const auto stream = dec_in.load();
            const auto tensor = entn::bin_to_tensor(stream, dec_in.frames);
            log_info("tensor " + entn::dims_string(tensor.dims()) + ", density " +
                     std::to_string(entn::tensor_density(tensor)) + ", model " + model_label(cfg));
            const auto t0 = std::chrono::steady_clock::now();
            const entn::SolverState st = entn::solve(tensor.to_real(), cfg);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const fs::path dir(dec_dir);
            fs::create_directories(dir);
            {
                auto f = open_out(dir / (dec_binary ? "factors.bin" : "factors.txt"), dec_binary);
                if (dec_binary) entn::write_checkpoint_binary(f, st.factors);
                else entn::write_checkpoint_text(f, st.factors);
            }
            {
                auto f = open_out(dir / "trace.csv");
                entn::write_trace_csv(f, st.trace);
            }
            const double last_rel = st.trace.empty() ? 0.0 : st.trace.back().rel_change;
            json info = {{"model", model_label(cfg)},
                         {"dims", {tensor.I, tensor.J, tensor.N}},
                         {"density", entn::tensor_density(tensor)},
                         {"final_rank", st.rank()},
                         {"iterations", st.s},
                         {"converged", st.converged},
                         {"final_rel_change", last_rel},
                         {"final_objective", st.trace.empty() ? 0.0 : st.trace.back().objective},
                         {"wall_seconds", secs}};
            {
                auto f = open_out(dir / "run_info.json");
                f << info.dump(2) << '\n';
            }
            write_config(app, dir / "run_config.ini", "decompose");
            std::cout << "model " << model_label(cfg) << "\nfinal_rank " << st.rank() << "\niterations " << st.s
                      << "\nconverged " << (st.converged ? 1 : 0) << "\nrel_change " << last_rel << "\nseconds "
                      << secs << '\n';
            return 0;
        }

        if (cls->parsed()) {
            const entn::Task task = parse_task(cls_task);
            const auto stream = cls_in.load();
            if (!stream.labeled()) throw entn::ProtocolError("classify needs a label column on every event");
            const auto tensor = entn::bin_to_tensor(stream, cls_in.frames);
            const auto g = load_checkpoint(cls_ckpt, tensor);
            entn::SvmParams svm = cls_svm;
            svm.seed = seed;
            const auto res = entn::classify(entn::extract_features(stream, tensor, g, task), cls_in.frames, svm);
            const fs::path dir(cls_dir);
            fs::create_directories(dir);
            {
                auto f = open_out(dir / "svm_model.txt");
                entn::write_svm_model(f, res.model);
            }
            {
                auto f = open_out(dir / "test_scores.csv");
                f << "score,label\n";
                for (std::size_t k = 0; k < res.test_scores.size(); ++k)
                    f << entn::format_double(res.test_scores[k]) << ',' << res.test_labels[k] << '\n';
            }
            json report = {{"task", entn::task_name(task)},
                           {"auc", res.auc},
                           {"train_rows", res.train_rows},
                           {"test_rows", res.test_rows},
                           {"train_positive", res.train_positive},
                           {"test_positive", res.test_positive},
                           {"split_frame", entn::split_frame(cls_in.frames)},
                           {"svm_epochs", res.model.epochs_run}};
            {
                auto f = open_out(dir / "auc_report.json");
                f << report.dump(2) << '\n';
            }
            write_config(app, dir / "run_config.ini", "classify");
            std::cout << "auc " << entn::format_double(res.auc) << "\ntrain_rows " << res.train_rows << "\ntest_rows "
                      << res.test_rows << '\n';
            return 0;
        }

        if (den->parsed()) {
            const auto stream = den_in.load();
            const auto tensor = entn::bin_to_tensor(stream, den_in.frames);
            const auto g = load_checkpoint(den_ckpt, tensor);
            const auto scores = entn::score_events(stream, tensor, g);
            const double tau = den->count("--tau") ? den_tau : entn::score_quantile(scores, den_quantile);
            const auto res = entn::filter(stream, scores, tau);
            const fs::path dir(den_dir);
            fs::create_directories(dir);
            {
                auto f = open_out(dir / "filtered.csv");
                entn::write_events(f, res.kept);
            }
            {
                auto f = open_out(dir / "scores.csv");
                entn::write_denoise_scores(f, stream, res.report);
            }
            {
                auto f = open_out(dir / "summary.txt");
                entn::write_denoise_summary(f, res.report);
            }
            write_config(app, dir / "run_config.ini", "denoise");
            entn::write_denoise_summary(std::cout, res.report);
            return 0;
        }

        if (swp->parsed()) {
            const entn::Task task = parse_task(swp_task);
            const auto l1 = parse_grid(swp_l1, "--lambda1-grid");
            const auto l2 = parse_grid(swp_l2, "--lambda2-grid");
            entn::SolverConfig cfg = swp_solver.cfg;
            cfg.seed = seed;
            entn::SvmParams svm = swp_svm;
            svm.seed = seed;
            const auto stream = swp_in.load();
            if (!stream.labeled()) throw entn::ProtocolError("sweep needs a label column on every event");
            log_info("sweeping " + std::to_string(l1.size() * l2.size()) + " cells on " + std::to_string(threads) +
                     " thread(s)");
            const auto res = entn::sweep_lambdas(stream, swp_in.frames, l1, l2, cfg, task, svm, threads);
            const fs::path dir(swp_dir);
            fs::create_directories(dir);
            {
                auto f = open_out(dir / "results.csv");
                f << "lambda1,lambda2,auc,converged,iters,seconds\n";
                for (const auto& c : res.cells) {
                    f << entn::format_double(c.lambda1) << ',' << entn::format_double(c.lambda2) << ','
                      << (c.ok() ? entn::format_double(c.auc) : "nan") << ',' << (c.converged ? 1 : 0) << ','
                      << c.iters << ',' << c.seconds << '\n';
                    if (!c.ok()) log_warn("cell lambda1=" + std::to_string(c.lambda1) + " lambda2=" +
                                          std::to_string(c.lambda2) + " failed: " + c.error);
                }
            }
            {
                auto f = open_out(dir / "gaps.csv");
                f << "axis,fixed,auc_max,auc_min,gap\n";
                for (const auto& gp : res.gaps) {
                    const std::string line = gp.axis + ',' + (gp.axis == "all" ? "" : entn::format_double(gp.fixed)) +
                                             ',' + entn::format_double(gp.auc_max) + ',' +
                                             entn::format_double(gp.auc_min) + ',' + entn::format_double(gp.gap);
                    f << line << '\n';
                    std::cout << "gap " << line << '\n';
                }
            }
            write_config(app, dir / "run_config.ini", "sweep");
            return 0;
        }
    } catch (const entn::NumericalError& e) {
        std::cerr << "[entn] numerical error at iteration " << e.iteration() << ": " << e.what() << '\n';
        return 3;
    } catch (const entn::Error& e) {
        std::cerr << "[entn] error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "[entn] error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
