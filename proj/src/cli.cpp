#include "gfcad/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gfcad/codec.hpp"
#include "gfcad/dataset.hpp"
#include "gfcad/decoder.hpp"
#include "gfcad/diffusion.hpp"
#include "gfcad/metrics.hpp"
#include "gfcad/sequence_io.hpp"
#include "gfcad/trainer.hpp"

namespace gfcad {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

CadSequence load_sequence(const std::string& path, int max_tokens) {
    if (has_suffix(path, ".gfc")) {
        return sequence_from_binary(read_binary_file(path), max_tokens);
    }
    return sequence_from_json(read_text_file(path));
}

CadTree load_tree_or_sequence(const std::string& path, int max_tokens) {
    if (has_suffix(path, ".gfc")) {
        return deserialize_sequence(sequence_from_binary(read_binary_file(path), max_tokens));
    }
    std::string text = read_text_file(path);
    json j = json::parse(text, nullptr, false);
    if (!j.is_discarded() && j.contains("nodes")) return tree_from_json(text);
    return deserialize_sequence(sequence_from_json(text));
}

std::vector<std::string> corpus_files(const std::string& dir) {
    check(fs::is_directory(dir), ErrorKind::Io, "not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.rfind("seq_", 0) == 0 &&
            has_suffix(name, ".json")) {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    check(!files.empty(), ErrorKind::Io, "no seq_*.json files in " + dir);
    return files;
}

std::vector<CadSequence> load_corpus(const std::string& dir, int cap = 0) {
    std::vector<std::string> files = corpus_files(dir);
    if (cap > 0 && static_cast<int>(files.size()) > cap) files.resize(static_cast<std::size_t>(cap));
    std::vector<CadSequence> seqs;
    seqs.reserve(files.size());
    for (const auto& f : files) seqs.push_back(sequence_from_json(read_text_file(f)));
    return seqs;
}

struct LoadedExamples {
    std::vector<CadSequence> seqs;
    std::vector<GeomDescriptors> descs;
    std::vector<TrainExample> examples;
};

LoadedExamples load_examples(const std::string& dir, int cap = 0) {
    LoadedExamples out;
    out.seqs = load_corpus(dir, cap);
    out.descs.reserve(out.seqs.size());
    for (const auto& seq : out.seqs) {
        CadTree tree = deserialize_sequence(seq);
        out.descs.push_back(descriptors(tree, seq));
    }
    for (std::size_t i = 0; i < out.seqs.size(); ++i) {
        out.examples.push_back({&out.seqs[i], &out.descs[i]});
    }
    return out;
}

struct ModelBundle {
    ModelConfig cfg;
    GMambaModel model;
};

ModelBundle load_model(const std::string& dir) {
    check(fs::is_directory(dir), ErrorKind::Io, "model path must be a directory: " + dir);
    ModelBundle mb;
    mb.cfg = model_config_from_json(read_text_file((fs::path(dir) / "config.json").string()));
    mb.model = GMambaModel(mb.cfg);
    mb.model.init_params(0);
    mb.model.load_from_checkpoint(load_checkpoint((fs::path(dir) / "model.gft").string()));
    return mb;
}

int cmd_tokenize(const std::string& in, const std::string& out, int max_tokens) {
    CadTree tree = tree_from_json(read_text_file(in));
    CadSequence seq = serialize_tree(tree, max_tokens);
    if (has_suffix(out, ".gfc")) {
        write_binary_file(out, sequence_to_binary(seq));
    } else {
        write_text_file(out, sequence_to_json(seq));
    }
    return 0;
}

int cmd_detokenize(const std::string& in, const std::string& out, int max_tokens) {
    CadSequence seq = load_sequence(in, max_tokens);
    write_text_file(out, tree_to_json(deserialize_sequence(seq)));
    return 0;
}

int cmd_validate(const std::string& in, int max_tokens) {
    CadSequence seq = load_sequence(in, max_tokens);
    ValidationReport rep = validate_sequence(seq);
    std::cout << "has_sketch_and_extrusion: " << (rep.has_sketch_and_extrusion ? "pass" : "fail")
              << "\n"
              << "loops_closed: " << (rep.loops_closed ? "pass" : "fail") << "\n"
              << "executes_to_solid: " << (rep.executes_to_solid ? "pass" : "fail") << "\n";
    if (!rep.detail.empty()) std::cout << "detail: " << rep.detail << "\n";
    return rep.all() ? 0 : 1;
}

int cmd_execute(const std::string& in, int resolution, int samples, std::uint64_t seed,
                const std::string& out_voxel, const std::string& out_obj,
                const std::string& out_points) {
    CadTree tree = load_tree_or_sequence(in, kDefaultMaxTokens);
    VoxelGrid grid = execute(tree, resolution);
    std::cout << "occupied " << grid.occupied_count() << " / " << grid.cell_count()
              << " cells, watertight: " << (grid.watertight() ? "yes" : "no") << "\n";
    if (!out_voxel.empty()) write_binary_file(out_voxel, voxelgrid_to_rle(grid));
    if (!out_obj.empty() || !out_points.empty()) {
        PointCloud pc = sample_points(grid, samples, seed);
        if (!out_obj.empty()) write_text_file(out_obj, pointcloud_to_obj(pc));
        if (!out_points.empty()) write_binary_file(out_points, pointcloud_to_f32(pc));
    }
    return 0;
}

int cmd_gen_data(int n, int min_len, int max_len, std::uint64_t seed, const std::string& out,
                 int max_tokens) {
    fs::create_directories(out);
    std::vector<CadTree> trees = generate(n, min_len, max_len, seed);
    std::vector<CadSequence> seqs;
    seqs.reserve(trees.size());
    for (std::size_t i = 0; i < trees.size(); ++i) {
        CadSequence seq = serialize_tree(trees[i], max_tokens);
        char name[32];
        std::snprintf(name, sizeof(name), "seq_%05zu.json", i);
        write_text_file((fs::path(out) / name).string(), sequence_to_json(seq));
        seqs.push_back(std::move(seq));
    }
    CorpusStats st = stats(seqs);
    std::vector<int> lengths;
    lengths.reserve(seqs.size());
    for (const auto& s : seqs) lengths.push_back(sequence_length(s));
    SplitIndices si = split(lengths, {0.8, 0.1, 0.1}, seed);

    json manifest;
    manifest["count"] = n;
    manifest["seed"] = seed;
    manifest["min_len"] = min_len;
    manifest["max_len"] = max_len;
    manifest["max_tokens"] = max_tokens;
    manifest["stats"] = {{"total", st.total},
                         {"avg_length", st.avg_length},
                         {"bins", st.bins}};
    manifest["splits"] = {{"train", si.train}, {"val", si.val}, {"test", si.test}};
    write_text_file((fs::path(out) / "manifest.json").string(), manifest.dump(2));
    std::cout << "generated " << n << " programs, avg length " << st.avg_length << "\n";
    return 0;
}

int cmd_stats(const std::string& in, const std::string& out, bool count_commands) {
    std::vector<CadSequence> seqs = load_corpus(in);
    CorpusStats st = stats(seqs, count_commands);
    std::string csv = stats_to_csv(st);
    if (!out.empty()) write_text_file(out, csv);
    std::cout << csv;
    return 0;
}

struct TrainCliOptions {
    std::string data;
    std::string out;
    std::string config_path;
    std::string resume;
    std::string profile = "desk";
    std::string variant;
    int steps = 0;
    int ckpt_every = 100;
    int threads = 0;
    std::uint64_t seed = 0;
    bool quiet = false;
};

void save_model_dir(const std::string& dir, const GMambaModel& model, const Trainer& trainer) {
    fs::create_directories(dir);
    write_text_file((fs::path(dir) / "config.json").string(),
                    model_config_to_json(model.config()));
    write_text_file((fs::path(dir) / "train_config.json").string(),
                    train_config_to_json(trainer.config()));
    save_checkpoint((fs::path(dir) / "model.gft").string(), model.to_checkpoint());
    save_checkpoint((fs::path(dir) / "trainer.gft").string(), trainer.to_checkpoint());
}

int cmd_train(const TrainCliOptions& opt) {
    LoadedExamples data = load_examples(opt.data);
    int n_ts = data.seqs.front().size();
    for (const auto& s : data.seqs) {
        check(s.size() == n_ts, ErrorKind::Validation, "corpus has mixed sequence lengths");
    }

    ModelConfig mcfg;
    TrainConfig tcfg;
    if (opt.profile == "paper") {
        mcfg = paper_model_config();
        tcfg = paper_train_config();
    }
    if (!opt.config_path.empty()) {
        json j = json::parse(read_text_file(opt.config_path));
        if (j.contains("model")) mcfg = model_config_from_json(j.at("model").dump());
        if (j.contains("train")) tcfg = train_config_from_json(j.at("train").dump());
    }
    if (!opt.variant.empty()) {
        check(opt.variant == "gmamba" || opt.variant == "vanilla_ssd", ErrorKind::Validation,
              "unknown variant: " + opt.variant);
        mcfg.variant = opt.variant == "gmamba" ? Variant::GMamba : Variant::VanillaSSD;
    }
    mcfg.n_ts = n_ts;
    if (opt.seed) tcfg.seed = opt.seed;
    if (opt.threads) tcfg.threads = opt.threads;

    GMambaModel model(mcfg);
    model.init_params(tcfg.seed);
    Trainer trainer(model, tcfg);
    if (!opt.resume.empty()) {
        trainer.load_from_checkpoint(
            load_checkpoint((fs::path(opt.resume) / "trainer.gft").string()));
    }

    int steps_per_epoch =
        std::max(1, static_cast<int>(data.examples.size()) / std::max(1, tcfg.batch));
    int total_steps = opt.steps > 0 ? opt.steps : tcfg.epochs * steps_per_epoch;

    std::ostringstream log;
    log << "step,total,diffusion,command,args\n";
    for (int s = 0; s < total_steps; ++s) {
        StepMetrics sm = trainer.step(trainer.next_batch(data.examples));
        log << sm.step << "," << sm.loss.total << "," << sm.loss.diffusion << ","
            << sm.loss.command << "," << sm.loss.args << "\n";
        if (!opt.quiet && (s % 10 == 0 || s == total_steps - 1)) {
            std::cout << "step " << sm.step << " loss " << sm.loss.total << " (diff "
                      << sm.loss.diffusion << " cmd " << sm.loss.command << " args "
                      << sm.loss.args << ")\n";
        }
        if (opt.ckpt_every > 0 && sm.step % opt.ckpt_every == 0) {
            save_model_dir(opt.out, model, trainer);
        }
    }
    save_model_dir(opt.out, model, trainer);
    write_text_file((fs::path(opt.out) / "train_log.csv").string(), log.str());
    return 0;
}

int cmd_sample(const std::string& model_dir, int n, std::uint64_t seed, const std::string& out,
               const std::string& teacher_dir) {
    ModelBundle mb = load_model(model_dir);
    TrainConfig tcfg = train_config_from_json(
        read_text_file((fs::path(model_dir) / "train_config.json").string()));
    DiffusionSchedule sched = DiffusionSchedule::linear(tcfg.T, tcfg.beta_min, tcfg.beta_max);

    LoadedExamples teacher;
    std::vector<Conditioning> conds;
    const std::vector<Conditioning>* cond_ptr = nullptr;
    if (!teacher_dir.empty()) {
        teacher = load_examples(teacher_dir);
        for (std::size_t i = 0; i < teacher.seqs.size(); ++i) {
            conds.push_back({&teacher.seqs[i], &teacher.descs[i]});
        }
        cond_ptr = &conds;
    }

    std::vector<SampleResult> results = sample(mb.model, sched, n, seed, cond_ptr);
    fs::create_directories(out);
    int n_valid = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "seq_%05zu.json", i);
        write_text_file((fs::path(out) / name).string(), sequence_to_json(results[i].seq));
        if (results[i].valid) ++n_valid;
    }
    json summary;
    summary["n"] = n;
    summary["valid"] = n_valid;
    summary["valid_ratio"] = 100.0 * n_valid / n;
    write_text_file((fs::path(out) / "summary.json").string(), summary.dump(2));
    std::cout << "sampled " << n << " sequences, " << n_valid << " parse ("
              << (100.0 * n_valid / n) << "%)\n";
    return 0;
}

struct EvalOptions {
    std::string gen, ref, train, model_dir;
    std::string out_csv, out_json;
    bool paired = false;
    int max_gen_clouds = 64;
    int max_ref_clouds = 32;
    int points = 2048;
    std::uint64_t seed = 0;
};

std::uint64_t sequence_hash(const CadSequence& seq) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int i = 0; i < seq.valid_len && i < seq.size(); ++i) {
        TokenPair p = seq.tokens[static_cast<std::size_t>(i)];
        h = (h ^ p.a) * 0x100000001b3ULL;
        h = (h ^ p.b) * 0x100000001b3ULL;
    }
    return h;
}

std::vector<PointCloud> clouds_for(const std::vector<CadSequence>& seqs, int cap, int points,
                                   std::uint64_t seed) {
    // cloud seeds derive from shape content so identical programs sample
    // identical clouds regardless of which directory they came from
    std::vector<PointCloud> clouds;
    for (std::size_t i = 0; i < seqs.size() && static_cast<int>(clouds.size()) < cap; ++i) {
        try {
            CadTree tree = deserialize_sequence(seqs[i]);
            VoxelGrid grid = execute(tree, kValidationResolution);
            clouds.push_back(sample_points(grid, points, sequence_hash(seqs[i]) ^ seed));
        } catch (const Error&) {
        }
    }
    return clouds;
}

int cmd_eval(const EvalOptions& opt) {
    std::vector<CadSequence> gen = load_corpus(opt.gen);
    std::vector<CadSequence> ref = load_corpus(opt.ref);
    std::vector<CadSequence> train_set;
    if (!opt.train.empty()) train_set = load_corpus(opt.train);

    MetricsReport rep = cad_metrics(gen, train_set, ref);

    std::vector<PointCloud> gen_clouds = clouds_for(gen, opt.max_gen_clouds, opt.points, opt.seed);
    std::vector<PointCloud> ref_clouds = clouds_for(ref, opt.max_ref_clouds, opt.points, opt.seed);
    if (!gen_clouds.empty() && !ref_clouds.empty()) {
        auto [cov, mmd] = cov_mmd(gen_clouds, ref_clouds);
        rep.cov = cov;
        rep.mmd = mmd * 100.0;
        rep.jsd = jsd(gen_clouds, ref_clouds) * 100.0;
    }

    if (opt.paired) {
        check(!opt.model_dir.empty(), ErrorKind::Validation, "--paired requires --model");
        ModelBundle mb = load_model(opt.model_dir);
        TrainConfig tcfg = train_config_from_json(
            read_text_file((fs::path(opt.model_dir) / "train_config.json").string()));
        DiffusionSchedule sched = DiffusionSchedule::linear(tcfg.T, tcfg.beta_min, tcfg.beta_max);
        LoadedExamples ex = load_examples(opt.ref);
        AccuracyReport acc = paired_accuracy(mb.model, sched, ex.examples, opt.seed);
        rep.acc_cmd = acc.acc_cmd;
        rep.acc_param = acc.acc_param;
        rep.acc_line = acc.acc_line;
        rep.acc_arc = acc.acc_arc;
        rep.acc_circle = acc.acc_circle;
        rep.acc_ext = acc.acc_ext;
    }

    std::string csv = rep.to_csv();
    if (!opt.out_csv.empty()) write_text_file(opt.out_csv, csv);
    if (!opt.out_json.empty()) write_text_file(opt.out_json, rep.to_json());
    std::cout << csv;
    return 0;
}

int cmd_bench_scan(const std::string& out, int d_e, int blocks, const std::string& lengths_arg,
                   int reps, std::uint64_t seed) {
    std::vector<int> lengths;
    std::stringstream ss(lengths_arg);
    for (std::string item; std::getline(ss, item, ',');) lengths.push_back(std::stoi(item));
    check(!lengths.empty(), ErrorKind::Validation, "bench-scan: no lengths given");

    ModelConfig cfg;
    cfg.d_e = d_e;
    cfg.n_blocks = blocks;
    GMambaModel model(cfg);
    model.init_params(seed);
    DiffusionSchedule sched = DiffusionSchedule::linear(50);

    std::ostringstream csv;
    csv << "L,time_ms,peak_bytes\n";
    NoGradGuard ng;
    Conditioning neutral;
    double prev_time = 0;
    for (std::size_t li = 0; li < lengths.size(); ++li) {
        int L = lengths[li];
        Rng rng(Rng::derive(seed, li));
        Tensor z = Tensor::randn({L, d_e}, rng);
        model.denoise(z, sched.T / 2, neutral);  // warmup
        std::vector<double> times;
        std::size_t peak = 0;
        for (int r = 0; r < reps; ++r) {
            reset_tensor_bytes_peak();
            auto t0 = std::chrono::steady_clock::now();
            Tensor eps = model.denoise(z, sched.T / 2, neutral);
            auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            peak = std::max(peak, tensor_bytes_peak());
        }
        std::sort(times.begin(), times.end());
        double med = times[times.size() / 2];
        csv << L << "," << med << "," << peak << "\n";
        std::cout << "L=" << L << " time=" << med << "ms peak=" << peak << "B";
        if (prev_time > 0) std::cout << " ratio=" << med / prev_time;
        std::cout << "\n";
        prev_time = med;
    }
    if (!out.empty()) write_text_file(out, csv.str());
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"sketch-extrusion CAD sequence diffusion toolkit"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::string precision = "f32";
    app.add_option("--seed", seed, "global RNG seed")->capture_default_str();
    app.add_option("--precision", precision, "numeric mode")
        ->check(CLI::IsMember({"f32", "f64"}))
        ->capture_default_str();

    // tokenize
    auto* tok_cmd = app.add_subcommand("tokenize", "tree JSON -> sequence (JSON or .gfc)");
    std::string tok_in, tok_out;
    int tok_max = kDefaultMaxTokens;
    tok_cmd->add_option("--in", tok_in)->required();
    tok_cmd->add_option("--out", tok_out)->required();
    tok_cmd->add_option("--max-tokens", tok_max)->capture_default_str();

    // detokenize
    auto* detok_cmd = app.add_subcommand("detokenize", "sequence -> tree JSON");
    std::string detok_in, detok_out;
    int detok_max = kDefaultMaxTokens;
    detok_cmd->add_option("--in", detok_in)->required();
    detok_cmd->add_option("--out", detok_out)->required();
    detok_cmd->add_option("--max-tokens", detok_max)->capture_default_str();

    // validate
    auto* val_cmd = app.add_subcommand("validate", "run the filter criteria on a sequence");
    std::string val_in;
    int val_max = kDefaultMaxTokens;
    val_cmd->add_option("--in", val_in)->required();
    val_cmd->add_option("--max-tokens", val_max)->capture_default_str();

    // execute
    auto* exe_cmd = app.add_subcommand("execute", "tree/sequence -> voxel solid and points");
    std::string exe_in, exe_voxel, exe_obj, exe_points;
    int exe_res = 64, exe_samples = 2048;
    exe_cmd->add_option("--in", exe_in)->required();
    exe_cmd->add_option("--resolution", exe_res)->capture_default_str();
    exe_cmd->add_option("--samples", exe_samples)->capture_default_str();
    exe_cmd->add_option("--out-voxel", exe_voxel);
    exe_cmd->add_option("--out-obj", exe_obj);
    exe_cmd->add_option("--out-points", exe_points);

    // gen-data
    auto* gen_cmd = app.add_subcommand("gen-data", "synthetic corpus generator");
    int gen_n = 100, gen_min = 17, gen_max = 60, gen_max_tokens = kDefaultMaxTokens;
    std::string gen_out;
    gen_cmd->add_option("--n", gen_n)->capture_default_str();
    gen_cmd->add_option("--min-len", gen_min)->capture_default_str();
    gen_cmd->add_option("--max-len", gen_max)->capture_default_str();
    gen_cmd->add_option("--max-tokens", gen_max_tokens)->capture_default_str();
    gen_cmd->add_option("--out", gen_out)->required();

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "corpus length statistics (Table-style CSV)");
    std::string stats_in, stats_out;
    bool stats_cc = false;
    stats_cmd->add_option("--in", stats_in)->required();
    stats_cmd->add_option("--out", stats_out);
    stats_cmd->add_flag("--count-commands", stats_cc,
                        "count curve/extrusion units instead of design tokens");

    // train
    auto* train_cmd = app.add_subcommand("train", "diffusion training loop");
    TrainCliOptions topt;
    train_cmd->add_option("--data", topt.data)->required();
    train_cmd->add_option("--out", topt.out)->required();
    train_cmd->add_option("--config", topt.config_path);
    train_cmd->add_option("--resume", topt.resume);
    train_cmd->add_option("--profile", topt.profile)->check(CLI::IsMember({"desk", "paper"}));
    train_cmd->add_option("--variant", topt.variant)
        ->check(CLI::IsMember({"gmamba", "vanilla_ssd"}));
    train_cmd->add_option("--steps", topt.steps);
    train_cmd->add_option("--ckpt-every", topt.ckpt_every)->capture_default_str();
    train_cmd->add_option("--threads", topt.threads);
    train_cmd->add_flag("--quiet", topt.quiet);

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "unconditional / teacher-forced sampling");
    std::string smp_model, smp_out, smp_teacher;
    int smp_n = 16;
    sample_cmd->add_option("--model", smp_model)->required();
    sample_cmd->add_option("--n", smp_n)->capture_default_str();
    sample_cmd->add_option("--out", smp_out)->required();
    sample_cmd->add_option("--teacher", smp_teacher, "condition on this corpus directory");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "metric suite over sequence directories");
    EvalOptions eopt;
    eval_cmd->add_option("--gen", eopt.gen)->required();
    eval_cmd->add_option("--ref", eopt.ref)->required();
    eval_cmd->add_option("--train", eopt.train);
    eval_cmd->add_option("--model", eopt.model_dir);
    eval_cmd->add_option("--out", eopt.out_csv);
    eval_cmd->add_option("--json", eopt.out_json);
    eval_cmd->add_flag("--paired", eopt.paired, "compute paired-mode accuracies vs --ref");
    eval_cmd->add_option("--gen-clouds", eopt.max_gen_clouds)->capture_default_str();
    eval_cmd->add_option("--ref-clouds", eopt.max_ref_clouds)->capture_default_str();
    eval_cmd->add_option("--points", eopt.points)->capture_default_str();

    // bench-scan
    auto* bench_cmd = app.add_subcommand("bench-scan", "denoiser wall-clock/memory scaling");
    std::string bench_out, bench_lengths = "512,1024,2048,4096";
    int bench_de = 64, bench_blocks = 4, bench_reps = 3;
    bench_cmd->add_option("--out", bench_out);
    bench_cmd->add_option("--d-e", bench_de)->capture_default_str();
    bench_cmd->add_option("--blocks", bench_blocks)->capture_default_str();
    bench_cmd->add_option("--lengths", bench_lengths)->capture_default_str();
    bench_cmd->add_option("--reps", bench_reps)->capture_default_str();

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        set_precision(precision == "f64" ? Precision::F64 : Precision::F32);
        if (tok_cmd->parsed()) return cmd_tokenize(tok_in, tok_out, tok_max);
        if (detok_cmd->parsed()) return cmd_detokenize(detok_in, detok_out, detok_max);
        if (val_cmd->parsed()) return cmd_validate(val_in, val_max);
        if (exe_cmd->parsed())
            return cmd_execute(exe_in, exe_res, exe_samples, seed, exe_voxel, exe_obj, exe_points);
        if (gen_cmd->parsed())
            return cmd_gen_data(gen_n, gen_min, gen_max, seed, gen_out, gen_max_tokens);
        if (stats_cmd->parsed()) return cmd_stats(stats_in, stats_out, stats_cc);
        if (train_cmd->parsed()) {
            topt.seed = seed;
            return cmd_train(topt);
        }
        if (sample_cmd->parsed()) return cmd_sample(smp_model, smp_n, seed, smp_out, smp_teacher);
        if (eval_cmd->parsed()) {
            eopt.seed = seed;
            return cmd_eval(eopt);
        }
        if (bench_cmd->parsed())
            return cmd_bench_scan(bench_out, bench_de, bench_blocks, bench_lengths, bench_reps,
                                  seed);
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace gfcad
