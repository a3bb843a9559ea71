// boolkit command-line toolchain: train a desk-scale teacher, extract Boolean
// kernels, allocate kernel counts under a budget, finetune with knowledge
// distillation, evaluate, and benchmark the bit-packed matmul.
//
// Exit codes: 0 success, 1 validation/configuration error, 2 runtime failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "boolkit/boolkit.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace boolkit;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::int64_t seed_override = -1;
};

KeyValueConfig load_config(const CommonArgs& args) {
    KeyValueConfig cfg = args.config_path.empty()
                             ? KeyValueConfig::parse_string("")
                             : KeyValueConfig::parse_file(args.config_path);
    if (args.seed_override >= 0)
        cfg.override_value("seed", std::to_string(args.seed_override));
    return cfg;
}

fs::path resolve(const CommonArgs& args, const std::string& path) {
    const fs::path p(path);
    return p.is_absolute() ? p : fs::path(args.out_dir) / p;
}

// ---- data plumbing shared by the LM commands ----

struct LmSetup {
    CharLmData data;
    LmSplit split;
};

LmSetup lm_setup(const KeyValueConfig& cfg, std::size_t context) {
    LmSetup s{make_char_lm(context), {}};
    s.split = split_windows(s.data, cfg.get_size("data.stride", 16),
                            cfg.get_double("data.val_fraction", 0.1));
    return s;
}

std::vector<LinearSlot*> designated(MlpModel& m) {
    std::vector<LinearSlot*> out;
    for (LinearSlot& s : m.layers) out.push_back(&s);
    return out;
}

// ---- subcommand bodies ----

int cmd_teacher(const CommonArgs& args) {
    KeyValueConfig cfg = load_config(args);
    cfg.validate_keys({"seed", "model.kind", "model.width", "model.blocks", "model.heads",
                       "model.context", "model.mlp_sizes", "data.kind", "data.stride",
                       "data.val_fraction", "data.size", "teacher.epochs", "teacher.batch",
                       "teacher.max_lr", "teacher.weight_decay", "paths.output"});
    const std::uint64_t seed = cfg.get_u64("seed", 1);
    const std::string kind = cfg.get_string("model.kind", "transformer");
    const fs::path out = resolve(args, cfg.get_string("paths.output", "teacher.ckpt"));

    json summary;
    summary["command"] = "teacher";
    summary["kind"] = kind;
    if (kind == "transformer") {
        TransformerConfig mc;
        mc.width = cfg.get_size("model.width", 64);
        mc.blocks = cfg.get_size("model.blocks", 2);
        mc.heads = cfg.get_size("model.heads", 4);
        mc.context = cfg.get_size("model.context", 64);
        const LmSetup s = lm_setup(cfg, mc.context);
        mc.vocab = s.data.vocab_size();

        Transformer model = build_transformer(mc, seed);
        LmTrainConfig tc;
        tc.epochs = cfg.get_size("teacher.epochs", 6);
        tc.batch = cfg.get_size("teacher.batch", 8);
        tc.max_lr = cfg.get_double("teacher.max_lr", 1.5e-3);
        tc.weight_decay = cfg.get_double("teacher.weight_decay", 0.0);
        tc.seed = seed;
        const TrainSummary ts = train_teacher_lm(model, s.data, s.split, tc);
        save_checkpoint(model, out);
        summary["params"] = model.param_count();
        summary["final_train_loss"] = ts.final_train_loss;
        summary["val_loss"] = ts.val_loss;
        summary["val_perplexity"] = ts.val_perplexity;
    } else if (kind == "mlp") {
        const std::vector<std::size_t> sizes =
            cfg.get_size_list("model.mlp_sizes", {8, 16, 4});
        const VectorDataset data = make_regression(seed, cfg.get_size("data.size", 256),
                                                   sizes.front(), sizes.back());
        MlpModel model = build_mlp(sizes, seed);
        MlpTrainConfig tc;
        tc.epochs = cfg.get_size("teacher.epochs", 60);
        tc.batch = cfg.get_size("teacher.batch", 16);
        tc.max_lr = cfg.get_double("teacher.max_lr", 1e-2);
        tc.seed = seed;
        const double final_loss = train_teacher_mlp(model, data, tc);
        save_checkpoint(model, out);
        summary["params"] = model.param_count();
        summary["final_train_loss"] = final_loss;
    } else {
        throw std::invalid_argument("model.kind must be transformer or mlp");
    }
    summary["output"] = out.string();
    std::cout << summary.dump() << "\n";
    return 0;
}

/// Per-weight kernel counts from an allocation manifest, or a uniform count.
KernelPlan read_plan(const KeyValueConfig& cfg, const CommonArgs& args, std::size_t uniform) {
    KernelPlan plan;
    plan.uniform = uniform;
    if (cfg.has("extract.plan")) {
        std::ifstream in(resolve(args, cfg.require_string("extract.plan")));
        if (!in) throw std::invalid_argument("extract.plan: cannot open manifest");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ss(line);
            std::string name;
            std::size_t k = 0;
            if (ss >> name >> k) plan.per_weight[name] = k;
        }
        if (plan.per_weight.empty())
            throw std::invalid_argument("extract.plan: no allocations found");
    }
    return plan;
}

template <typename Model>
json extract_into_student(Model& model, const KernelPlan& plan, std::size_t kmax,
                          std::vector<LinearSlot*> slots) {
    json weights = json::array();
    for (LinearSlot* slot : slots) {
        const std::size_t K = plan.count_for(slot->name);
        if (K > kmax) throw std::invalid_argument("extract: kernels exceed extract.kmax");
        const DenseMatrix W = slot->dense.W;
        const ExtractionReport rep = successive_extract(W, kmax);

        json entry;
        entry["name"] = slot->name;
        entry["rows"] = W.rows;
        entry["cols"] = W.cols;
        entry["kernels"] = K;
        entry["frobenius"] = rep.residual_frobenius;
        entry["l1_normalized"] = rep.residual_l1_normalized;
        weights.push_back(std::move(entry));

        std::vector<SvidKernel> kernels(rep.kernels.begin(), rep.kernels.begin() + K);
        for (SvidKernel& ker : kernels) {
            round_f32(ker.s_out);
            round_f32(ker.s_in);
        }
        BooleanLinear bl = BooleanLinear::from_kernels(std::move(kernels), {K - 1});
        bl.bias = slot->dense.b;
        slot->boolean = std::move(bl);
        slot->dense = DenseLinear{};
    }
    return weights;
}

int cmd_extract(const CommonArgs& args) {
    KeyValueConfig cfg = load_config(args);
    cfg.validate_keys({"seed", "paths.teacher", "paths.output", "paths.report",
                       "extract.kernels", "extract.kmax", "extract.plan"});
    const fs::path teacher_path = resolve(args, cfg.require_string("paths.teacher"));
    const fs::path out = resolve(args, cfg.get_string("paths.output", "student.ckpt"));
    const fs::path report_path = resolve(args, cfg.get_string("paths.report", "residuals.json"));
    const std::size_t K = cfg.get_size("extract.kernels", 2);
    const std::size_t kmax = cfg.get_size("extract.kmax", std::max<std::size_t>(K, 8));
    const KernelPlan plan = read_plan(cfg, args, K);

    json report;
    report["kmax"] = kmax;
    const std::string kind = checkpoint_kind(teacher_path);
    if (kind == "transformer") {
        Transformer model = load_transformer(teacher_path);
        report["weights"] =
            extract_into_student(model, plan, kmax, model.designated_slots());
        save_checkpoint(model, out);
    } else {
        MlpModel model = load_mlp(teacher_path);
        report["weights"] = extract_into_student(model, plan, kmax, designated(model));
        save_checkpoint(model, out);
    }
    {
        std::ofstream rout(report_path, std::ios::binary);
        if (!rout) throw std::runtime_error("extract: cannot write report");
        rout << report.dump(2) << "\n";
    }

    json summary;
    summary["command"] = "extract";
    summary["teacher"] = teacher_path.string();
    summary["output"] = out.string();
    summary["report"] = report_path.string();
    summary["weights"] = report["weights"].size();
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_allocate(const CommonArgs& args) {
    KeyValueConfig cfg = load_config(args);
    cfg.validate_keys({"seed", "paths.teacher", "paths.report", "paths.output",
                       "allocate.budget", "allocate.kmax", "allocate.probe_samples",
                       "allocate.ridge", "data.stride", "data.val_fraction", "data.size"});
    const fs::path teacher_path = resolve(args, cfg.require_string("paths.teacher"));
    const fs::path report_path = resolve(args, cfg.require_string("paths.report"));
    const fs::path out = resolve(args, cfg.get_string("paths.output", "allocation.txt"));
    const double budget = cfg.get_double("allocate.budget", 2.0);
    const std::size_t probe_samples = cfg.get_size("allocate.probe_samples", 128);
    const double ridge = cfg.get_double("allocate.ridge", 1e-8);
    const std::uint64_t seed = cfg.get_u64("seed", 1);

    json report;
    {
        std::ifstream in(report_path, std::ios::binary);
        if (!in) throw std::invalid_argument("allocate: cannot open residual report");
        in >> report;
    }
    const std::size_t kmax =
        cfg.get_size("allocate.kmax", report["kmax"].get<std::size_t>());
    if (kmax > report["kmax"].get<std::size_t>())
        throw std::invalid_argument("allocate.kmax exceeds the extracted table");

    // Importance probe on the teacher.
    std::vector<ActivationCapture> captures;
    const std::string kind = checkpoint_kind(teacher_path);
    if (kind == "transformer") {
        Transformer teacher = load_transformer(teacher_path);
        const CharLmData data = make_char_lm(teacher.cfg.context);
        const LmSplit split = split_windows(data, cfg.get_size("data.stride", 16),
                                            cfg.get_double("data.val_fraction", 0.1));
        std::vector<std::size_t> pool = split.train;
        std::mt19937_64 rng(seed);
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(std::min(pool.size(), std::max<std::size_t>(probe_samples, 1)));
        captures = probe_activations(teacher, gather_windows(data, pool));
    } else {
        MlpModel teacher = load_mlp(teacher_path);
        std::mt19937_64 rng(seed);
        const DenseMatrix probe = gaussian(probe_samples, teacher.sizes.front(), rng);
        captures = probe_activations(teacher, probe);
    }
    const ImportanceReport imp = importance_from_captures(captures, ridge);

    // Assemble the problem in report order, matching importance by name.
    AllocationProblem prob;
    const auto& weights = report["weights"];
    const std::size_t N = weights.size();
    prob.K_max = kmax;
    prob.E = DenseMatrix(N, kmax);
    prob.h.resize(N);
    prob.p.resize(N);
    std::vector<std::string> names;
    double total_size = 0.0;
    for (std::size_t l = 0; l < N; ++l) {
        const auto& wj = weights[l];
        names.push_back(wj["name"].get<std::string>());
        const auto fro = wj["frobenius"].get<std::vector<double>>();
        if (fro.size() < kmax) throw std::invalid_argument("allocate: report too shallow");
        for (std::size_t k = 0; k < kmax; ++k) prob.E.at(l, k) = fro[k];
        prob.p[l] = double(wj["rows"].get<std::size_t>() * wj["cols"].get<std::size_t>());
        total_size += prob.p[l];
        bool found = false;
        for (std::size_t i = 0; i < imp.names.size(); ++i)
            if (imp.names[i] == names[l]) {
                prob.h[l] = imp.h[i];
                found = true;
                break;
            }
        if (!found)
            throw std::runtime_error("allocate: no importance probe for " + names[l]);
    }
    for (double& v : prob.p) v /= total_size;
    prob.T = budget;

    const Allocation alloc = allocate_greedy(prob);
    {
        std::ofstream aout(out, std::ios::binary);
        if (!aout) throw std::runtime_error("allocate: cannot write manifest");
        aout << "# boolkit kernel allocation\n";
        char buf[128];
        std::snprintf(buf, sizeof(buf), "# budget %.17g\n", prob.T);
        aout << buf;
        std::snprintf(buf, sizeof(buf), "# achieved_ratio %.17g\n", alloc.achieved_ratio);
        aout << buf;
        std::snprintf(buf, sizeof(buf), "# energy %.17g\n", alloc.energy);
        aout << buf;
        for (std::size_t l = 0; l < N; ++l)
            aout << names[l] << " " << alloc.k[l] << "\n";
    }

    json summary;
    summary["command"] = "allocate";
    summary["budget"] = prob.T;
    summary["achieved_ratio"] = alloc.achieved_ratio;
    summary["energy"] = alloc.energy;
    summary["output"] = out.string();
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_distill(const CommonArgs& args) {
    KeyValueConfig cfg = load_config(args);
    cfg.validate_keys({"seed", "paths.teacher", "paths.student", "paths.output",
                       "paths.metrics", "kd.tau", "kd.gamma", "kd.divergence", "kd.epochs",
                       "kd.batch", "kd.lr_fp", "kd.lr_bool", "kd.warmup", "data.stride",
                       "data.val_fraction"});
    const fs::path teacher_path = resolve(args, cfg.require_string("paths.teacher"));
    const fs::path student_path = resolve(args, cfg.require_string("paths.student"));
    const fs::path out = resolve(args, cfg.get_string("paths.output", "student_kd.ckpt"));

    Transformer teacher = load_transformer(teacher_path);
    Transformer student = load_transformer(student_path);
    const LmSetup s = lm_setup(cfg, teacher.cfg.context);

    DistillConfig dc;
    dc.kd.tau = cfg.get_double("kd.tau", 1.0);
    dc.kd.gamma = cfg.get_double("kd.gamma", 10.0);
    dc.kd.divergence = divergence_from_string(cfg.get_string("kd.divergence", "forward_kl"));
    dc.epochs = cfg.get_size("kd.epochs", 3);
    dc.batch = cfg.get_size("kd.batch", 8);
    dc.lr_fp = cfg.get_double("kd.lr_fp", 1e-3);
    dc.lr_bool = cfg.get_double("kd.lr_bool", 5e-3);
    dc.warmup_fraction = cfg.get_double("kd.warmup", 0.03);
    dc.seed = cfg.get_u64("seed", 3);

    json summary;
    summary["command"] = "distill";
    if (dc.epochs == 0) {
        save_checkpoint(student, out);
        summary["epochs"] = 0;
    } else {
        MetricsWriter metrics(cfg.has("paths.metrics")
                                  ? resolve(args, cfg.require_string("paths.metrics")).string()
                                  : std::string());
        const DistillResult r = distill_lm(teacher, student, s.data, s.split, dc, &metrics);
        save_checkpoint(student, out);
        summary["epochs"] = dc.epochs;
        summary["init_val_perplexity"] = r.init_val_perplexity;
        summary["final_val_perplexity"] = r.final_val_perplexity();
        summary["total_flips"] = r.total_flips;
    }
    summary["output"] = out.string();
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_eval(const CommonArgs& args) {
    KeyValueConfig cfg = load_config(args);
    cfg.validate_keys({"seed", "paths.checkpoint", "data.stride", "data.val_fraction",
                       "eval.split"});
    const fs::path path = resolve(args, cfg.require_string("paths.checkpoint"));
    Transformer model = load_transformer(path);
    const LmSetup s = lm_setup(cfg, model.cfg.context);
    const std::string which = cfg.get_string("eval.split", "val");
    const std::vector<std::size_t>& starts =
        which == "train" ? s.split.train : s.split.val;
    const EvalResult r = evaluate_lm(model, s.data, starts);

    json line;
    line["loss"] = r.loss;
    line["perplexity"] = r.perplexity;
    line["tokens"] = r.tokens;
    std::cout << line.dump() << "\n";
    return 0;
}

int cmd_bench(const CommonArgs& args) {
    KeyValueConfig cfg = load_config(args);
    cfg.validate_keys({"seed", "bench.sizes", "bench.batch", "bench.repeats"});
    const std::vector<std::size_t> sizes = cfg.get_size_list("bench.sizes", {64, 128, 256});
    const std::size_t batch = cfg.get_size("bench.batch", 32);
    const std::size_t repeats = cfg.get_size("bench.repeats", 5);
    const std::uint64_t seed = cfg.get_u64("seed", 1);

    auto median_time = [&](auto&& fn) {
        std::vector<double> times;
        for (std::size_t r = 0; r < repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            fn();
            const auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        std::sort(times.begin(), times.end());
        return times[times.size() / 2];
    };

    std::printf("%8s %8s %14s %14s %10s\n", "m=n", "batch", "dense (ms)", "boolean (ms)",
                "check");
    for (std::size_t n : sizes) {
        std::mt19937_64 rng(seed + n);
        const DenseMatrix X = gaussian(batch, n, rng);
        std::bernoulli_distribution coin(0.5);
        BitMatrix W(n, n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) W.set(r, c, coin(rng));
        const DenseMatrix W_dense = unpack(W);

        // correctness cross-check before timing
        const DenseMatrix a = matmul_bool(X, W);
        const DenseMatrix b = matmul_dense(X, W_dense);
        bool equal = a.same_shape(b);
        for (std::size_t i = 0; equal && i < a.size(); ++i)
            equal = a.data[i] == b.data[i];
        if (!equal) throw std::runtime_error("bench: boolean/dense mismatch at size " +
                                             std::to_string(n));

        volatile double sink = 0.0;
        const double t_dense = median_time([&] {
            const DenseMatrix y = matmul_dense(X, W_dense);
            sink = sink + y.data[0];
        });
        const double t_bool = median_time([&] {
            const DenseMatrix y = matmul_bool(X, W);
            sink = sink + y.data[0];
        });
        std::printf("%8zu %8zu %14.4f %14.4f %10s\n", n, batch, t_dense, t_bool, "ok");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-kernel Boolean linear-layer toolchain"};
    app.require_subcommand(1);

    CommonArgs args;
    for (const char* name : {"teacher", "extract", "allocate", "distill", "eval", "bench"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", args.config_path, "key=value config file");
        sub->add_option("--seed", args.seed_override, "seed override");
        sub->add_option("--out", args.out_dir, "base directory for relative paths");
    }

    try {
        app.parse(argc, argv);
        if (app.got_subcommand("teacher")) return cmd_teacher(args);
        if (app.got_subcommand("extract")) return cmd_extract(args);
        if (app.got_subcommand("allocate")) return cmd_allocate(args);
        if (app.got_subcommand("distill")) return cmd_distill(args);
        if (app.got_subcommand("eval")) return cmd_eval(args);
        if (app.got_subcommand("bench")) return cmd_bench(args);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
}
