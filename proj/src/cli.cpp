// SPDX-License-Identifier: Apache-2.0

#include "kdc/cli.hpp"

#include <fstream>
#include <iomanip>

#include "kdc/krd.hpp"

namespace kdc::cli {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw data_error("cannot write " + path.string());
    }
    out << text;
}

std::string report_text(const RetrievalReport& r) {
    std::string text;
    text += "queries = " + std::to_string(r.query_count) + "\n";
    text += "r1 = " + format_double(r.r1) + "\n";
    text += "r5 = " + format_double(r.r5) + "\n";
    text += "r10 = " + format_double(r.r10) + "\n";
    text += "r100 = " + format_double(r.r100) + "\n";
    text += "sumr = " + format_double(r.sum_r) + "\n";
    const char* names[] = {"sumr_mv_low", "sumr_mv_mid", "sumr_mv_high"};
    for (std::size_t b = 0; b < 3; ++b) {
        if (r.bucket_sum_r[b]) {
            text += std::string(names[b]) + " = " + format_double(*r.bucket_sum_r[b]) + "\n";
        }
    }
    return text;
}

std::string report_row(const RetrievalReport& r) {
    std::string row = format_double(r.r1) + "," + format_double(r.r5) + "," +
                      format_double(r.r10) + "," + format_double(r.r100) + "," +
                      format_double(r.sum_r);
    for (std::size_t b = 0; b < 3; ++b) {
        row += ",";
        if (r.bucket_sum_r[b]) {
            row += format_double(*r.bucket_sum_r[b]);
        }
    }
    return row + "\n";
}

} // namespace

void run_synth(const SynthOptions& opts) {
    RetrievalDataset data = make_synthetic(opts.spec);
    auto [train_part, test_part] = split_dataset(data, opts.spec.train_fraction);
    write_dataset(opts.out / "train", train_part);
    write_dataset(opts.out / "test", test_part);
}

TrainResult run_train(const TrainOptions& opts) {
    ExperimentConfig cfg;
    if (!opts.config.empty()) {
        cfg = ExperimentConfig::parse_file(opts.config);
    }
    if (opts.seed) {
        cfg.train.seed = *opts.seed;
    }
    RetrievalDataset data = read_dataset(opts.data);
    StudentModel model = StudentModel::init(data.dim, cfg.hyper, cfg.train.seed);
    TrainResult result = train(model, data, cfg.train);

    save_checkpoint(opts.out / "checkpoint", model, cfg.train);
    std::string log;
    for (std::size_t epoch = 0; epoch < result.history.size(); ++epoch) {
        const auto& e = result.history[epoch];
        log += std::to_string(epoch) + " " + format_double(e.exploration_loss) + " " +
               format_double(e.inheritance_loss) + " " + format_double(e.distill_loss) +
               " " + format_double(e.distill_weight) + "\n";
    }
    write_text(opts.out / "metrics.log", log);
    return result;
}

RetrievalReport evaluate_model(const StudentModel& model, const RetrievalDataset& data,
                               double delta) {
    if (data.dim != model.dim) {
        throw dimension_error("eval: dataset dim " + std::to_string(data.dim) +
                              " does not match checkpoint dim " + std::to_string(model.dim));
    }
    const std::size_t n = data.size();
    if (n == 0) {
        throw data_error("eval: empty dataset");
    }
    GradGuard no_grad(false);

    std::vector<std::vector<double>> q_expl(n), q_inh(n), v_expl(n), v_inh(n);
    for (std::size_t i = 0; i < n; ++i) {
        WordSequence query{data.queries[i]};
        FrameSequence video{data.videos[i]};
        Tensor qe = encode_query(query, model.exploration.text);
        Tensor qi = encode_query(query, model.inheritance.text);
        Tensor ve = encode_video(video, model.exploration.video).video_level;
        Tensor vi = encode_video(video, model.inheritance.video).video_level;
        q_expl[i].assign(qe.values().begin(), qe.values().end());
        q_inh[i].assign(qi.values().begin(), qi.values().end());
        v_expl[i].assign(ve.values().begin(), ve.values().end());
        v_inh[i].assign(vi.values().begin(), vi.values().end());
    }

    std::vector<int> ids(n);
    for (std::size_t j = 0; j < n; ++j) ids[j] = static_cast<int>(j);

    std::vector<QueryResult> results;
    results.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> fused(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double se = cosine_similarity(q_expl[i], v_expl[j]);
            const double si = cosine_similarity(q_inh[i], v_inh[j]);
            fused[j] = fuse_similarity(se, si, delta);
        }
        QueryResult qr;
        qr.query_id = static_cast<int>(i);
        qr.ranking = rank_candidates(ids, fused);
        qr.ground_truth = static_cast<int>(i);
        qr.mv_ratio = data.mv_ratios[i];
        results.push_back(std::move(qr));
    }
    return evaluate(results);
}

RetrievalReport run_eval(const EvalOptions& opts, std::ostream& log) {
    LoadedCheckpoint ckpt = load_checkpoint(opts.checkpoint);
    RetrievalDataset data = read_dataset(opts.data);
    const double delta = opts.delta ? *opts.delta : ckpt.train.fusion_delta;
    RetrievalReport report = evaluate_model(ckpt.model, data, delta);

    const std::string text = report_text(report);
    log << text;
    if (!opts.out.empty()) {
        write_text(opts.out / "report.txt", text);
        write_text(opts.out / "report.csv", report_row(report));
    }
    return report;
}

void run_refine(const RefineOptions& opts) {
    const auto rows = read_csv(opts.input);
    std::vector<std::vector<double>> refined_rows;
    std::vector<std::vector<double>> stats_rows;
    for (const auto& row : rows) {
        RefinementStats stats;
        RefinedScores refined = refine_scores({row}, opts.window, stats);
        refined_rows.push_back(refined.scores);
        stats_rows.push_back({stats.mean, stats.stddev, stats.tau_high, stats.tau_low,
                              stats.alpha});
    }
    write_csv(opts.output, refined_rows);
    std::filesystem::path stats_path = opts.output;
    stats_path += ".stats";
    write_csv(stats_path, stats_rows);
}

std::vector<GradCheckRow> run_gradcheck(std::uint64_t seed, int seed_count,
                                        std::ostream& log) {
    if (seed_count < 1) {
        throw config_error("gradcheck: seed count must be >= 1");
    }
    std::vector<GradCheckRow> worst;
    for (int s = 0; s < seed_count; ++s) {
        auto rows = run_gradcheck_suite(seed + static_cast<std::uint64_t>(s));
        if (worst.empty()) {
            worst = rows;
        } else {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].max_rel_err > worst[i].max_rel_err) {
                    worst[i] = rows[i];
                }
            }
        }
    }
    for (const auto& row : worst) {
        log << std::left << std::setw(22) << row.op << " "
            << format_double(row.max_rel_err) << " "
            << (row.pass ? "PASS" : "FAIL") << "\n";
    }
    return worst;
}

std::vector<std::pair<std::string, double>> run_sweep(const SweepOptions& opts,
                                                      std::ostream& log) {
    if (opts.values.empty()) {
        throw config_error("sweep: no values given");
    }
    ExperimentConfig base;
    if (!opts.config.empty()) {
        base = ExperimentConfig::parse_file(opts.config);
    }
    { // reject unknown parameters before any training happens
        ExperimentConfig probe = base;
        probe.set(opts.parameter, opts.values.front());
    }
    RetrievalDataset train_data = read_dataset(opts.data / "train");
    RetrievalDataset test_data = read_dataset(opts.data / "test");

    std::vector<std::pair<std::string, double>> table;
    for (const auto& value : opts.values) {
        ExperimentConfig cfg = base;
        cfg.set(opts.parameter, value);
        StudentModel model = StudentModel::init(train_data.dim, cfg.hyper, cfg.train.seed);
        train(model, train_data, cfg.train);
        RetrievalReport report = evaluate_model(model, test_data, cfg.train.fusion_delta);
        table.emplace_back(value, report.sum_r);
        log << opts.parameter << " = " << value << " -> sumr " << format_double(report.sum_r)
            << "\n";
    }
    if (!opts.out.empty()) {
        std::string csv;
        for (const auto& [value, sumr] : table) {
            csv += value + "," + format_double(sumr) + "\n";
        }
        write_text(opts.out / "sweep.csv", csv);
    }
    return table;
}

} // namespace kdc::cli
