// lzspa command-line tool: train, generate, eval, sweep, inspect,
// convergence. Machine-readable results go to stdout as JSON (or to the
// requested output files); human-readable tables accompany them where it
// helps. Artifacts are written atomically, so a nonzero exit never
// leaves a partial file at the destination.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lzspa/byte_io.hpp"
#include "lzspa/corpus.hpp"
#include "lzspa/frechet.hpp"
#include "lzspa/generator.hpp"
#include "lzspa/lz_tree.hpp"
#include "lzspa/metrics.hpp"
#include "lzspa/model_io.hpp"
#include "lzspa/oracle.hpp"
#include "lzspa/piano_roll.hpp"
#include "lzspa/report.hpp"
#include "lzspa/tuner.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ordered_json stats_to_json(const lzspa::TreeStats& st) {
    ordered_json j;
    j["node_count"] = st.node_count;
    j["total_symbols"] = st.total_symbols;
    j["num_sequences"] = st.num_sequences;
    j["max_depth"] = st.max_depth;
    j["serialized_bytes"] = st.serialized_bytes;
    j["depth_histogram"] = st.depth_histogram;
    return j;
}

std::vector<std::size_t> parse_m_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stoull(cell));
        } catch (const std::exception&) {
            throw lzspa::InvalidArgument("bad m-list entry '" + cell + "'");
        }
    }
    if (out.empty()) throw lzspa::InvalidArgument("--m-list must not be empty");
    return out;
}

/// Source specs: "bernoulli:<p0>", "iid:<p0>,<p1>[,...]", "melody", or
/// "markov:<file.json>" with keys initial, transition and optional
/// seq_len. --len overrides the source's default length when positive.
lzspa::oracle::SyntheticSource parse_source_spec(const std::string& spec, std::uint32_t len) {
    using lzspa::oracle::SyntheticSource;
    auto with_len = [&](SyntheticSource src, std::uint32_t fallback) {
        src.seq_len = len > 0 ? len : fallback;
        src.validate();
        return src;
    };
    if (spec == "melody") return with_len(lzspa::oracle::melody_source(), 256);
    if (spec.rfind("bernoulli:", 0) == 0) {
        const double p = std::stod(spec.substr(10));
        return with_len(lzspa::oracle::bernoulli_source(p, 4), 4);
    }
    if (spec.rfind("iid:", 0) == 0) {
        std::vector<double> probs;
        std::stringstream ss(spec.substr(4));
        std::string cell;
        while (std::getline(ss, cell, ',')) probs.push_back(std::stod(cell));
        return with_len(lzspa::oracle::iid_source(probs, 4), 4);
    }
    if (spec.rfind("markov:", 0) == 0) {
        std::ifstream in(spec.substr(7));
        if (!in) throw lzspa::IoError("cannot open markov source file " + spec.substr(7));
        nlohmann::json j = nlohmann::json::parse(in);
        SyntheticSource src;
        src.kind = SyntheticSource::Kind::Markov;
        src.initial = j.at("initial").get<std::vector<double>>();
        src.transition = j.at("transition").get<std::vector<std::vector<double>>>();
        src.alphabet_size = static_cast<std::uint32_t>(src.initial.size());
        return with_len(std::move(src), j.value("seq_len", 8u));
    }
    throw lzspa::InvalidArgument("unknown source spec '" + spec +
                                 "' (try bernoulli:<p>, iid:<p,...>, melody, markov:<file>)");
}

int cmd_train(const std::string& corpus_path, const std::string& out_path,
              std::uint64_t limit) {
    const auto t0 = std::chrono::steady_clock::now();
    lzspa::TokenCorpus corpus = lzspa::load_corpus(corpus_path);
    lzspa::LzTree tree{lzspa::Alphabet(corpus.alphabet_size)};
    std::uint64_t used = 0;
    for (const auto& seq : corpus.sequences) {
        if (limit && used >= limit) break;
        tree.train_on_sequence(seq);
        ++used;
    }
    tree.freeze();
    lzspa::save_model(tree, out_path);

    ordered_json j = stats_to_json(tree.stats());
    j["sequences_used"] = used;
    j["wall_s"] = seconds_since(t0);
    j["model"] = out_path;
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_generate(const std::string& model_path, std::size_t num, const lzspa::GenParams& params,
                 const std::string& out_dir, bool midi, bool text) {
    const auto t0 = std::chrono::steady_clock::now();
    lzspa::LzTree tree = lzspa::load_model(model_path);
    params.validate(tree.alphabet());

    const auto gen_t0 = std::chrono::steady_clock::now();
    std::vector<lzspa::TokenSequence> samples = lzspa::batch_generate(tree, params, num);
    const double gen_wall = seconds_since(gen_t0);

    fs::create_directories(out_dir);
    lzspa::TokenCorpus corpus;
    corpus.alphabet_size = tree.alphabet().size();
    corpus.seq_len = params.seq_len;
    corpus.sequences = samples;
    const fs::path corpus_path = fs::path(out_dir) / "generated.lztk";
    lzspa::save_corpus(corpus, corpus_path);

    std::size_t midi_files = 0;
    if (midi) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "sample_%05zu.mid", i);
            lzspa::save_smf(lzspa::decode_tokens(samples[i]), fs::path(out_dir) / name);
            ++midi_files;
        }
    }
    if (text)
        lzspa::write_file_atomic(fs::path(out_dir) / "tokens.txt", lzspa::corpus_to_text(corpus));

    ordered_json j;
    j["num"] = samples.size();
    j["seq_len"] = params.seq_len;
    j["gamma"] = params.gamma;
    j["top_k"] = params.top_k;
    j["temperature"] = params.temperature;
    j["min_context"] = params.min_context;
    j["seed"] = params.master_seed;
    j["corpus"] = corpus_path.string();
    j["midi_files"] = midi_files;
    j["generate_wall_s"] = gen_wall;
    j["s_per_sample"] = samples.empty() ? 0.0 : gen_wall / static_cast<double>(samples.size());
    j["total_wall_s"] = seconds_since(t0);
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_eval(const std::string& gen_path, const std::string& ref_path,
             const std::string& emb_gen, const std::string& emb_ref,
             const std::string& out_path) {
    lzspa::TokenCorpus generated = lzspa::load_corpus(gen_path);
    lzspa::TokenCorpus reference = lzspa::load_corpus(ref_path);
    lzspa::MetricsReport report = lzspa::evaluate_corpora(generated, reference);
    if (!emb_gen.empty() && !emb_ref.empty()) {
        lzspa::EmbeddingSet a = lzspa::load_embeddings_csv(emb_gen);
        lzspa::EmbeddingSet b = lzspa::load_embeddings_csv(emb_ref);
        report.fad = lzspa::frechet_distance(a, b);
    }
    lzspa::write_file_atomic(out_path, lzspa::report_to_json(report).dump(2) + "\n");
    std::cout << lzspa::report_to_table(report);
    return 0;
}

int cmd_sweep(const std::string& model_path, const std::string& ref_path, std::size_t trials,
              std::size_t samples_per_trial, std::uint64_t seed, std::uint32_t min_context,
              const std::string& out_path, std::string best_path) {
    lzspa::LzTree tree = lzspa::load_model(model_path);
    lzspa::TokenCorpus reference = lzspa::load_corpus(ref_path);
    lzspa::SearchSpace space;
    lzspa::GenParams base;
    base.seq_len = reference.seq_len;
    base.min_context = std::min<std::uint32_t>(min_context, reference.seq_len - 1);

    auto results =
        lzspa::run_search(tree, space, reference, trials, samples_per_trial, seed, base);

    std::ostringstream lines;
    for (const auto& r : results) {
        ordered_json j;
        j["trial"] = r.trial_index;
        j["gamma"] = r.params.gamma;
        j["top_k"] = r.params.top_k;
        j["temperature"] = r.params.temperature;
        j["wd"] = r.objective_wd;
        j["samples"] = r.samples;
        j["wall_s"] = r.wall_s;
        lines << j.dump() << '\n';
    }
    lzspa::write_file_atomic(out_path, lines.str());

    if (best_path.empty()) best_path = fs::path(out_path).replace_extension(".best.json").string();
    const auto& best = results.front();
    ordered_json bj;
    bj["gamma"] = best.params.gamma;
    bj["top_k"] = best.params.top_k;
    bj["temperature"] = best.params.temperature;
    bj["wd"] = best.objective_wd;
    bj["trials_executed"] = results.size();
    bj["samples_per_trial"] = samples_per_trial;
    bj["seed"] = seed;
    lzspa::write_file_atomic(best_path, bj.dump(2) + "\n");

    std::cout << "best: gamma=" << best.params.gamma << " top_k=" << best.params.top_k
              << " temperature=" << best.params.temperature << " wd=" << best.objective_wd
              << " (" << results.size() << " trials)\n";
    return 0;
}

int cmd_inspect(const std::string& model_path) {
    lzspa::LzTree tree = lzspa::load_model(model_path);
    ordered_json j = stats_to_json(tree.stats());
    j["alphabet"] = tree.alphabet().size();
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_convergence(const std::string& source_spec, const std::string& m_list_text,
                    double gamma, std::uint32_t len, std::uint64_t seed,
                    const std::string& out_path) {
    lzspa::oracle::SyntheticSource src = parse_source_spec(source_spec, len);
    std::vector<std::size_t> m_list = parse_m_list(m_list_text);
    auto points = lzspa::oracle::convergence_experiment(src, m_list, gamma, seed);

    std::ostringstream csv;
    csv << "m,kl_nats,wall_time_s\n";
    for (const auto& pt : points)
        csv << pt.m << ',' << std::setprecision(12) << pt.kl_nats << ','
            << std::setprecision(6) << pt.wall_s << '\n';
    lzspa::write_file_atomic(out_path, csv.str());

    for (const auto& pt : points)
        std::cout << "m=" << pt.m << " kl=" << pt.kl_nats << " nats (" << pt.wall_s << " s)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LZ78 prefix-tree sequence models for symbolic music: "
                 "train, generate, evaluate, tune, and validate"};
    app.require_subcommand(1);

    // train
    std::string train_corpus, train_out;
    std::uint64_t train_limit = 0;
    auto* train = app.add_subcommand("train", "Build a model from a token corpus");
    train->add_option("--corpus", train_corpus, "input corpus (.lztk)")->required();
    train->add_option("--out", train_out, "output model file")->required();
    train->add_option("--limit", train_limit, "use only the first N sequences");

    // generate
    std::string gen_model, gen_out_dir;
    std::size_t gen_num = 0;
    lzspa::GenParams gen_params;
    bool gen_midi = false, gen_text = false;
    auto* generate = app.add_subcommand("generate", "Sample token sequences from a model");
    generate->add_option("--model", gen_model, "trained model file")->required();
    generate->add_option("--num", gen_num, "number of samples")->required();
    generate->add_option("--gamma", gen_params.gamma, "smoothing")->capture_default_str();
    generate->add_option("--top-k", gen_params.top_k, "top-k filter")->capture_default_str();
    generate->add_option("--temperature", gen_params.temperature, "sampling temperature")->capture_default_str();
    generate->add_option("--min-context", gen_params.min_context, "re-seed context floor")->capture_default_str();
    generate->add_option("--len", gen_params.seq_len, "tokens per sample")->capture_default_str();
    generate->add_option("--seed", gen_params.master_seed, "master RNG seed")->capture_default_str();
    generate->add_option("--out-dir", gen_out_dir, "output directory")->required();
    generate->add_flag("--midi", gen_midi, "also write one SMF file per sample");
    generate->add_flag("--text", gen_text, "also write a plain-text token dump");

    // eval
    std::string eval_gen, eval_ref, eval_emb_gen, eval_emb_ref, eval_out;
    auto* eval = app.add_subcommand("eval", "Compare a generated corpus against a reference");
    eval->add_option("--gen", eval_gen, "generated corpus (.lztk)")->required();
    eval->add_option("--ref", eval_ref, "reference corpus (.lztk)")->required();
    auto* emb_gen_opt = eval->add_option("--emb-gen", eval_emb_gen, "generated embeddings CSV");
    auto* emb_ref_opt = eval->add_option("--emb-ref", eval_emb_ref, "reference embeddings CSV");
    emb_gen_opt->needs(emb_ref_opt);
    emb_ref_opt->needs(emb_gen_opt);
    eval->add_option("--out", eval_out, "metrics report JSON path")->required();

    // sweep
    std::string sweep_model, sweep_ref, sweep_out, sweep_best;
    std::size_t sweep_trials = 0, sweep_samples = 64;
    std::uint64_t sweep_seed = 1;
    std::uint32_t sweep_min_context = 64;
    auto* sweep = app.add_subcommand("sweep", "Random hyperparameter search minimizing WD");
    sweep->add_option("--model", sweep_model, "trained model file")->required();
    sweep->add_option("--ref", sweep_ref, "reference corpus (.lztk)")->required();
    sweep->add_option("--trials", sweep_trials, "number of trials")->required();
    sweep->add_option("--samples-per-trial", sweep_samples, "samples generated per trial")->capture_default_str();
    sweep->add_option("--seed", sweep_seed, "master RNG seed")->capture_default_str();
    sweep->add_option("--min-context", sweep_min_context, "re-seed context floor")->capture_default_str();
    sweep->add_option("--out", sweep_out, "results file (JSON lines)")->required();
    sweep->add_option("--best-out", sweep_best, "best-configuration JSON (default <out>.best.json)");

    // inspect
    std::string inspect_model;
    auto* inspect = app.add_subcommand("inspect", "Print model statistics");
    inspect->add_option("--model", inspect_model, "model file")->required();

    // convergence
    std::string conv_source, conv_mlist = "100,1000,10000,100000", conv_out;
    double conv_gamma = 1e-4;
    std::uint32_t conv_len = 0;
    std::uint64_t conv_seed = 7;
    auto* conv = app.add_subcommand(
        "convergence", "Exact KL(P || Q^m) of the model against a known source, per m");
    conv->add_option("--source", conv_source,
                     "source spec: bernoulli:<p>, iid:<p,...>, melody, markov:<file>")
        ->required();
    conv->add_option("--m-list", conv_mlist, "comma-separated training set sizes")->capture_default_str();
    conv->add_option("--gamma", conv_gamma, "smoothing for the evaluated model")->capture_default_str();
    conv->add_option("--len", conv_len, "sequence length override (0 = source default)")->capture_default_str();
    conv->add_option("--seed", conv_seed, "sampling seed")->capture_default_str();
    conv->add_option("--out", conv_out, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(train_corpus, train_out, train_limit);
        if (generate->parsed())
            return cmd_generate(gen_model, gen_num, gen_params, gen_out_dir, gen_midi, gen_text);
        if (eval->parsed())
            return cmd_eval(eval_gen, eval_ref, eval_emb_gen, eval_emb_ref, eval_out);
        if (sweep->parsed())
            return cmd_sweep(sweep_model, sweep_ref, sweep_trials, sweep_samples, sweep_seed,
                             sweep_min_context, sweep_out, sweep_best);
        if (inspect->parsed()) return cmd_inspect(inspect_model);
        if (conv->parsed())
            return cmd_convergence(conv_source, conv_mlist, conv_gamma, conv_len, conv_seed,
                                   conv_out);
    } catch (const lzspa::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
