#include "tqa/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tqa/errors.hpp"
#include "tqa/json_io.hpp"
#include "tqa/noisy_backend.hpp"
#include "tqa/service.hpp"
#include "tqa/sim_teacher.hpp"
#include "tqa/text.hpp"

namespace tqa {

using json = nlohmann::json;

namespace {

struct Options {
    bool json_out = false;
    std::string config_path;
    std::string kb_path;
    std::string memory_path;
    std::string memory_out;
    std::string question;
    std::string choices;
    std::string train_path;
    std::string test_path;
    std::string transcript_path;
    std::string mode = "proof";
    std::string strategy = "all";
    std::string ks = "1,3,5,10";
    std::string fractions = "0.2,0.4,0.6,0.8,1.0";
    std::string seeds = "1,2,3";
    std::string listen = "127.0.0.1:8090";
    std::string out_dir;
    std::uint64_t seed = 1;
    double fraction = 1.0;
    double noise = 0.0;
    std::size_t r = 5;
    std::string index_strategy = "F";
    bool direct = false;
};

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(normalize(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(normalize(cur));
    std::erase_if(out, [](const std::string& x) { return x.empty(); });
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const char* what)
{
    std::vector<T> out;
    for (const auto& item : split_list(s)) {
        try {
            std::size_t used = 0;
            if constexpr (std::is_floating_point_v<T>) {
                out.push_back(static_cast<T>(std::stod(item, &used)));
            } else {
                if (item[0] == '-') throw std::invalid_argument(item);
                out.push_back(static_cast<T>(std::stoull(item, &used)));
            }
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, std::string("bad ") + what + " value '" + item + "'");
        }
    }
    if (out.empty()) throw Error(ErrorCode::InvalidArgument, std::string("no ") + what + " given");
    return out;
}

/// Train/test/KB from files when given, otherwise the built-in synthetic suite.
struct Workload {
    std::vector<QAExample> train;
    std::vector<QAExample> test;
    std::unique_ptr<SymbolicBackend> backend;
};

std::unique_ptr<SymbolicBackend> load_backend(const Options& o, const SyntheticSuite* suite)
{
    if (!o.kb_path.empty()) return std::make_unique<SymbolicBackend>(SymbolicKB::load(o.kb_path));
    if (suite) return std::make_unique<SymbolicBackend>(suite->kb());
    throw Error(ErrorCode::InvalidArgument, "--kb is required with dataset files");
}

Workload workload(const Options& o, bool need_train, bool need_test)
{
    Workload w;
    const bool from_files = !o.train_path.empty() || !o.test_path.empty();
    if (!from_files) {
        const SyntheticSuite suite = make_synthetic_suite();
        w.train = suite.train;
        w.test = suite.test;
        w.backend = load_backend(o, &suite);
        return w;
    }
    if (need_train && o.train_path.empty()) throw Error(ErrorCode::InvalidArgument, "--train is required");
    if (need_test && o.test_path.empty()) throw Error(ErrorCode::InvalidArgument, "--test is required");
    if (!o.train_path.empty()) w.train = load_dataset(o.train_path);
    if (!o.test_path.empty()) w.test = load_dataset(o.test_path);
    w.backend = load_backend(o, nullptr);
    return w;
}

ControllerConfig controller_config(const Options& o)
{
    ControllerConfig c;
    c.retrieval.r = o.r;
    c.retrieval.strategy = parse_strategy(o.index_strategy);
    c.validate();
    return c;
}

void load_memory(const Options& o, MemoryStore& memory)
{
    if (!o.memory_path.empty() && std::filesystem::exists(o.memory_path)) memory.load(o.memory_path);
}

int cmd_ask(const Options& o, std::ostream& out)
{
    if (o.kb_path.empty()) throw Error(ErrorCode::InvalidArgument, "--kb is required");
    SymbolicBackend backend(SymbolicKB::load(o.kb_path));
    MemoryStore memory;
    load_memory(o, memory);
    const auto config = controller_config(o);
    const auto choices = split_list(o.choices);
    AnswerResult r = o.direct                ? answer_direct(o.question, choices, backend, config)
                     : choices.empty()       ? answer_open(o.question, memory, backend, config)
                                             : answer(o.question, choices, memory, backend, config);
    if (o.json_out) {
        out << to_json(r).dump(2) << '\n';
        return 0;
    }
    if (!r.answered()) {
        out << "I can't find an answer!\n";
        for (std::size_t i = 0; i < r.considered_facts.size(); ++i) {
            const auto& c = r.considered_facts[i];
            out << "  " << (i + 1) << ". " << c.text << (c.disbelieved ? " [but I think this is false!]" : "") << '\n';
        }
        return 0;
    }
    out << "Answer: " << r.choice_text << '\n';
    if (r.best_proof) {
        out << r.best_proof->hypothesis_text << " because:\n";
        for (std::size_t i = 0; i < r.best_proof->premises.size(); ++i) {
            out << "  " << (i + 1) << ". " << r.best_proof->premises[i] << '\n';
        }
    }
    return 0;
}

int cmd_teach(const Options& o, std::ostream& out)
{
    if (o.memory_out.empty()) throw Error(ErrorCode::InvalidArgument, "--memory-out is required");
    Workload w = workload(o, true, false);
    MemoryStore memory;
    load_memory(o, memory);
    NoisyBackend noisy(*w.backend, o.noise, o.seed);
    const ReasoningBackend& backend = o.noise > 0.0 ? static_cast<const ReasoningBackend&>(noisy) : *w.backend;
    const auto log = teach(w.train, memory, backend, controller_config(o), o.seed, o.fraction);
    memory.save(o.memory_out);
    std::size_t wrong = 0, added = 0;
    for (const auto& e : log) {
        wrong += e.correct ? 0 : 1;
        added += e.fact_added ? 1 : 0;
    }
    if (o.json_out) {
        json entries = json::array();
        for (const auto& e : log) entries.push_back({{"id", e.id}, {"correct", e.correct}, {"fact_added", e.fact_added}});
        out << json{{"taught", log.size()}, {"wrong", wrong}, {"facts_added", added},
                    {"memory_size", memory.size()}, {"memory_hash", memory.state_hash()}, {"log", entries}}
                   .dump(2)
            << '\n';
    } else {
        out << "taught " << log.size() << " questions, " << wrong << " wrong, " << added << " facts added; memory "
            << memory.size() << " facts -> " << o.memory_out << '\n';
    }
    return 0;
}

int cmd_eval(const Options& o, std::ostream& out)
{
    Workload w = workload(o, false, true);
    MemoryStore memory;
    load_memory(o, memory);
    const std::string hash_before = memory.state_hash();
    NoisyBackend noisy(*w.backend, o.noise, o.seed);
    const ReasoningBackend& backend = o.noise > 0.0 ? static_cast<const ReasoningBackend&>(noisy) : *w.backend;
    const Mode mode = parse_mode(o.mode);
    ExperimentReport report = evaluate(w.test, memory, backend, controller_config(o), mode);
    if (memory.state_hash() != hash_before) {
        throw Error(ErrorCode::InvariantViolation, "evaluation changed the memory");
    }
    if (o.json_out) {
        out << report.to_json().dump(2) << '\n';
    } else {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f", report.accuracy);
        out << "mode " << o.mode << ": accuracy " << buf << " on " << report.records.size()
            << " questions (memory " << report.memory_size << " facts)\n";
    }
    return 0;
}

int cmd_curve(const Options& o, std::ostream& out)
{
    Workload w = workload(o, true, true);
    const auto fractions = parse_list<double>(o.fractions, "fraction");
    const auto seeds = parse_list<std::uint64_t>(o.seeds, "seed");
    const auto curve = learning_curve(w.train, w.test, fractions, seeds, *w.backend, controller_config(o));
    if (o.json_out) {
        out << curve_to_json(curve).dump(2) << '\n';
        return 0;
    }
    out << "fraction  mean    per-seed\n";
    for (const auto& p : curve) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%8.2f  %.4f ", p.fraction, p.mean_accuracy);
        out << buf;
        for (double a : p.per_seed) {
            std::snprintf(buf, sizeof buf, " %.4f", a);
            out << buf;
        }
        out << '\n';
    }
    return 0;
}

int cmd_bench(const Options& o, std::ostream& out)
{
    Workload w = workload(o, true, true);
    std::vector<IndexStrategy> strategies;
    if (to_lower(o.strategy) == "all") {
        strategies.assign(kAllStrategies.begin(), kAllStrategies.end());
    } else {
        for (const auto& s : split_list(o.strategy)) strategies.push_back(parse_strategy(s));
    }
    const auto ks = parse_list<std::size_t>(o.ks, "k");
    if (std::find(ks.begin(), ks.end(), std::size_t{0}) != ks.end()) {
        throw Error(ErrorCode::InvalidArgument, "k must be positive");
    }
    const auto rows = bench_retrieval(w.train, w.test, ks, strategies);
    if (o.json_out) {
        out << recall_to_json(rows).dump(2) << '\n';
    } else {
        out << render_recall_table(rows);
    }
    return 0;
}

int cmd_replay(const Options& o, std::ostream& out)
{
    if (o.kb_path.empty()) throw Error(ErrorCode::InvalidArgument, "--kb is required");
    std::ifstream in(o.transcript_path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open transcript '" + o.transcript_path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    SymbolicBackend backend(SymbolicKB::load(o.kb_path));
    MemoryStore memory;
    load_memory(o, memory);
    const auto outcome = replay_transcript(ss.str(), memory, backend, controller_config(o));
    if (o.json_out) {
        out << json{{"matches", outcome.matches()},
                    {"recorded_hash", outcome.recorded_hash},
                    {"replayed_hash", outcome.replayed_hash},
                    {"turns", outcome.state.turn_number},
                    {"status", std::string(status_name(outcome.state.status))}}
                   .dump(2)
            << '\n';
    } else {
        out << (outcome.matches() ? "replay OK" : "replay MISMATCH") << ": recorded " << outcome.recorded_hash
            << ", replayed " << outcome.replayed_hash << '\n';
    }
    if (!o.memory_out.empty()) memory.save(o.memory_out);
    return outcome.matches() ? 0 : 1;
}

int cmd_synth(const Options& o, std::ostream& out)
{
    const SyntheticSuite suite = make_synthetic_suite();
    const std::filesystem::path dir(o.out_dir);
    std::filesystem::create_directories(dir);
    auto write = [](const std::filesystem::path& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw Error(ErrorCode::IoFailure, "cannot write '" + p.string() + "'");
        f << text;
    };
    write(dir / "kb.json", suite.kb_json.dump(2) + "\n");
    write(dir / "train.jsonl", dataset_to_jsonl(suite.train));
    write(dir / "test.jsonl", dataset_to_jsonl(suite.test));
    out << "wrote " << suite.train.size() << " train and " << suite.test.size() << " test questions to " << dir.string()
        << '\n';
    return 0;
}

std::pair<std::string, int> split_listen(const std::string& listen)
{
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--listen needs host:port");
    try {
        return {listen.substr(0, colon), std::stoi(listen.substr(colon + 1))};
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "bad port in '" + listen + "'");
    }
}

int cmd_serve(const Options& o, std::ostream& out)
{
    if (o.config_path.empty()) throw Error(ErrorCode::InvalidArgument, "--config is required");
    const ServiceConfig config = load_service_config(o.config_path);
    auto backend = make_backend(config);
    MemoryStore memory;
    if (config.memory_path && std::filesystem::exists(*config.memory_path)) memory.load(*config.memory_path);
    ApiService api(config, *backend, memory);
    HttpServer server(api);
    out << "serving on " << config.host << ":" << config.port << " (backend " << backend->name() << ", memory "
        << memory.size() << " facts)" << std::endl;
    server.run(config.host, config.port);
    return 0;
}

int cmd_serve_backend(const Options& o, std::ostream& out)
{
    if (o.kb_path.empty()) throw Error(ErrorCode::InvalidArgument, "--kb is required");
    SymbolicBackend backend(SymbolicKB::load(o.kb_path));
    ModelService service(backend);
    const auto [host, port] = split_listen(o.listen);
    out << "model service on " << host << ":" << port << std::endl;
    service.run(host, port);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Options o;
    CLI::App app{"Teachable question answering: ask, teach, evaluate and serve."};
    app.name("tqa");
    app.require_subcommand(1);
    app.add_flag("--json", o.json_out, "Machine-readable JSON on standard output");

    auto add_controller = [&](CLI::App* sub) {
        sub->add_option("--r", o.r, "Facts retrieved as context")->check(CLI::PositiveNumber);
        sub->add_option("--index", o.index_strategy, "Index strategy: F, Q, QF or RQF");
    };

    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--config", o.config_path, "Service config file")->required();

    auto* serve_backend = app.add_subcommand("serve-backend", "Serve the symbolic backend over the /v1 protocol");
    serve_backend->add_option("--kb", o.kb_path, "Knowledge base JSON")->required();
    serve_backend->add_option("--listen", o.listen, "host:port");

    auto* ask = app.add_subcommand("ask", "Answer one question");
    ask->add_option("--question", o.question, "Question text")->required();
    ask->add_option("--choices", o.choices, "Comma-separated choices; omit for open questions");
    ask->add_option("--memory", o.memory_path, "Memory JSONL file");
    ask->add_option("--kb", o.kb_path, "Knowledge base JSON")->required();
    ask->add_flag("--direct", o.direct, "Score hypotheses without proofs");
    add_controller(ask);

    auto* teach_cmd = app.add_subcommand("teach", "Simulated teacher over a training set");
    teach_cmd->add_option("--train", o.train_path, "Dataset JSONL (default: synthetic suite)");
    teach_cmd->add_option("--kb", o.kb_path, "Knowledge base JSON");
    teach_cmd->add_option("--memory", o.memory_path, "Starting memory JSONL");
    teach_cmd->add_option("--memory-out", o.memory_out, "Where to write the taught memory")->required();
    teach_cmd->add_option("--seed", o.seed, "Shuffle seed");
    teach_cmd->add_option("--fraction", o.fraction, "Fraction of train to teach on")->check(CLI::Range(0.0, 1.0));
    teach_cmd->add_option("--noise", o.noise, "Verifier noise rate")->check(CLI::Range(0.0, 1.0));
    add_controller(teach_cmd);

    auto* eval = app.add_subcommand("eval", "Accuracy on a test set");
    eval->add_option("--test", o.test_path, "Dataset JSONL (default: synthetic suite)");
    eval->add_option("--kb", o.kb_path, "Knowledge base JSON");
    eval->add_option("--memory", o.memory_path, "Memory JSONL");
    eval->add_option("--mode", o.mode, "direct or proof")->check(CLI::IsMember({"direct", "proof"}));
    eval->add_option("--seed", o.seed, "Noise seed");
    eval->add_option("--noise", o.noise, "Verifier noise rate")->check(CLI::Range(0.0, 1.0));
    add_controller(eval);

    auto* curve = app.add_subcommand("curve", "Learning curve over training fractions");
    curve->add_option("--train", o.train_path, "Dataset JSONL (default: synthetic suite)");
    curve->add_option("--test", o.test_path, "Dataset JSONL (default: synthetic suite)");
    curve->add_option("--kb", o.kb_path, "Knowledge base JSON");
    curve->add_option("--fractions", o.fractions, "Comma-separated, ascending");
    curve->add_option("--seeds", o.seeds, "Comma-separated shuffle seeds");
    add_controller(curve);

    auto* bench = app.add_subcommand("bench-retrieval", "Recall@k of the index strategies");
    bench->add_option("--strategy", o.strategy, "F, Q, QF, RQF, a comma list, or all");
    bench->add_option("--ks", o.ks, "Comma-separated k values");
    bench->add_option("--train", o.train_path, "Dataset JSONL (default: synthetic suite)");
    bench->add_option("--test", o.test_path, "Dataset JSONL (default: synthetic suite)");
    bench->add_option("--kb", o.kb_path, "Knowledge base JSON");

    auto* replay = app.add_subcommand("replay", "Re-run a recorded session transcript");
    replay->add_option("--transcript", o.transcript_path, "Transcript JSONL")->required();
    replay->add_option("--kb", o.kb_path, "Knowledge base JSON")->required();
    replay->add_option("--memory", o.memory_path, "Memory the session started from");
    replay->add_option("--memory-out", o.memory_out, "Where to write the replayed memory");
    add_controller(replay);

    auto* synth = app.add_subcommand("synth", "Write the synthetic suite (kb.json, train.jsonl, test.jsonl)");
    synth->add_option("--out-dir", o.out_dir, "Output directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (serve->parsed()) return cmd_serve(o, out);
        if (serve_backend->parsed()) return cmd_serve_backend(o, out);
        if (ask->parsed()) return cmd_ask(o, out);
        if (teach_cmd->parsed()) return cmd_teach(o, out);
        if (eval->parsed()) return cmd_eval(o, out);
        if (curve->parsed()) return cmd_curve(o, out);
        if (bench->parsed()) return cmd_bench(o, out);
        if (replay->parsed()) return cmd_replay(o, out);
        if (synth->parsed()) return cmd_synth(o, out);
    } catch (const Error& e) {
        err << "error [" << code_name(e.code()) << "]: " << e.what() << "\n";
        return is_user_error(e.code()) ? 1 : 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace tqa
