#include <atomic>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "medlit/artifacts.hpp"
#include "medlit/config.hpp"
#include "medlit/error.hpp"
#include "medlit/remote.hpp"
#include "medlit/service.hpp"
#include "medlit/simd/kernels.hpp"
#include "medlit/text.hpp"
#include "medlit/trec_eval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace medlit;

namespace {

enum Exit : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kBadInput = 3,
    kBadArtifacts = 4,
};

struct Overrides {
    std::optional<double> bm25_threshold;
    std::optional<double> cosine_threshold;
    std::optional<std::size_t> top_k;
    std::optional<std::string> strategy;
    std::optional<double> alpha;
    std::optional<std::string> artifacts;
    std::vector<std::string> sets;
    bool debug = false;
};

AppConfig resolve_config(const std::optional<std::string>& path, const Overrides& o) {
    std::optional<fs::path> file;
    if (path) file = *path;
    AppConfig cfg = load_config(file);
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InvalidParameter("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.bm25_threshold) cfg.fusion.bm25_threshold = *o.bm25_threshold;
    if (o.cosine_threshold) cfg.fusion.cosine_threshold = *o.cosine_threshold;
    if (o.top_k) cfg.fusion.top_k = *o.top_k;
    if (o.strategy) cfg.fusion.strategy = parse_strategy(*o.strategy);
    if (o.alpha) cfg.alpha = *o.alpha;
    if (o.artifacts) cfg.artifacts_dir = *o.artifacts;
    if (o.debug) cfg.debug = true;
    cfg.validate();
    return cfg;
}

std::chrono::milliseconds timeout_of(const AppConfig& cfg) { return std::chrono::milliseconds(cfg.providers.timeout_ms); }

std::shared_ptr<const EmbeddingProvider> make_embedder(const AppConfig& cfg) {
    if (!cfg.providers.embedder.empty()) {
        return std::make_shared<RemoteEmbedder>(cfg.providers.embedder, cfg.embedding_dimension, timeout_of(cfg));
    }
    return std::make_shared<HashedEmbedder>(cfg.embedding_dimension);
}

Providers make_providers(const AppConfig& cfg) {
    Providers p = Providers::builtin(cfg.embedding_dimension);
    p.embedder = make_embedder(cfg);
    if (!cfg.providers.extractor.empty()) {
        p.extractor = std::make_shared<RemoteExtractor>(cfg.providers.extractor, timeout_of(cfg));
    }
    if (!cfg.providers.classifier.empty()) {
        p.classifier = std::make_shared<RemoteClassifier>(cfg.providers.classifier, timeout_of(cfg));
    }
    if (!cfg.providers.generator.empty()) {
        p.generator = std::make_shared<RemoteGenerator>(cfg.providers.generator, timeout_of(cfg));
    }
    return p;
}

EngineOptions make_options(const AppConfig& cfg) {
    EngineOptions o;
    o.fusion = cfg.fusion;
    o.answer.alpha = cfg.alpha;
    o.answer.max_answers = cfg.max_answers;
    o.answer.rules.max_tokens = cfg.max_span_tokens;
    if (!cfg.dictionary_path.empty()) o.dictionary = DiseaseDictionary::load(cfg.dictionary_path);
    return o;
}

std::shared_ptr<ConversationEngine> make_engine(const AppConfig& cfg) {
    auto artifacts = std::make_shared<Artifacts>(load_artifacts(cfg.artifacts_dir));
    return std::make_shared<ConversationEngine>(artifacts, make_providers(cfg), make_options(cfg));
}

void print_response(const SystemResponse& r, bool as_json, bool debug) {
    if (as_json) {
        std::cout << to_json(r, debug).dump() << '\n';
        return;
    }
    std::cout << render_text(r) << '\n';
    if (debug) std::cout << r.diagnostics.dump(2) << '\n';
}

int cmd_ingest(const AppConfig& cfg, const std::string& corpus_path, const std::string& outdir) {
    std::ifstream in(corpus_path);
    if (!in) {
        std::cerr << "error: cannot open corpus " << corpus_path << '\n';
        return kBadInput;
    }
    FilterLimits limits{cfg.max_abstract_tokens, cfg.max_body_paragraphs};
    auto result = ingest(in, limits, cfg.chunk_window, cfg.chunk_overlap);
    for (const auto& s : result.skipped) {
        std::cerr << "warning: line " << s.line_number << " skipped: " << s.reason << '\n';
    }
    if (result.report.kept == 0) std::cerr << "warning: no documents kept\n";
    write_corpus(outdir, result.corpus, result.report);
    std::cout << to_json(result.report).dump(2) << '\n';
    return kOk;
}

int cmd_index(const AppConfig& cfg, const std::string& dir) {
    const Corpus corpus = read_corpus(dir);
    const auto index = build_index(corpus.documents(), cfg.bm25);
    write_index(dir, index);
    std::cout << "indexed " << index.doc_count() << " documents, " << index.term_count() << " terms\n";
    return kOk;
}

int cmd_embed(AppConfig cfg, const std::string& dir, const std::optional<std::string>& endpoint) {
    if (endpoint) cfg.providers.embedder = *endpoint;
    const Corpus corpus = read_corpus(dir);
    const auto provider = make_embedder(cfg);
    const auto store = build_store(corpus.documents(), *provider);
    write_store(dir, store);
    std::cout << "embedded " << store.size() << " documents with " << provider->provider_id() << '\n';
    return kOk;
}

int cmd_search(const AppConfig& cfg, const std::string& query, bool as_json) {
    auto engine = make_engine(cfg);
    const auto result = engine->search(query);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    if (as_json) {
        json out = json::array();
        for (const auto& c : result.candidates) out.push_back(to_json(c));
        std::cout << out.dump() << '\n';
        return kOk;
    }
    std::cout << std::fixed << std::setprecision(4);
    for (const auto& c : result.candidates) {
        const Document* d = engine->artifacts().corpus.find(c.doc_id);
        std::cout << c.aggregated << '\t' << c.doc_id << '\t' << (d ? d->title : "") << '\n';
    }
    return kOk;
}

int cmd_ask(const AppConfig& cfg, const std::string& question, bool as_json) {
    auto engine = make_engine(cfg);
    print_response(engine->answer(question), as_json, cfg.debug);
    return kOk;
}

int cmd_chat(const AppConfig& cfg, bool as_json) {
    auto engine = make_engine(cfg);
    Session session;
    session.session_id = "cli";
    std::string line;
    while (std::getline(std::cin, line)) {
        if (trim(line).empty()) continue;
        const auto outcome = engine->handle_turn(session, line);
        print_response(outcome.response, as_json, cfg.debug);
    }
    return kOk;
}

struct EvalInputs {
    std::vector<Topic> topics;
    BinaryQrels qrels;
};

EvalInputs read_eval_inputs(const std::string& qrels_path, const std::string& topics_path) {
    std::ifstream q(qrels_path);
    if (!q) throw InvalidInput("cannot open qrels " + qrels_path);
    std::ifstream t(topics_path);
    if (!t) throw InvalidInput("cannot open topics " + topics_path);
    auto qr = parse_qrels(q);
    for (const auto& r : qr.rejected) std::cerr << "warning: qrels line " << r.line_number << ": " << r.reason << '\n';
    auto tr = parse_topics(t);
    for (const auto& r : tr.rejected) std::cerr << "warning: topics line " << r.line_number << ": " << r.reason << '\n';
    return {std::move(tr.topics), binarize(qr.qrels)};
}

struct EvalArgs {
    std::string qrels;
    std::string topics;
    bool macro = false;
    std::optional<std::size_t> top_k;
    bool as_json = false;
    std::string strategy = "union";
    std::vector<double> bm25_axis{0.0, 10.0, 0.01};
    std::vector<double> cosine_axis{0.0, 1.0, 0.01};
    bool full_grid = false;
};

GridAxis axis_of(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

int cmd_eval(const AppConfig& cfg, const EvalArgs& a) {
    const auto artifacts = load_artifacts(cfg.artifacts_dir);
    const auto provider = make_embedder(cfg);
    const auto in = read_eval_inputs(a.qrels, a.topics);
    EvalOptions options{a.macro ? Averaging::macro : Averaging::micro, a.top_k};
    StrategyGrids grids{axis_of(a.bm25_axis), axis_of(a.cosine_axis)};
    const auto report =
        compare_strategies(in.topics, in.qrels, artifacts.index, artifacts.store, *provider, grids, options);
    if (a.as_json) {
        std::cout << to_json(report).dump(2) << '\n';
    } else {
        std::cout << format_report(report);
    }
    return kOk;
}

int cmd_grid_search(const AppConfig& cfg, const EvalArgs& a) {
    const auto artifacts = load_artifacts(cfg.artifacts_dir);
    const auto provider = make_embedder(cfg);
    const auto in = read_eval_inputs(a.qrels, a.topics);
    EvalOptions options{a.macro ? Averaging::macro : Averaging::micro, a.top_k};
    const Strategy strategy = parse_strategy(a.strategy);
    std::vector<GridAxis> axes;
    if (strategy != Strategy::dense_only) axes.push_back(axis_of(a.bm25_axis));
    if (strategy != Strategy::sparse_only) axes.push_back(axis_of(a.cosine_axis));
    const auto cache = build_score_cache(in.topics, in.qrels, artifacts.index, artifacts.store, *provider);
    const auto result = grid_search(strategy, axes, cache, options);

    if (a.as_json) {
        json out{{"strategy", std::string(strategy_name(strategy))},
                 {"best_thresholds", result.best_thresholds},
                 {"f1", result.best.f1},
                 {"precision", result.best.precision},
                 {"recall", result.best.recall},
                 {"points", result.grid.size()}};
        if (a.full_grid) {
            json grid = json::array();
            for (const auto& p : result.grid) grid.push_back({{"thresholds", p.thresholds}, {"f1", p.result.f1}});
            out["grid"] = grid;
        }
        std::cout << out.dump(2) << '\n';
        return kOk;
    }
    std::cout << "strategy  " << strategy_name(strategy) << "\npoints    " << result.grid.size() << '\n';
    std::cout << std::fixed << std::setprecision(4);
    std::cout << "best      ";
    for (double t : result.best_thresholds) std::cout << t << ' ';
    std::cout << "\nf1        " << result.best.f1 << "\nprecision " << result.best.precision << "\nrecall    "
              << result.best.recall << '\n';
    if (a.full_grid) {
        for (const auto& p : result.grid) {
            for (double t : p.thresholds) std::cout << t << '\t';
            std::cout << p.result.f1 << '\n';
        }
    }
    return kOk;
}

std::atomic<httplib::Server*> g_server{nullptr};

void on_signal(int) {
    if (auto* s = g_server.load()) s->stop();
}

int cmd_serve(const AppConfig& cfg) {
    auto engine = make_engine(cfg);
    auto sessions = std::make_shared<SessionStore>(std::chrono::seconds(cfg.session_ttl_seconds));
    if (!cfg.session_snapshot.empty() && fs::exists(cfg.session_snapshot)) {
        sessions->load_snapshot(cfg.session_snapshot);
    }
    std::mutex log_mutex;
    ServiceOptions options;
    options.debug = cfg.debug;
    options.checksums = artifact_checksums(cfg.artifacts_dir);
    options.log = [&log_mutex](const json& record) {
        std::lock_guard lock(log_mutex);
        std::cerr << record.dump() << '\n';
    };
    Service service(engine, sessions, options);
    httplib::Server server;
    service.mount(server);
    if (!server.bind_to_port(cfg.host, cfg.port)) {
        std::cerr << "error: cannot bind " << cfg.host << ':' << cfg.port << '\n';
        return kFailure;
    }

    std::atomic<bool> running{true};
    std::thread sweeper([&] {
        while (running) {
            for (int i = 0; i < 50 && running; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            sessions->expire_idle();
        }
    });
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << json{{"event", "listening"}, {"host", cfg.host}, {"port", cfg.port},
                      {"simd", std::string(simd::isa_name(simd::active().isa))}}
                     .dump()
              << '\n';
    server.listen_after_bind();
    g_server = nullptr;
    running = false;
    sweeper.join();
    if (!cfg.session_snapshot.empty()) sessions->save_snapshot(cfg.session_snapshot);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"medlit: conversational retrieval and question answering over research literature"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    Overrides o;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--artifacts", o.artifacts, "artifact directory");
    app.add_option("--bm25-threshold", o.bm25_threshold, "BM25 score threshold");
    app.add_option("--cosine-threshold", o.cosine_threshold, "cosine similarity threshold");
    app.add_option("-k,--top-k", o.top_k, "number of fused results");
    app.add_option("--strategy", o.strategy, "sparse_only, dense_only or union");
    app.add_option("--alpha", o.alpha, "answer score weight on the span log-likelihood");
    app.add_option("--set", o.sets, "override any config key, e.g. --set fusion.w_bm25=0.7");
    app.add_flag("--debug", o.debug, "include diagnostics");

    std::string corpus_path, outdir, dir, text;
    std::optional<std::string> endpoint;
    bool as_json = false;
    EvalArgs eval_args;

    auto* ingest_cmd = app.add_subcommand("ingest", "parse, deduplicate, filter and chunk a corpus");
    ingest_cmd->add_option("corpus", corpus_path, "JSON-lines corpus")->required();
    ingest_cmd->add_option("outdir", outdir, "artifact directory")->required();

    auto* index_cmd = app.add_subcommand("index", "build the BM25 index of an artifact directory");
    index_cmd->add_option("dir", dir, "artifact directory")->required();

    auto* embed_cmd = app.add_subcommand("embed", "embed every document of an artifact directory");
    embed_cmd->add_option("dir", dir, "artifact directory")->required();
    embed_cmd->add_option("--endpoint", endpoint, "embedding service base URL");

    auto* search_cmd = app.add_subcommand("search", "rank documents for a query");
    search_cmd->add_option("query", text)->required();
    search_cmd->add_flag("--json", as_json);

    auto* ask_cmd = app.add_subcommand("ask", "answer a single question");
    ask_cmd->add_option("question", text)->required();
    ask_cmd->add_flag("--json", as_json);

    auto* chat_cmd = app.add_subcommand("chat", "interactive session reading turns from stdin");
    chat_cmd->add_flag("--json", as_json);

    auto add_eval_options = [&](CLI::App* cmd) {
        cmd->add_option("--qrels", eval_args.qrels, "relevance judgments")->required();
        cmd->add_option("--topics", eval_args.topics, "JSON-lines topics")->required();
        cmd->add_flag("--macro", eval_args.macro, "macro-average F1 over topics");
        cmd->add_option("--cut", eval_args.top_k, "evaluate the fused top-k instead of all survivors");
        cmd->add_option("--bm25-grid", eval_args.bm25_axis, "min max step")->expected(3);
        cmd->add_option("--cosine-grid", eval_args.cosine_axis, "min max step")->expected(3);
        cmd->add_flag("--json", eval_args.as_json);
    };
    auto* eval_cmd = app.add_subcommand("eval", "compare strategies at their grid-search optima");
    add_eval_options(eval_cmd);
    auto* grid_cmd = app.add_subcommand("grid-search", "exhaustive threshold search for one strategy");
    add_eval_options(grid_cmd);
    grid_cmd->add_option("--for", eval_args.strategy, "sparse_only, dense_only or union");
    grid_cmd->add_flag("--full", eval_args.full_grid, "print every grid point");

    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP API");

    CLI11_PARSE(app, argc, argv);

    try {
        const AppConfig cfg = resolve_config(config_path, o);
        if (*ingest_cmd) return cmd_ingest(cfg, corpus_path, outdir);
        if (*index_cmd) return cmd_index(cfg, dir);
        if (*embed_cmd) return cmd_embed(cfg, dir, endpoint);
        if (*search_cmd) return cmd_search(cfg, text, as_json);
        if (*ask_cmd) return cmd_ask(cfg, text, as_json);
        if (*chat_cmd) return cmd_chat(cfg, as_json);
        if (*eval_cmd) return cmd_eval(cfg, eval_args);
        if (*grid_cmd) return cmd_grid_search(cfg, eval_args);
        if (*serve_cmd) return cmd_serve(cfg);
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const CorruptArtifact& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadArtifacts;
    } catch (const ConsistencyError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadArtifacts;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}
