// convrec: knowledge-grounded synthetic dataset generation, chat-format
// rendering and evaluation for conversational movie recommendation models.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "convrec/catalog.hpp"
#include "convrec/evaluation.hpp"
#include "convrec/grammar.hpp"
#include "convrec/kg.hpp"
#include "convrec/kvconfig.hpp"
#include "convrec/promptkit.hpp"
#include "convrec/retrieval.hpp"
#include "convrec/synth.hpp"
#include "convrec/text.hpp"
#include "convrec/transport.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace convrec;

namespace {

constexpr int k_exit_ok = 0;
constexpr int k_exit_usage = 1;
constexpr int k_exit_data = 2;
constexpr int k_exit_transport = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, std::string_view content) {
    const fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

void emit(const std::optional<std::string>& out_path, std::string_view content) {
    if (out_path) {
        write_file(*out_path, content);
    } else {
        std::cout << content;
    }
}

char parse_delimiter_spec(const std::string& spec, char fallback) {
    if (spec.empty()) return fallback;
    if (spec == "tab" || spec == "\\t") return '\t';
    return spec.front();
}

// ---- ingest ----------------------------------------------------------------

int cmd_ingest(const std::string& config_path, const std::string& out_path) {
    const auto config = KvDocument::parse(read_file(config_path));
    const auto source_ids = config.segments_under("source.");
    if (source_ids.empty()) {
        throw UsageError("config has no source.<id>.* entries");
    }

    std::vector<std::vector<MediaRecord>> catalogs;
    for (const auto& id : source_ids) {
        const std::string prefix = "source." + id + ".";
        SourceDescriptor desc;
        desc.source_id = id;
        desc.field_delimiter = parse_delimiter_spec(config.get_or(prefix + "delimiter", ","), ',');
        desc.list_delimiter = parse_delimiter_spec(config.get_or(prefix + "list_delimiter", ","), ',');
        for (const auto& [key, value] : config.with_prefix(prefix + "map.")) {
            desc.field_mapping[key] = value;
        }
        const auto file = config.get(prefix + "file");
        if (!file) throw UsageError("source." + id + ".file is missing");

        const auto parsed = parse_catalog(read_file(*file), desc);
        std::cerr << "source " << id << ": " << parsed.records.size() << " records, "
                  << parsed.issues.size() << " issues\n";
        for (const auto& issue : parsed.issues) {
            std::cerr << "  row " << issue.row << ": " << issue.reason << "\n";
        }
        catalogs.push_back(parsed.records);
    }

    const auto merged = merge_catalogs(catalogs);
    write_file(out_path, catalog_to_jsonl(merged));
    std::cerr << "merged catalog: " << merged.size() << " records -> " << out_path << "\n";
    return k_exit_ok;
}

// ---- kg build --------------------------------------------------------------

int cmd_kg_build(const std::string& catalog_path, const std::string& out_path) {
    const auto records = catalog_from_jsonl(read_file(catalog_path));
    const auto graph = build_graph(records);
    write_file(out_path, graph.to_text());
    std::cerr << "graph: " << graph.node_count() << " nodes, " << graph.edge_count() << " edges -> "
              << out_path << "\n";
    return k_exit_ok;
}

// ---- synth run ---------------------------------------------------------------

SlotRegistry registry_from_config(const KvDocument& config) {
    SlotRegistry registry;
    for (const auto& [rest, value] : config.with_prefix("slot.")) {
        const size_t dot = rest.rfind('.');
        if (dot == std::string::npos) continue;
        const std::string name = rest.substr(0, dot);
        const std::string field = rest.substr(dot + 1);
        if (field == "kind") {
            const auto kind = slot_kind_from_name(value);
            if (!kind) throw UsageError("slot." + name + ".kind: unknown kind \"" + value + "\"");
            registry.register_graph_slot(name, *kind);
        } else if (field == "values") {
            std::vector<std::string> domain;
            for (const auto& part : text::split(value, '|')) {
                const std::string v = text::trim(part);
                if (!v.empty()) domain.push_back(v);
            }
            registry.register_literal_slot(name, domain);
        } else {
            throw UsageError("slot." + name + ": expected .kind or .values, got ." + field);
        }
    }
    return registry;
}

struct SynthCliOptions {
    std::string config_path;
    std::string out_path;
    std::optional<uint64_t> seed;
    std::optional<uint64_t> count;
    std::string transport;
    std::string endpoint;
    std::optional<uint64_t> max_in_flight;
    bool paraphrase = false;
    std::string cassette;
    std::string report_path;
};

int cmd_synth_run(const SynthCliOptions& opts) {
    const auto config = KvDocument::parse(read_file(opts.config_path));

    const auto templates_path = config.get("templates");
    if (!templates_path) throw UsageError("job config must set templates = <pack path>");

    GenerationJob job;
    job.templates = load_labeled_pack(read_file(*templates_path));
    job.registry = registry_from_config(config);

    KnowledgeGraph graph;
    if (const auto graph_path = config.get("graph")) {
        graph = KnowledgeGraph::from_text(read_file(*graph_path));
    } else if (const auto catalog_path = config.get("catalog")) {
        graph = build_graph(catalog_from_jsonl(read_file(*catalog_path)));
    } else {
        throw UsageError("job config must set graph = <path> or catalog = <path>");
    }
    job.graph = &graph;

    std::optional<uint64_t> seed = opts.seed;
    if (!seed) {
        if (const auto s = config.get("seed")) seed = std::stoull(*s);
    }
    if (!seed) throw UsageError("a seed is required (--seed or seed= in the config)");
    job.rng_seed = *seed;

    job.target_count = opts.count ? *opts.count : std::stoull(config.get_or("count", "1"));
    job.max_in_flight =
        opts.max_in_flight ? *opts.max_in_flight : std::stoull(config.get_or("max_in_flight", "1"));
    job.paraphrase = opts.paraphrase || config.get_or("paraphrase", "false") == "true";
    job.params.model = config.get_or("model", job.params.model);
    if (const auto t = config.get("temperature")) job.params.temperature = std::stod(*t);
    if (const auto m = config.get("max_tokens")) job.params.max_tokens = std::stoi(*m);

    const std::string transport_name =
        !opts.transport.empty() ? opts.transport : config.get_or("transport", "mock");
    MockTransport mock;
    ReplayTransport replay;
    std::optional<HttpTransport> live;
    if (transport_name == "mock") {
        job.transport = &mock;
    } else if (transport_name == "replay") {
        const std::string cassette_path =
            !opts.cassette.empty() ? opts.cassette : config.get_or("cassette", "");
        if (cassette_path.empty()) throw UsageError("replay transport needs --cassette <file>");
        replay = ReplayTransport::from_jsonl(read_file(cassette_path));
        job.transport = &replay;
    } else if (transport_name == "live") {
        const std::string endpoint =
            !opts.endpoint.empty() ? opts.endpoint : config.get_or("endpoint", "");
        if (endpoint.empty()) throw UsageError("live transport needs --endpoint <base url>");
        live.emplace(endpoint);
        job.transport = &*live;
    } else {
        throw UsageError("unknown transport \"" + transport_name + "\"");
    }

    const fs::path out(opts.out_path);
    if (out.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(out.parent_path(), ec);
    }
    std::ofstream sink_file(opts.out_path, std::ios::binary);
    if (!sink_file) throw std::runtime_error("cannot write " + opts.out_path);

    const QualityReport report = run_job(job, [&](const LabeledExample& ex) {
        sink_file << example_to_json(ex).dump() << "\n";
    });
    sink_file.close();

    const std::string report_text = report.to_json().dump(2) + "\n";
    if (!opts.report_path.empty()) {
        write_file(opts.report_path, report_text);
    } else {
        std::cout << report_text;
    }
    std::cerr << "dataset: " << report.emitted << " examples -> " << opts.out_path << "\n";
    return k_exit_ok;
}

// ---- render ------------------------------------------------------------------

std::vector<LabeledExample> load_dataset(const std::string& path) {
    std::vector<LabeledExample> examples;
    const std::string raw = read_file(path);
    size_t pos = 0;
    while (pos < raw.size()) {
        size_t eol = raw.find('\n', pos);
        if (eol == std::string::npos) eol = raw.size();
        const std::string line = text::trim(std::string_view(raw).substr(pos, eol - pos));
        pos = eol + 1;
        if (line.empty()) continue;
        try {
            examples.push_back(example_from_json(json::parse(line)));
        } catch (const json::exception& ex) {
            throw SynthError(SynthError::Code::bad_data, std::string("bad dataset line: ") + ex.what());
        }
    }
    return examples;
}

int cmd_render(const std::string& dataset_path, const std::string& task, const std::string& out_path) {
    const auto examples = load_dataset(dataset_path);
    std::string out;
    for (const auto& ex : examples) {
        json row;
        row["task"] = task;
        row["prompt"] = ex.prompt;
        row["template_id"] = ex.provenance.template_id;
        row["seed"] = ex.provenance.seed_assignments;
        if (task == "intent") {
            const auto rec = build_intent_record(ex.prompt, ex.intent);
            row["label"] = std::string(intent_name(ex.intent));
            row["rendered"] = rec.rendered;
        } else {
            const auto rec = build_entity_record(ex.prompt, ex.entities);
            row["entities"] = ex.entities;
            row["rendered"] = rec.rendered;
        }
        out += row.dump();
        out += "\n";
    }
    write_file(out_path, out);
    std::cerr << "rendered " << examples.size() << " " << task << " records -> " << out_path << "\n";
    return k_exit_ok;
}

// ---- finetune-config ---------------------------------------------------------

int cmd_finetune_config(const std::string& base_model, const std::string& layers_csv, int rank,
                        double alpha, double dropout, const std::string& quantization,
                        const std::optional<std::string>& out_path) {
    FinetuneConfig cfg;
    if (!base_model.empty()) cfg.base_model_id = base_model;
    if (!layers_csv.empty()) {
        cfg.target_layers.clear();
        for (const auto& part : text::split(layers_csv, ',')) {
            const std::string layer = text::trim(part);
            if (!layer.empty()) cfg.target_layers.push_back(layer);
        }
    }
    cfg.rank = rank;
    cfg.alpha = alpha;
    cfg.dropout = dropout;
    if (quantization == "none") {
        cfg.quantization = FinetuneConfig::Quantization::none;
    } else if (quantization == "four_bit") {
        cfg.quantization = FinetuneConfig::Quantization::four_bit;
    } else {
        throw UsageError("quantization must be none or four_bit");
    }
    emit(out_path, emit_finetune_config(cfg));
    return k_exit_ok;
}

// ---- eval ----------------------------------------------------------------------

std::map<std::string, json> load_predictions(const std::string& path) {
    std::map<std::string, json> by_id;
    const std::string raw = read_file(path);
    size_t pos = 0;
    size_t line_no = 0;
    while (pos < raw.size()) {
        size_t eol = raw.find('\n', pos);
        if (eol == std::string::npos) eol = raw.size();
        const std::string line = text::trim(std::string_view(raw).substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            json row = json::parse(line);
            const std::string id = row.at("example_id").get<std::string>();
            by_id[id] = std::move(row);
        } catch (const json::exception& ex) {
            throw EvalError(EvalError::Code::unrepairable_json,
                            "predictions line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return by_id;
}

LenientJsonOptions alias_options(const std::vector<std::string>& alias_flags) {
    LenientJsonOptions opts;
    for (const auto& flag : alias_flags) {
        const size_t eq = flag.find('=');
        if (eq == std::string::npos) throw UsageError("--alias expects from=to, got \"" + flag + "\"");
        opts.key_aliases[flag.substr(0, eq)] = flag.substr(eq + 1);
    }
    return opts;
}

int cmd_eval(const std::string& task, const std::string& gold_path, const std::string& pred_path,
             const std::optional<std::string>& out_path, const std::vector<std::string>& alias_flags) {
    const auto gold_examples = load_dataset(gold_path);
    const auto predictions = load_predictions(pred_path);
    const LenientJsonOptions opts = alias_options(alias_flags);

    size_t dropped_classes = 0;
    auto parse_intent_pred = [&](const json& row) -> std::optional<std::string> {
        json payload;
        if (row.contains("pred")) {
            payload = row.at("pred");
        } else if (row.contains("raw_output")) {
            try {
                payload = extract_json_lenient(row.at("raw_output").get<std::string>(), opts);
            } catch (const EvalError&) {
                return std::nullopt;
            }
        } else {
            return std::nullopt;
        }
        if (payload.is_object() && payload.contains("intent") && payload.at("intent").is_string()) {
            return payload.at("intent").get<std::string>();
        }
        if (payload.is_string()) return payload.get<std::string>();
        return std::nullopt;
    };

    auto parse_entity_pred = [&](const json& row) -> std::optional<EntityMap> {
        json payload;
        if (row.contains("pred")) {
            payload = row.at("pred");
            if (!opts.key_aliases.empty() && payload.is_object()) {
                json renamed = json::object();
                for (const auto& [key, value] : payload.items()) {
                    auto it = opts.key_aliases.find(key);
                    renamed[it == opts.key_aliases.end() ? key : it->second] = value;
                }
                payload = std::move(renamed);
            }
        } else if (row.contains("raw_output")) {
            try {
                payload = extract_json_lenient(row.at("raw_output").get<std::string>(), opts);
            } catch (const EvalError&) {
                return std::nullopt;
            }
        } else {
            return std::nullopt;
        }
        if (!payload.is_object()) return std::nullopt;
        EntityMap entities;
        for (const auto& [cls, values] : payload.items()) {
            if (!is_entity_class(cls)) {
                ++dropped_classes;
                continue;
            }
            std::vector<std::string> list;
            if (values.is_array()) {
                for (const auto& v : values) {
                    if (v.is_string()) list.push_back(v.get<std::string>());
                }
            } else if (values.is_string()) {
                list.push_back(values.get<std::string>());
            }
            entities[cls] = std::move(list);
        }
        return entities;
    };

    EvalReport report;
    if (task == "intent") {
        std::vector<std::string> gold;
        std::vector<std::optional<std::string>> pred;
        for (const auto& ex : gold_examples) {
            gold.push_back(std::string(intent_name(ex.intent)));
            auto it = predictions.find(ex.example_id);
            pred.push_back(it == predictions.end() ? std::nullopt : parse_intent_pred(it->second));
        }
        report = macro_f1(gold, pred);
    } else {
        std::vector<EntityMap> gold;
        std::vector<std::optional<EntityMap>> pred;
        for (const auto& ex : gold_examples) {
            gold.push_back(ex.entities);
            auto it = predictions.find(ex.example_id);
            pred.push_back(it == predictions.end() ? std::nullopt : parse_entity_pred(it->second));
        }
        report = entity_macro_f1(gold, pred);
    }

    if (dropped_classes > 0) {
        std::cerr << "dropped " << dropped_classes << " prediction values with unknown entity classes\n";
    }
    std::cout << report.to_table();
    if (out_path) {
        json doc = report.to_json();
        doc["reference_scores"] = reference_scores_json(task);
        write_file(*out_path, doc.dump(2) + "\n");
    }
    return k_exit_ok;
}

// ---- diversity -----------------------------------------------------------------

int cmd_diversity(const std::string& dataset_path, const std::optional<std::string>& out_path) {
    const auto examples = load_dataset(dataset_path);
    std::vector<std::string> prompts;
    std::vector<int> template_ids;
    bool have_provenance = !examples.empty();
    for (const auto& ex : examples) {
        prompts.push_back(ex.prompt);
        if (ex.provenance.template_id == 0) have_provenance = false;
        template_ids.push_back(ex.provenance.template_id);
    }
    const auto report = diversity(prompts, have_provenance ? &template_ids : nullptr);
    emit(out_path, report.to_json().dump(2) + "\n");
    return k_exit_ok;
}

// ---- retrieve ------------------------------------------------------------------

int cmd_retrieve(const std::string& catalog_path, const std::string& query,
                 const std::string& entities_json, size_t k, size_t dim,
                 const std::string& index_in, const std::string& index_out,
                 const std::optional<std::string>& out_path) {
    CatalogIndex index;
    if (!index_in.empty()) {
        index = deserialize_index(read_file(index_in));
    } else {
        if (catalog_path.empty()) throw UsageError("retrieve needs --catalog or --index-in");
        HashedEmbeddingProvider provider(dim);
        index = index_catalog(catalog_from_jsonl(read_file(catalog_path)), provider);
    }
    if (!index_out.empty()) {
        write_file(index_out, serialize_index(index));
        std::cerr << "index: " << index.record_ids.size() << " vectors -> " << index_out << "\n";
    }

    std::map<std::string, std::vector<std::string>> entities;
    if (!entities_json.empty()) {
        const json parsed = json::parse(entities_json);
        for (const auto& [cls, values] : parsed.items()) {
            for (const auto& v : values) entities[cls].push_back(v.get<std::string>());
        }
    }
    if (query.empty() && entities.empty()) {
        if (!index_out.empty()) return k_exit_ok;  // index-build-only invocation
        throw UsageError("retrieve needs --query or --entities");
    }

    const auto ranked = rank(index, entities, query, k);
    std::string table;
    char line[512];
    for (const auto& [id, score] : ranked) {
        std::snprintf(line, sizeof(line), "%-24s %9.6f\n", id.c_str(), double(score));
        table += line;
    }
    emit(out_path, table);
    return k_exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-grounded synthetic dataset toolkit for conversational movie recommendation"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand("ingest", "parse and merge source catalogs");
    std::string ingest_config, ingest_out;
    ingest->add_option("--config", ingest_config, "sources config file")->required();
    ingest->add_option("--out", ingest_out, "merged catalog JSONL output")->required();

    auto* kg = app.add_subcommand("kg", "knowledge graph commands");
    kg->require_subcommand(1);
    auto* kg_build = kg->add_subcommand("build", "build a graph from a catalog");
    std::string kg_catalog, kg_out;
    kg_build->add_option("--catalog", kg_catalog, "catalog JSONL")->required();
    kg_build->add_option("--out", kg_out, "graph text output")->required();

    auto* synth = app.add_subcommand("synth", "dataset generation commands");
    synth->require_subcommand(1);
    auto* synth_run = synth->add_subcommand("run", "generate a labeled dataset");
    SynthCliOptions synth_opts;
    uint64_t seed_flag = 0, count_flag = 0, mif_flag = 0;
    synth_run->add_option("--config", synth_opts.config_path, "job config file")->required();
    synth_run->add_option("--out", synth_opts.out_path, "dataset JSONL output")->required();
    auto* seed_opt = synth_run->add_option("--seed", seed_flag, "rng seed (required here or in config)");
    auto* count_opt = synth_run->add_option("--count", count_flag, "number of examples");
    synth_run->add_option("--transport", synth_opts.transport, "live|mock|replay");
    synth_run->add_option("--endpoint", synth_opts.endpoint, "base URL for live transport");
    auto* mif_opt = synth_run->add_option("--max-in-flight", mif_flag, "concurrent transport requests");
    synth_run->add_flag("--paraphrase", synth_opts.paraphrase, "rewrite prompts through the transport");
    synth_run->add_option("--cassette", synth_opts.cassette, "replay cassette JSONL");
    synth_run->add_option("--report", synth_opts.report_path, "quality report output (default stdout)");

    auto* render = app.add_subcommand("render", "render a dataset into training strings");
    std::string render_dataset, render_task, render_out;
    render->add_option("--dataset", render_dataset, "dataset JSONL")->required();
    render->add_option("--task", render_task, "intent|entity")
        ->required()
        ->check(CLI::IsMember({"intent", "entity"}));
    render->add_option("--out", render_out, "training JSONL output")->required();

    auto* ftc = app.add_subcommand("finetune-config", "emit a fine-tune configuration document");
    std::string ftc_model, ftc_layers, ftc_quant = "four_bit", ftc_out;
    int ftc_rank = 16;
    double ftc_alpha = 32.0, ftc_dropout = 0.05;
    ftc->add_option("--base-model", ftc_model, "base model id");
    ftc->add_option("--layers", ftc_layers, "comma-separated target layers");
    ftc->add_option("--rank", ftc_rank, "adapter rank");
    ftc->add_option("--alpha", ftc_alpha, "adapter alpha");
    ftc->add_option("--dropout", ftc_dropout, "adapter dropout");
    ftc->add_option("--quantization", ftc_quant, "none|four_bit");
    ftc->add_option("--out", ftc_out, "output path (default stdout)");

    auto* eval_cmd = app.add_subcommand("eval", "score predictions against a gold dataset");
    eval_cmd->require_subcommand(1);
    std::string eval_gold, eval_pred, eval_out;
    std::vector<std::string> eval_aliases;
    for (const char* task : {"intent", "entity"}) {
        auto* sub = eval_cmd->add_subcommand(task, std::string("score the ") + task + " task");
        sub->add_option("--gold", eval_gold, "gold dataset JSONL")->required();
        sub->add_option("--pred", eval_pred, "predictions JSONL")->required();
        sub->add_option("--out", eval_out, "report JSON output");
        sub->add_option("--alias", eval_aliases, "key alias from=to (repeatable)");
    }

    auto* div = app.add_subcommand("diversity", "lexical diversity report for a dataset");
    std::string div_dataset, div_out;
    div->add_option("--dataset", div_dataset, "dataset JSONL")->required();
    div->add_option("--out", div_out, "report JSON output (default stdout)");

    auto* retrieve = app.add_subcommand("retrieve", "rank catalog records against a query");
    std::string ret_catalog, ret_query, ret_entities, ret_index_in, ret_index_out, ret_out;
    uint64_t ret_k = 5, ret_dim = k_default_embedding_dim;
    retrieve->add_option("--catalog", ret_catalog, "catalog JSONL");
    retrieve->add_option("--query", ret_query, "free-text query");
    retrieve->add_option("--entities", ret_entities, "JSON object of class -> values");
    retrieve->add_option("--k", ret_k, "results to return");
    retrieve->add_option("--dim", ret_dim, "embedding dimension");
    retrieve->add_option("--index-in", ret_index_in, "load a serialized index");
    retrieve->add_option("--index-out", ret_index_out, "save the index");
    retrieve->add_option("--out", ret_out, "result table output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return k_exit_ok;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return k_exit_usage;
    }

    try {
        if (*ingest) return cmd_ingest(ingest_config, ingest_out);
        if (*kg_build) return cmd_kg_build(kg_catalog, kg_out);
        if (*synth_run) {
            if (*seed_opt) synth_opts.seed = seed_flag;
            if (*count_opt) synth_opts.count = count_flag;
            if (*mif_opt) synth_opts.max_in_flight = mif_flag;
            return cmd_synth_run(synth_opts);
        }
        if (*render) return cmd_render(render_dataset, render_task, render_out);
        if (*ftc) {
            return cmd_finetune_config(ftc_model, ftc_layers, ftc_rank, ftc_alpha, ftc_dropout, ftc_quant,
                                       ftc_out.empty() ? std::nullopt : std::optional(ftc_out));
        }
        if (*eval_cmd) {
            const std::string task = eval_cmd->get_subcommands().front()->get_name();
            return cmd_eval(task, eval_gold, eval_pred,
                            eval_out.empty() ? std::nullopt : std::optional(eval_out), eval_aliases);
        }
        if (*div) {
            return cmd_diversity(div_dataset, div_out.empty() ? std::nullopt : std::optional(div_out));
        }
        if (*retrieve) {
            return cmd_retrieve(ret_catalog, ret_query, ret_entities, ret_k, ret_dim, ret_index_in,
                                ret_index_out, ret_out.empty() ? std::nullopt : std::optional(ret_out));
        }
        std::cerr << "no subcommand selected\n";
        return k_exit_usage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return k_exit_usage;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return k_exit_transport;
    } catch (const SynthError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code == SynthError::Code::transport_failure ? k_exit_transport : k_exit_data;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return k_exit_data;
    }
}
