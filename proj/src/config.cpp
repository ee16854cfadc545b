#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fgts/harness.hpp"

namespace fgts::harness {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n\"");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n\"");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
        throw std::invalid_argument("config " + key + ": '" + v + "' is not a number");
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
        throw std::invalid_argument("config " + key + ": '" + v + "' is not a non-negative integer");
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
    return static_cast<std::size_t>(to_u64(key, v));
}

bool to_bool(const std::string& key, const std::string& v) {
    std::string t = trim(v);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw std::invalid_argument("config " + key + ": '" + v + "' is not a boolean");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
    if (out.empty()) throw std::invalid_argument("config " + key + ": empty list");
    return out;
}

using Setter = void (*)(ExperimentConfig&, const std::string& key, const std::string& value);

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"experiment.name", [](auto& c, auto&, auto& v) { c.name = trim(v); }},
        {"experiment.rounds", [](auto& c, auto& k, auto& v) { c.rounds = to_size(k, v); }},
        {"experiment.runs", [](auto& c, auto& k, auto& v) { c.runs = to_size(k, v); }},
        {"experiment.seed", [](auto& c, auto& k, auto& v) { c.seed = to_u64(k, v); }},
        {"experiment.output_dir", [](auto& c, auto&, auto& v) { c.output_dir = trim(v); }},
        {"experiment.threads", [](auto& c, auto& k, auto& v) { c.threads = to_size(k, v); }},

        {"data.source", [](auto& c, auto&, auto& v) { c.source = trim(v); }},
        {"data.embeddings", [](auto& c, auto&, auto& v) { c.embeddings = trim(v); }},
        {"data.control_embeddings", [](auto& c, auto&, auto& v) { c.control_embeddings = trim(v); }},
        {"data.queries", [](auto& c, auto&, auto& v) { c.queries = trim(v); }},
        {"data.score_table", [](auto& c, auto&, auto& v) { c.score_table = trim(v); }},
        {"data.pairwise", [](auto& c, auto&, auto& v) { c.pairwise = trim(v); }},
        {"data.embedding_tag", [](auto& c, auto&, auto& v) { c.embedding_tag = trim(v); }},
        {"data.models", [](auto& c, auto&, auto& v) { c.models = split_list(v); }},
        {"data.offline_per_category",
         [](auto& c, auto& k, auto& v) { c.offline_per_category = to_size(k, v); }},
        {"data.hidden_category", [](auto& c, auto&, auto& v) { c.hidden_category = trim(v); }},
        {"data.excluded_categories",
         [](auto& c, auto&, auto& v) { c.excluded_categories = split_list(v); }},
        {"data.shift_per_category",
         [](auto& c, auto& k, auto& v) { c.shift_per_category = to_size(k, v); }},
        {"data.shift_hidden_count",
         [](auto& c, auto& k, auto& v) { c.shift_hidden_count = to_size(k, v); }},
        {"data.ambiguity_fractions",
         [](auto& c, auto& k, auto& v) { c.ambiguity_fractions = to_doubles(k, v); }},
        {"data.condorcet_bonus",
         [](auto& c, auto& k, auto& v) { c.condorcet_bonus = to_double(k, v); }},

        {"synthetic.categories", [](auto& c, auto& k, auto& v) { c.synth.categories = to_size(k, v); }},
        {"synthetic.per_category",
         [](auto& c, auto& k, auto& v) { c.synth.per_category = to_size(k, v); }},
        {"synthetic.dim", [](auto& c, auto& k, auto& v) { c.synth.dim = to_size(k, v); }},
        {"synthetic.spread", [](auto& c, auto& k, auto& v) { c.synth.spread = to_double(k, v); }},
        {"synthetic.max_center_cosine",
         [](auto& c, auto& k, auto& v) { c.synth.max_center_cosine = to_double(k, v); }},

        {"ccft.weightings", [](auto& c, auto&, auto& v) { c.weightings = split_list(v); }},
        {"ccft.groups", [](auto& c, auto&, auto& v) { c.groups = split_list(v); }},
        {"ccft.lambda", [](auto& c, auto& k, auto& v) { c.lambda = to_double(k, v); }},
        {"ccft.tau", [](auto& c, auto& k, auto& v) { c.tau = to_size(k, v); }},
        {"ccft.exclude_unselected",
         [](auto& c, auto& k, auto& v) { c.exclude_unselected = to_bool(k, v); }},

        {"feature.combiner", [](auto& c, auto&, auto& v) { c.combiner = parse_combiner(trim(v)); }},
        {"feature.append_metadata",
         [](auto& c, auto& k, auto& v) { c.append_metadata = to_bool(k, v); }},

        {"fgts.eta", [](auto& c, auto& k, auto& v) { c.eta = to_doubles(k, v); }},
        {"fgts.mu", [](auto& c, auto& k, auto& v) { c.mu = to_doubles(k, v); }},
        {"fgts.prior_std", [](auto& c, auto& k, auto& v) { c.prior_std = to_double(k, v); }},

        {"sgld.step_size", [](auto& c, auto& k, auto& v) { c.sgld.step_size = to_double(k, v); }},
        {"sgld.steps", [](auto& c, auto& k, auto& v) { c.sgld.steps = to_size(k, v); }},
        {"sgld.minibatch",
         [](auto& c, auto& k, auto& v) {
             const std::size_t b = to_size(k, v);
             c.sgld.minibatch = b == 0 ? std::nullopt : std::optional<std::size_t>(b);
         }},
        {"sgld.warm_start", [](auto& c, auto& k, auto& v) { c.sgld.warm_start = to_bool(k, v); }},
        {"sgld.decay", [](auto& c, auto& k, auto& v) { c.sgld.decay = to_double(k, v); }},
    };
    return table;
}

std::string env_name(const std::string& dotted) {
    std::string out = kEnvPrefix;
    for (char ch : dotted)
        out.push_back(ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    return out;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (rounds < 1) throw std::invalid_argument("config: experiment.rounds must be >= 1");
    if (runs < 1) throw std::invalid_argument("config: experiment.runs must be >= 1");
    if (source != "synthetic" && source != "files")
        throw std::invalid_argument("config: data.source must be 'synthetic' or 'files'");
    if (source == "files") {
        if (embeddings.empty()) throw std::invalid_argument("config: data.embeddings is required");
        if (queries.empty()) throw std::invalid_argument("config: data.queries is required");
        if (score_table.empty() && pairwise.empty())
            throw std::invalid_argument("config: need data.score_table or data.pairwise");
        for (const auto& p : {embeddings, queries, score_table, pairwise, control_embeddings})
            if (!p.empty() && !std::filesystem::exists(p))
                throw std::invalid_argument("config: file not found: " + p);
    }
    if (weightings.empty()) throw std::invalid_argument("config: ccft.weightings is empty");
    std::set<std::string> seen;
    for (const auto& w : weightings) {
        const std::string key = w == kSharedMean ? w : ccft::to_string(ccft::parse_weighting(w));
        if (!seen.insert(key).second)
            throw std::invalid_argument("config: weighting listed twice: " + w);
    }
    if (groups.empty()) throw std::invalid_argument("config: ccft.groups is empty");
    std::set<std::string> gseen;
    for (const auto& g : groups) {
        if (g != "exp" && g != "ctrl" && g != "ideal")
            throw std::invalid_argument("config: unknown group '" + g + "' (exp, ctrl, ideal)");
        if (!gseen.insert(g).second) throw std::invalid_argument("config: group listed twice: " + g);
        if (g == "ctrl" && control_embeddings.empty())
            throw std::invalid_argument("config: group 'ctrl' needs data.control_embeddings");
        if (g == "ideal" && hidden_category.empty())
            throw std::invalid_argument("config: group 'ideal' needs data.hidden_category");
    }
    std::set<double> fseen;
    for (double f : ambiguity_fractions) {
        if (!(f >= 0.0 && f < 1.0))
            throw std::invalid_argument("config: ambiguity fractions must lie in [0, 1)");
        if (!fseen.insert(f).second) throw std::invalid_argument("config: ambiguity fraction listed twice");
    }
    if (std::set<double>(eta.begin(), eta.end()).size() != eta.size() ||
        std::set<double>(mu.begin(), mu.end()).size() != mu.size())
        throw std::invalid_argument("config: duplicate eta/mu values");
    if (tau < 1) throw std::invalid_argument("config: ccft.tau must be >= 1");
    if (lambda < 0.0) throw std::invalid_argument("config: ccft.lambda must be >= 0");
    for (double e : eta) FgtsHyper{e, mu.front(), prior_std}.validate();
    for (double m : mu) FgtsHyper{eta.front(), m, prior_std}.validate();
    sgld.validate();
}

void set_config_value(ExperimentConfig& cfg, const std::string& section, const std::string& key,
                      const std::string& value) {
    const std::string dotted = section + "." + key;
    auto it = setters().find(dotted);
    if (it == setters().end()) throw std::invalid_argument("config: unknown key " + dotted);
    it->second(cfg, dotted, value);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
}

void apply_env_overrides(ExperimentConfig& cfg,
                         const std::function<std::optional<std::string>(const std::string&)>& lookup) {
    for (const auto& [dotted, setter] : setters()) {
        if (auto v = lookup(env_name(dotted))) setter(cfg, dotted, *v);
    }
}

ExperimentConfig parse_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    ExperimentConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw std::invalid_argument("config: key '" + section + "' outside a section");
        for (const auto& [key, value] : body) set_config_value(cfg, section, key, value.data());
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    ExperimentConfig cfg = parse_config(in);
    // Relative data paths are resolved against the config file's directory.
    const auto base = path.parent_path();
    for (std::string* p : {&cfg.embeddings, &cfg.control_embeddings, &cfg.queries,
                           &cfg.score_table, &cfg.pairwise}) {
        if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
    }
    apply_env_overrides(cfg, [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    });
    cfg.validate();
    return cfg;
}

}  // namespace fgts::harness
