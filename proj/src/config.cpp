#include <fmt/format.h>

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "onionpath/error.hpp"
#include "onionpath/experiment.hpp"

namespace onionpath {

namespace {

using ojson = nlohmann::ordered_json;

void reject_unknown_keys(const ojson& obj, std::string_view where, std::initializer_list<std::string_view> known) {
  if (!obj.is_object()) throw Error(Errc::parse_error, fmt::format("config section '{}' must be an object", where));
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw Error(Errc::parse_error, fmt::format("unknown config key '{}.{}'", where, key));
  }
}

template <typename T>
void read_if(const ojson& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::vector<double> read_numbers(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, fmt::format("cannot open bandwidth file {}", path.string()));
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  for (char& c : text) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream tokens(text);
  std::vector<double> values;
  std::string tok;
  while (tokens >> tok) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(Errc::parse_error, fmt::format("bandwidth file {}: '{}' is not a number", path.string(), tok));
    }
  }
  return values;
}

SimulationConfig parse(const ojson& j, const std::filesystem::path& base_dir) {
  SimulationConfig c = default_config();
  reject_unknown_keys(j, "<root>", {"population", "latency", "transfer", "experiment"});

  if (j.contains("population")) {
    const ojson& p = j.at("population");
    reject_unknown_keys(p, "population", {"countries", "total", "cluster_count", "bandwidth"});
    if (p.contains("countries")) {
      const ojson& countries = p.at("countries");
      if (!countries.is_object()) throw Error(Errc::parse_error, "population.countries must map country to count");
      c.countries.clear();
      for (const auto& [name, count] : countries.items()) c.countries.emplace_back(name, count.get<std::size_t>());
    }
    read_if(p, "total", c.total);
    read_if(p, "cluster_count", c.cluster_count);
    if (p.contains("bandwidth")) {
      const ojson& b = p.at("bandwidth");
      reject_unknown_keys(b, "population.bandwidth", {"sample_size", "median_kbps", "sigma", "values", "file"});
      read_if(b, "sample_size", c.bandwidth.sample_size);
      read_if(b, "median_kbps", c.bandwidth.median_kbps);
      read_if(b, "sigma", c.bandwidth.sigma);
      read_if(b, "values", c.bandwidth.values);
      if (b.contains("file")) {
        if (!c.bandwidth.values.empty()) {
          throw Error(Errc::parse_error, "population.bandwidth: give either 'values' or 'file', not both");
        }
        std::filesystem::path file = b.at("file").get<std::string>();
        if (file.is_relative()) file = base_dir / file;
        c.bandwidth.values = read_numbers(file);
        if (c.bandwidth.values.empty()) {
          throw Error(Errc::parse_error, fmt::format("bandwidth file {} holds no values", file.string()));
        }
      }
    }
  }

  if (j.contains("latency")) {
    const ojson& l = j.at("latency");
    reject_unknown_keys(l, "latency", {"intra_ms", "inter_ms", "jitter_ms", "down_prob", "pair_spread"});
    read_if(l, "intra_ms", c.latency.intra_country_ms);
    read_if(l, "inter_ms", c.latency.inter_country_ms);
    read_if(l, "jitter_ms", c.latency.jitter_ms);
    read_if(l, "down_prob", c.latency.down_probability);
    read_if(l, "pair_spread", c.latency.pair_spread);
  }

  if (j.contains("transfer")) {
    const ojson& t = j.at("transfer");
    reject_unknown_keys(t, "transfer", {"handshake_per_link", "processing_ms"});
    read_if(t, "handshake_per_link", c.transfer.handshake_per_link);
    read_if(t, "processing_ms", c.transfer.processing_ms);
  }

  if (j.contains("experiment")) {
    const ojson& e = j.at("experiment");
    reject_unknown_keys(e, "experiment",
                        {"strategies", "page_sizes_kb", "circuit_lengths", "repetitions", "warmup_rounds", "seed",
                         "home_country", "grp", "degree_samples", "threads"});
    ExperimentPlan& plan = c.plan;
    if (e.contains("strategies")) {
      plan.strategies.clear();
      for (const auto& s : e.at("strategies")) plan.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    read_if(e, "page_sizes_kb", plan.page_sizes_kb);
    read_if(e, "circuit_lengths", plan.circuit_lengths);
    read_if(e, "repetitions", plan.repetitions);
    read_if(e, "warmup_rounds", plan.warmup_rounds);
    read_if(e, "seed", plan.seed);
    read_if(e, "home_country", plan.home_country);
    read_if(e, "degree_samples", plan.degree_samples);
    read_if(e, "threads", plan.threads);
    if (e.contains("grp")) {
      const ojson& g = e.at("grp");
      reject_unknown_keys(g, "experiment.grp", {"round_interval_ms", "probes_per_round", "k", "max_iter"});
      read_if(g, "round_interval_ms", plan.round_interval_ms);
      read_if(g, "probes_per_round", plan.probes_per_round);
      read_if(g, "k", plan.k);
      read_if(g, "max_iter", plan.max_iter);
    }
  }

  validate(c.latency);
  validate(c.transfer);
  validate(c.plan);
  return c;
}

}  // namespace

void validate(const ExperimentPlan& plan) {
  if (plan.strategies.empty()) throw Error(Errc::invalid_argument, "plan lists no strategies");
  std::set<Strategy> seen;
  for (Strategy s : plan.strategies) {
    if (!seen.insert(s).second) {
      throw Error(Errc::invalid_argument, fmt::format("strategy {} listed twice", to_string(s)));
    }
  }
  if (plan.page_sizes_kb.empty()) throw Error(Errc::invalid_argument, "plan lists no page sizes");
  for (double p : plan.page_sizes_kb) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error(Errc::invalid_argument, fmt::format("page size {} KB", p));
  }
  if (plan.circuit_lengths.empty()) throw Error(Errc::invalid_argument, "plan lists no circuit lengths");
  for (std::size_t d : plan.circuit_lengths) {
    if (d < 2) throw Error(Errc::invalid_argument, fmt::format("circuit length must be >= 2, got {}", d));
  }
  if (plan.repetitions == 0) throw Error(Errc::invalid_argument, "repetitions must be at least 1");
  if (plan.probes_per_round == 0) throw Error(Errc::invalid_argument, "probes_per_round must be at least 1");
  if (plan.k == 0 || plan.max_iter == 0) throw Error(Errc::invalid_argument, "k and max_iter must be at least 1");
  if (plan.degree_samples == 0) throw Error(Errc::invalid_argument, "degree_samples must be at least 1");
  if (plan.threads == 0) throw Error(Errc::invalid_argument, "threads must be at least 1");
  if (plan.home_country.empty()) throw Error(Errc::invalid_argument, "home_country is empty");
  if (plan.warmup_rounds > static_cast<std::size_t>(std::numeric_limits<Tick>::max() / 2)) {
    throw Error(Errc::invalid_argument, "warmup_rounds too large");
  }
}

SimulationConfig default_config() { return SimulationConfig{}; }

SimulationConfig config_from_json(const nlohmann::ordered_json& j) {
  try {
    return parse(j, std::filesystem::current_path());
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::parse_error, fmt::format("malformed config: {}", ex.what()));
  }
}

SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, fmt::format("cannot open config {}", path.string()));
  try {
    const ojson j = ojson::parse(in);
    return parse(j, path.parent_path());
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::parse_error, fmt::format("malformed config {}: {}", path.string(), ex.what()));
  }
}

nlohmann::ordered_json to_json(const SimulationConfig& c) {
  ojson countries = ojson::object();
  for (const auto& [name, count] : c.countries) countries[name] = count;
  ojson bandwidth = {{"sample_size", c.bandwidth.sample_size},
                     {"median_kbps", c.bandwidth.median_kbps},
                     {"sigma", c.bandwidth.sigma}};
  if (!c.bandwidth.values.empty()) bandwidth["values"] = c.bandwidth.values;
  ojson strategies = ojson::array();
  for (Strategy s : c.plan.strategies) strategies.push_back(to_string(s));
  return {
      {"population",
       {{"countries", countries}, {"total", c.total}, {"cluster_count", c.cluster_count}, {"bandwidth", bandwidth}}},
      {"latency",
       {{"intra_ms", c.latency.intra_country_ms},
        {"inter_ms", c.latency.inter_country_ms},
        {"jitter_ms", c.latency.jitter_ms},
        {"down_prob", c.latency.down_probability},
        {"pair_spread", c.latency.pair_spread}}},
      {"transfer", {{"handshake_per_link", c.transfer.handshake_per_link}, {"processing_ms", c.transfer.processing_ms}}},
      {"experiment",
       {{"strategies", strategies},
        {"page_sizes_kb", c.plan.page_sizes_kb},
        {"circuit_lengths", c.plan.circuit_lengths},
        {"repetitions", c.plan.repetitions},
        {"warmup_rounds", c.plan.warmup_rounds},
        {"seed", c.plan.seed},
        {"home_country", c.plan.home_country},
        {"grp",
         {{"round_interval_ms", c.plan.round_interval_ms},
          {"probes_per_round", c.plan.probes_per_round},
          {"k", c.plan.k},
          {"max_iter", c.plan.max_iter}}},
        {"degree_samples", c.plan.degree_samples},
        {"threads", c.plan.threads}}},
  };
}

}  // namespace onionpath
