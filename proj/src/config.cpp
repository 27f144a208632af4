#include "somix/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace somix {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": " + v);
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return u;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": " + v);
  }
}

std::vector<double> parse_double_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item, key));
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& v, const std::string& key) {
  std::vector<std::size_t> out;
  for (double d : parse_double_list(v, key)) {
    if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d)))
      throw std::invalid_argument("config: bad size list for " + key);
    out.push_back(static_cast<std::size_t>(d));
  }
  return out;
}

// rows separated by ';', entries by ',' or whitespace
std::vector<std::vector<double>> parse_rows(const std::string& v, const std::string& key) {
  std::vector<std::vector<double>> out;
  std::string row;
  std::istringstream is(v);
  while (std::getline(is, row, ';')) {
    std::vector<double> r;
    std::istringstream rs(row);
    std::string tok;
    while (rs >> tok) {
      if (!tok.empty() && tok.back() == ',') tok.pop_back();
      if (!tok.empty()) r.push_back(parse_double(tok, key));
    }
    if (!r.empty()) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (mode != "smt" && mode != "smd" && mode != "pretrain_teacher")
    throw std::invalid_argument("config: mode must be smt, smd, or pretrain_teacher");
  if (total_steps == 0) throw std::invalid_argument("config: total_steps must be positive");
  if (batch_size == 0) throw std::invalid_argument("config: batch_size must be positive");
  if (!(lr_gen > 0.0) || !(lr_score > 0.0) || !(lr_warmup > 0.0))
    throw std::invalid_argument("config: learning rates must be positive");
  if (score_subiters == 0) throw std::invalid_argument("config: score_subiters must be >= 1");
  if (lambda_gan < 0.0 || mu_disc < 0.0)
    throw std::invalid_argument("config: lambda_gan and mu_disc must be nonnegative");
  if (weight_decay < 0.0) throw std::invalid_argument("config: weight_decay must be nonnegative");
  if (weight_eps <= 0.0) throw std::invalid_argument("config: weight_eps must be positive");
  schedule.validate();
  alpha_sampler.validate();
  if (data.name != "swiss_roll" && data.name != "gmm")
    throw std::invalid_argument("config: data name must be swiss_roll or gmm");
  if (teacher.kind != "analytic" && teacher.kind != "checkpoint")
    throw std::invalid_argument("config: teacher kind must be analytic or checkpoint");
}

TrainConfig TrainConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

TrainConfig TrainConfig::from_string(const std::string& text) {
  TrainConfig c;
  c.generator.activation = "leaky_relu";
  c.score.activation = "silu";
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: bad section header at line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " +
                                  std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const std::string full = section + "." + key;

    if (section == "train") {
      if (key == "mode") c.mode = val;
      else if (key == "seed") c.seed = parse_u64(val, full);
      else if (key == "total_steps") c.total_steps = parse_u64(val, full);
      else if (key == "warmup_steps") c.warmup_steps = parse_u64(val, full);
      else if (key == "batch_size") c.batch_size = parse_u64(val, full);
      else if (key == "lr_gen") c.lr_gen = parse_double(val, full);
      else if (key == "lr_score") c.lr_score = parse_double(val, full);
      else if (key == "lr_warmup") c.lr_warmup = parse_double(val, full);
      else if (key == "score_subiters") c.score_subiters = parse_u64(val, full);
      else if (key == "lambda_gan") c.lambda_gan = parse_double(val, full);
      else if (key == "mu_disc") c.mu_disc = parse_double(val, full);
      else if (key == "weight_decay") c.weight_decay = parse_double(val, full);
      else if (key == "beta1") c.beta1 = parse_double(val, full);
      else if (key == "beta2") c.beta2 = parse_double(val, full);
      else if (key == "adam_eps") c.adam_eps = parse_double(val, full);
      else if (key == "weight_eps") c.weight_eps = parse_double(val, full);
      else if (key == "use_w_alpha") c.use_w_alpha = parse_bool(val, full);
      else if (key == "use_w_dmd") c.use_w_dmd = parse_bool(val, full);
      else if (key == "per_sample_draws") c.per_sample_draws = parse_bool(val, full);
      else if (key == "alpha_binary") c.alpha_binary = parse_bool(val, full);
      else if (key == "debug_checks") c.debug_checks = parse_bool(val, full);
      else if (key == "skip_abort_limit") c.skip_abort_limit = parse_u64(val, full);
      else if (key == "checkpoint_path") c.checkpoint_path = val;
      else if (key == "metrics_path") c.metrics_path = val;
      else if (key == "checkpoint_every") c.checkpoint_every = parse_u64(val, full);
      else throw std::invalid_argument("config: unknown key " + full);
    } else if (section == "schedule") {
      if (key == "sigma_min") c.schedule.sigma_min = parse_double(val, full);
      else if (key == "sigma_max") c.schedule.sigma_max = parse_double(val, full);
      else if (key == "log_mean") c.schedule.log_mean = parse_double(val, full);
      else if (key == "log_std") c.schedule.log_std = parse_double(val, full);
      else if (key == "sigma_data") c.sigma_data = parse_double(val, full);
      else throw std::invalid_argument("config: unknown key " + full);
    } else if (section == "alpha") {
      if (key == "grid_points") c.alpha_sampler.grid_points = parse_u64(val, full);
      else if (key == "zero_fraction") c.alpha_sampler.zero_fraction = parse_double(val, full);
      else throw std::invalid_argument("config: unknown key " + full);
    } else if (section == "generator" || section == "score") {
      NetConfig& n = section == "generator" ? c.generator : c.score;
      if (key == "hidden") n.hidden = parse_size_list(val, full);
      else if (key == "activation") n.activation = val;
      else if (key == "latent_dim") n.latent_dim = parse_u64(val, full);
      else if (key == "alpha_embed_dim") n.alpha_embed_dim = parse_u64(val, full);
      else if (key == "noise_embed_dim") n.noise_embed_dim = parse_u64(val, full);
      else if (key == "fourier_scale") n.fourier_scale = parse_double(val, full);
      else if (key == "disc_hidden") n.disc_hidden = parse_size_list(val, full);
      else throw std::invalid_argument("config: unknown key " + full);
    } else if (section == "data") {
      if (key == "name") c.data.name = val;
      else if (key == "n") c.data.n = parse_u64(val, full);
      else if (key == "noise_std") c.data.noise_std = parse_double(val, full);
      else if (key == "holdout_fraction") c.data.holdout_fraction = parse_double(val, full);
      else if (key == "seed") c.data.seed = parse_u64(val, full);
      else if (key == "gmm_weights") c.data.gmm_weights = parse_double_list(val, full);
      else if (key == "gmm_means") c.data.gmm_means = parse_rows(val, full);
      else if (key == "gmm_variances") c.data.gmm_variances = parse_double_list(val, full);
      else throw std::invalid_argument("config: unknown key " + full);
    } else if (section == "teacher") {
      if (key == "kind") c.teacher.kind = val;
      else if (key == "path") c.teacher.path = val;
      else if (key == "gmm_weights") c.teacher.gmm_weights = parse_double_list(val, full);
      else if (key == "gmm_means") c.teacher.gmm_means = parse_rows(val, full);
      else if (key == "gmm_variances") c.teacher.gmm_variances = parse_double_list(val, full);
      else throw std::invalid_argument("config: unknown key " + full);
    } else {
      throw std::invalid_argument("config: unknown section [" + section + "]");
    }
  }
  c.validate();
  return c;
}

namespace {
nlohmann::json net_to_json(const NetConfig& n) {
  return {{"hidden", n.hidden},
          {"activation", n.activation},
          {"latent_dim", n.latent_dim},
          {"alpha_embed_dim", n.alpha_embed_dim},
          {"noise_embed_dim", n.noise_embed_dim},
          {"fourier_scale", n.fourier_scale},
          {"disc_hidden", n.disc_hidden}};
}

NetConfig net_from_json(const nlohmann::json& j) {
  NetConfig n;
  n.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  n.activation = j.at("activation").get<std::string>();
  n.latent_dim = j.at("latent_dim").get<std::size_t>();
  n.alpha_embed_dim = j.at("alpha_embed_dim").get<std::size_t>();
  n.noise_embed_dim = j.at("noise_embed_dim").get<std::size_t>();
  n.fourier_scale = j.at("fourier_scale").get<double>();
  n.disc_hidden = j.at("disc_hidden").get<std::vector<std::size_t>>();
  return n;
}
}  // namespace

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j;
  j["train"] = {{"mode", mode},
                {"seed", seed},
                {"total_steps", total_steps},
                {"warmup_steps", warmup_steps},
                {"batch_size", batch_size},
                {"lr_gen", lr_gen},
                {"lr_score", lr_score},
                {"lr_warmup", lr_warmup},
                {"score_subiters", score_subiters},
                {"lambda_gan", lambda_gan},
                {"mu_disc", mu_disc},
                {"weight_decay", weight_decay},
                {"beta1", beta1},
                {"beta2", beta2},
                {"adam_eps", adam_eps},
                {"weight_eps", weight_eps},
                {"use_w_alpha", use_w_alpha},
                {"use_w_dmd", use_w_dmd},
                {"per_sample_draws", per_sample_draws},
                {"alpha_binary", alpha_binary},
                {"debug_checks", debug_checks},
                {"skip_abort_limit", skip_abort_limit},
                {"checkpoint_path", checkpoint_path},
                {"metrics_path", metrics_path},
                {"checkpoint_every", checkpoint_every}};
  j["schedule"] = {{"sigma_min", schedule.sigma_min},
                   {"sigma_max", schedule.sigma_max},
                   {"log_mean", schedule.log_mean},
                   {"log_std", schedule.log_std},
                   {"sigma_data", sigma_data}};
  j["alpha"] = {{"grid_points", alpha_sampler.grid_points},
                {"zero_fraction", alpha_sampler.zero_fraction}};
  j["generator"] = net_to_json(generator);
  j["score"] = net_to_json(score);
  j["data"] = {{"name", data.name},
               {"n", data.n},
               {"noise_std", data.noise_std},
               {"holdout_fraction", data.holdout_fraction},
               {"seed", data.seed},
               {"gmm_weights", data.gmm_weights},
               {"gmm_means", data.gmm_means},
               {"gmm_variances", data.gmm_variances}};
  j["teacher"] = {{"kind", teacher.kind},
                  {"path", teacher.path},
                  {"gmm_weights", teacher.gmm_weights},
                  {"gmm_means", teacher.gmm_means},
                  {"gmm_variances", teacher.gmm_variances}};
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  const auto& t = j.at("train");
  c.mode = t.at("mode").get<std::string>();
  c.seed = t.at("seed").get<std::uint64_t>();
  c.total_steps = t.at("total_steps").get<std::size_t>();
  c.warmup_steps = t.at("warmup_steps").get<std::size_t>();
  c.batch_size = t.at("batch_size").get<std::size_t>();
  c.lr_gen = t.at("lr_gen").get<double>();
  c.lr_score = t.at("lr_score").get<double>();
  c.lr_warmup = t.at("lr_warmup").get<double>();
  c.score_subiters = t.at("score_subiters").get<std::size_t>();
  c.lambda_gan = t.at("lambda_gan").get<double>();
  c.mu_disc = t.at("mu_disc").get<double>();
  c.weight_decay = t.at("weight_decay").get<double>();
  c.beta1 = t.at("beta1").get<double>();
  c.beta2 = t.at("beta2").get<double>();
  c.adam_eps = t.at("adam_eps").get<double>();
  c.weight_eps = t.at("weight_eps").get<double>();
  c.use_w_alpha = t.at("use_w_alpha").get<bool>();
  c.use_w_dmd = t.at("use_w_dmd").get<bool>();
  c.per_sample_draws = t.at("per_sample_draws").get<bool>();
  c.alpha_binary = t.at("alpha_binary").get<bool>();
  c.debug_checks = t.at("debug_checks").get<bool>();
  c.skip_abort_limit = t.at("skip_abort_limit").get<std::size_t>();
  c.checkpoint_path = t.at("checkpoint_path").get<std::string>();
  c.metrics_path = t.at("metrics_path").get<std::string>();
  c.checkpoint_every = t.at("checkpoint_every").get<std::size_t>();
  const auto& s = j.at("schedule");
  c.schedule.sigma_min = s.at("sigma_min").get<double>();
  c.schedule.sigma_max = s.at("sigma_max").get<double>();
  c.schedule.log_mean = s.at("log_mean").get<double>();
  c.schedule.log_std = s.at("log_std").get<double>();
  c.sigma_data = s.at("sigma_data").get<double>();
  const auto& a = j.at("alpha");
  c.alpha_sampler.grid_points = a.at("grid_points").get<std::size_t>();
  c.alpha_sampler.zero_fraction = a.at("zero_fraction").get<double>();
  c.generator = net_from_json(j.at("generator"));
  c.score = net_from_json(j.at("score"));
  const auto& d = j.at("data");
  c.data.name = d.at("name").get<std::string>();
  c.data.n = d.at("n").get<std::size_t>();
  c.data.noise_std = d.at("noise_std").get<double>();
  c.data.holdout_fraction = d.at("holdout_fraction").get<double>();
  c.data.seed = d.at("seed").get<std::uint64_t>();
  c.data.gmm_weights = d.at("gmm_weights").get<std::vector<double>>();
  c.data.gmm_means = d.at("gmm_means").get<std::vector<std::vector<double>>>();
  c.data.gmm_variances = d.at("gmm_variances").get<std::vector<double>>();
  const auto& te = j.at("teacher");
  c.teacher.kind = te.at("kind").get<std::string>();
  c.teacher.path = te.at("path").get<std::string>();
  c.teacher.gmm_weights = te.at("gmm_weights").get<std::vector<double>>();
  c.teacher.gmm_means = te.at("gmm_means").get<std::vector<std::vector<double>>>();
  c.teacher.gmm_variances = te.at("gmm_variances").get<std::vector<double>>();
  c.validate();
  return c;
}

}  // namespace somix
