#include "rcsl/cli/config_file.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>

#include "rcsl/error.hpp"
#include "rcsl/numkit/wire.hpp"
#include "rcsl/worldkit/envs.hpp"

namespace rcsl::cli {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

long long ll_of(const std::string& v) {
  if (v.empty()) throw ValidationError("empty value");
  errno = 0;
  char* end = nullptr;
  long long x = std::strtoll(v.c_str(), &end, 10);
  if (errno == ERANGE || end != v.c_str() + v.size())
    throw ValidationError("'" + v + "' is not an integer");
  return x;
}

int int_of(const std::string& v) {
  long long x = ll_of(v);
  if (x < -2147483648LL || x > 2147483647LL) throw ValidationError("'" + v + "' is out of range");
  return static_cast<int>(x);
}

std::uint64_t u64_of(const std::string& v) {
  if (v.empty() || v[0] == '-') throw ValidationError("'" + v + "' is not a nonnegative integer");
  errno = 0;
  char* end = nullptr;
  unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (errno == ERANGE || end != v.c_str() + v.size())
    throw ValidationError("'" + v + "' is not a nonnegative integer");
  return static_cast<std::uint64_t>(x);
}

double dbl_of(const std::string& v) {
  if (v.empty()) throw ValidationError("empty value");
  errno = 0;
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) throw ValidationError("'" + v + "' is not a number");
  if (!std::isfinite(x)) throw ValidationError("'" + v + "' is not finite");
  return x;
}

bool bool_of(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ValidationError("'" + v + "' is not a bool (expected true or false)");
}

std::vector<double> list_of(const std::string& v) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    std::size_t comma = v.find(',', pos);
    if (comma == std::string::npos) comma = v.size();
    out.push_back(dbl_of(trim(v.substr(pos, comma - pos))));
    pos = comma + 1;
  }
  return out;
}

std::string fmt_int(long long x) { return std::to_string(x); }

// Shortest decimal form that parses back to exactly x, so rendered configs
// stay readable without losing a bit.
std::string fmt_dbl(double x) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string fmt_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += fmt_dbl(xs[i]);
  }
  return out;
}

// One row per config key: how to read a value into the struct and how to
// write it back out. parse and render both walk this table, so the two
// directions cannot drift apart. An empty render result omits the key.
struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Field>& fields() {
  using C = RunConfig;
  using S = const std::string&;
  static const std::vector<Field> table = {
      {"env", [](C& c, S v) { c.env_id = v; }, [](const C& c) { return c.env_id; }},
      {"episodes", [](C& c, S v) { c.episodes = int_of(v); },
       [](const C& c) { return fmt_int(c.episodes); }},
      {"seed", [](C& c, S v) { c.align.seed = u64_of(v); },
       [](const C& c) { return fmt_int(static_cast<long long>(c.align.seed)); }},
      {"context", [](C& c, S v) { c.align.context = int_of(v); },
       [](const C& c) { return fmt_int(c.align.context); }},
      {"rtg_scale", [](C& c, S v) { c.align.rtg_scale = dbl_of(v); },
       [](const C& c) { return fmt_dbl(c.align.rtg_scale); }},
      {"batch_size", [](C& c, S v) { c.align.batch_size = int_of(v); },
       [](const C& c) { return fmt_int(c.align.batch_size); }},
      {"epochs", [](C& c, S v) { c.align.epochs = int_of(v); },
       [](const C& c) { return fmt_int(c.align.epochs); }},
      {"steps_per_epoch", [](C& c, S v) { c.align.steps_per_epoch = int_of(v); },
       [](const C& c) { return fmt_int(c.align.steps_per_epoch); }},
      {"sigma_e", [](C& c, S v) { c.align.sigma_e = dbl_of(v); },
       [](const C& c) { return fmt_dbl(c.align.sigma_e); }},
      {"lambda_e", [](C& c, S v) { c.align.lambda_e = dbl_of(v); },
       [](const C& c) { return fmt_dbl(c.align.lambda_e); }},
      {"delta_rtg", [](C& c, S v) { c.align.delta_rtg = dbl_of(v); },
       [](const C& c) { return fmt_dbl(c.align.delta_rtg); }},
      {"gamma", [](C& c, S v) { c.align.gamma = dbl_of(v); },
       [](const C& c) { return fmt_dbl(c.align.gamma); }},
      {"alpha", [](C& c, S v) { c.align.alpha = dbl_of(v); },
       [](const C& c) { return fmt_dbl(c.align.alpha); }},
      {"noise", [](C& c, S v) { c.align.noise_mode = trainer::noise_mode_from(v); },
       [](const C& c) { return std::string(trainer::to_string(c.align.noise_mode)); }},
      {"indicator", [](C& c, S v) { c.align.indicator_mode = trainer::indicator_mode_from(v); },
       [](const C& c) { return std::string(trainer::to_string(c.align.indicator_mode)); }},
      {"penalty", [](C& c, S v) { c.align.penalty_mode = trainer::penalty_mode_from(v); },
       [](const C& c) { return std::string(trainer::to_string(c.align.penalty_mode)); }},
      {"freeze_critic", [](C& c, S v) { c.align.freeze_critic = bool_of(v); },
       [](const C& c) { return fmt_bool(c.align.freeze_critic); }},
      {"align_on_min", [](C& c, S v) { c.align.align_on_min = bool_of(v); },
       [](const C& c) { return fmt_bool(c.align.align_on_min); }},
      {"actor_lr", [](C& c, S v) { c.align.actor_adam.lr = dbl_of(v); },
       [](const C& c) { return fmt_dbl(c.align.actor_adam.lr); }},
      {"model.embed_dim", [](C& c, S v) { c.embed_dim = int_of(v); },
       [](const C& c) { return fmt_int(c.embed_dim); }},
      {"model.blocks", [](C& c, S v) { c.blocks = int_of(v); },
       [](const C& c) { return fmt_int(c.blocks); }},
      {"model.heads", [](C& c, S v) { c.heads = int_of(v); },
       [](const C& c) { return fmt_int(c.heads); }},
      {"model.conv_window", [](C& c, S v) { c.conv_window = int_of(v); },
       [](const C& c) { return fmt_int(c.conv_window); }},
      {"model.use_conv", [](C& c, S v) { c.use_conv = bool_of(v); },
       [](const C& c) { return fmt_bool(c.use_conv); }},
      {"model.dropout", [](C& c, S v) { c.dropout = dbl_of(v); },
       [](const C& c) { return fmt_dbl(c.dropout); }},
      {"model.max_timestep", [](C& c, S v) { c.max_timestep = int_of(v); },
       [](const C& c) { return fmt_int(c.max_timestep); }},
      {"critic.hidden", [](C& c, S v) { c.critic_hidden = int_of(v); },
       [](const C& c) { return fmt_int(c.critic_hidden); }},
      {"critic.lr", [](C& c, S v) { c.critic_lr = dbl_of(v); },
       [](const C& c) { return fmt_dbl(c.critic_lr); }},
      {"critic.pretrain_mode", [](C& c, S v) { c.critic_pretrain_mode = v; },
       [](const C& c) { return c.critic_pretrain_mode; }},
      {"pretrain_steps", [](C& c, S v) { c.pretrain_steps = int_of(v); },
       [](const C& c) { return fmt_int(c.pretrain_steps); }},
      {"pretrain_batch", [](C& c, S v) { c.pretrain_batch = int_of(v); },
       [](const C& c) { return fmt_int(c.pretrain_batch); }},
      {"checkpoint_interval", [](C& c, S v) { c.checkpoint_interval = int_of(v); },
       [](const C& c) { return fmt_int(c.checkpoint_interval); }},
      {"eval.targets", [](C& c, S v) { c.eval_targets = int_of(v); },
       [](const C& c) { return fmt_int(c.eval_targets); }},
      {"eval.rollouts", [](C& c, S v) { c.eval_rollouts = int_of(v); },
       [](const C& c) { return fmt_int(c.eval_rollouts); }},
      {"eval.target_min", [](C& c, S v) { c.eval_target_min = dbl_of(v); },
       [](const C& c) { return c.eval_target_min ? fmt_dbl(*c.eval_target_min) : std::string(); }},
      {"eval.target_max", [](C& c, S v) { c.eval_target_max = dbl_of(v); },
       [](const C& c) { return c.eval_target_max ? fmt_dbl(*c.eval_target_max) : std::string(); }},
      {"eval.target_list", [](C& c, S v) { c.eval_target_list = list_of(v); },
       [](const C& c) {
         return c.eval_target_list.empty() ? std::string() : fmt_list(c.eval_target_list);
       }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  align.validate();
  if (env_id.empty()) throw ValidationError("config: env must not be empty");
  if (episodes < 1) throw ValidationError("config: episodes must be positive");
  if (embed_dim < 1) throw ValidationError("config: model.embed_dim must be positive");
  if (blocks < 1) throw ValidationError("config: model.blocks must be positive");
  if (heads < 1) throw ValidationError("config: model.heads must be positive");
  if (embed_dim % heads != 0)
    throw ValidationError("config: model.embed_dim must be divisible by model.heads");
  if (conv_window < 1) throw ValidationError("config: model.conv_window must be positive");
  if (max_timestep < 1) throw ValidationError("config: model.max_timestep must be positive");
  if (!(dropout >= 0.0) || dropout >= 1.0)
    throw ValidationError("config: model.dropout must lie in [0, 1)");
  if (critic_hidden < 1) throw ValidationError("config: critic.hidden must be positive");
  if (!(critic_lr > 0.0)) throw ValidationError("config: critic.lr must be positive");
  if (critic_pretrain_mode == "iql_expectile")
    throw ValidationError(
        "config: critic.pretrain_mode = iql_expectile (expectile regression for sparse-reward "
        "setups) is not implemented; use td_double");
  if (critic_pretrain_mode != "td_double")
    throw ValidationError("config: unknown critic.pretrain_mode '" + critic_pretrain_mode +
                          "'; the only implemented mode is td_double");
  if (pretrain_steps < 0) throw ValidationError("config: pretrain_steps must be nonnegative");
  if (pretrain_batch < 1) throw ValidationError("config: pretrain_batch must be positive");
  if (checkpoint_interval < 0)
    throw ValidationError("config: checkpoint_interval must be nonnegative");
  if (eval_targets < 1) throw ValidationError("config: eval.targets must be positive");
  if (eval_rollouts < 1) throw ValidationError("config: eval.rollouts must be positive");
  if (eval_target_min.has_value() != eval_target_max.has_value())
    throw ValidationError("config: eval.target_min and eval.target_max go together");
  if (eval_target_min && !(*eval_target_min < *eval_target_max))
    throw ValidationError("config: eval.target_min must be below eval.target_max");
  if (!eval_target_list.empty()) {
    if (eval_target_min)
      throw ValidationError(
          "config: give either eval.target_list or the eval.target_min/max range, not both");
    for (std::size_t i = 1; i < eval_target_list.size(); ++i)
      if (!(eval_target_list[i - 1] < eval_target_list[i]))
        throw ValidationError("config: eval.target_list must be strictly increasing");
  }
}

RunConfig parse_config(const std::string& text, const RunConfig& base) {
  RunConfig cfg = base;
  std::set<std::string> seen;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    ++lineno;
    std::string line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    const Field* field = nullptr;
    for (const Field& f : fields())
      if (key == f.key) {
        field = &f;
        break;
      }
    if (!field)
      throw ValidationError("config line " + std::to_string(lineno) + ": unknown key '" + key +
                            "'");
    if (!seen.insert(key).second)
      throw ValidationError("config line " + std::to_string(lineno) + ": duplicate key '" + key +
                            "'");
    try {
      field->set(cfg, value);
    } catch (const ValidationError& e) {
      throw ValidationError("config line " + std::to_string(lineno) + ", key '" + key +
                            "': " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  return parse_config(numkit::wire::slurp(path, "config"), base);
}

std::string render_config(const RunConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) {
    std::string v = f.get(cfg);
    if (v.empty()) continue;
    out += f.key;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

policy::PolicyConfig policy_config(const RunConfig& cfg, const worldkit::Dataset& ds) {
  if (ds.rtg_scale != cfg.align.rtg_scale)
    throw ValidationError("config rtg_scale " + fmt_dbl(cfg.align.rtg_scale) +
                          " does not match the dataset's " + fmt_dbl(ds.rtg_scale));
  const worldkit::EnvSpec& spec = worldkit::make_env(ds.env_id)->spec();
  policy::PolicyConfig pc;
  pc.state_dim = spec.obs_dim;
  pc.action_dim = spec.act_dim;
  pc.embed_dim = cfg.embed_dim;
  pc.blocks = cfg.blocks;
  pc.heads = cfg.heads;
  pc.context = cfg.align.context;
  pc.conv_window = cfg.conv_window;
  pc.use_conv = cfg.use_conv;
  pc.max_timestep = cfg.max_timestep;
  pc.dropout = cfg.dropout;
  pc.discrete = spec.discrete;
  pc.validate();
  return pc;
}

critic::CriticConfig critic_config(const RunConfig& cfg, const worldkit::Dataset& ds) {
  if (ds.rtg_scale != cfg.align.rtg_scale)
    throw ValidationError("config rtg_scale " + fmt_dbl(cfg.align.rtg_scale) +
                          " does not match the dataset's " + fmt_dbl(ds.rtg_scale));
  const worldkit::EnvSpec& spec = worldkit::make_env(ds.env_id)->spec();
  critic::CriticConfig cc;
  cc.state_dim = spec.obs_dim;
  cc.action_dim = spec.act_dim;
  cc.hidden = cfg.critic_hidden;
  cc.gamma = cfg.align.gamma;
  cc.alpha = cfg.align.alpha;
  cc.adam.lr = cfg.critic_lr;
  cc.validate();
  return cc;
}

}  // namespace rcsl::cli
