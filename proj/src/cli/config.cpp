#include "genrec/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace genrec {

namespace {

struct Field {
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;
};

template <typename T>
T parse_number(const std::string& key, const std::string& v);

template <>
double parse_number<double>(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw UsageError("config: bad numeric value for " + key + ": `" + v + "`");
  }
}

template <>
int64_t parse_number<int64_t>(const std::string& key, const std::string& v) {
  int64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw UsageError("config: bad integer value for " + key + ": `" + v + "`");
  return x;
}

template <>
int parse_number<int>(const std::string& key, const std::string& v) {
  return static_cast<int>(parse_number<int64_t>(key, v));
}

template <>
uint64_t parse_number<uint64_t>(const std::string& key, const std::string& v) {
  return static_cast<uint64_t>(parse_number<int64_t>(key, v));
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// single registry drives parse, serialize and the round-trip guarantee
const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> kFields = [] {
    std::map<std::string, Field> f;
    auto num = [&f](const std::string& key, auto Config::* member) {
      using T = std::decay_t<decltype(std::declval<Config>().*member)>;
      f[key] = Field{[member](const Config& c) {
                       if constexpr (std::is_same_v<T, double>)
                         return fmt_double(c.*member);
                       else
                         return std::to_string(c.*member);
                     },
                     [key, member](Config& c, const std::string& v) {
                       c.*member = parse_number<T>(key, v);
                     }};
    };
    auto str = [&f](const std::string& key, std::string Config::* member) {
      f[key] = Field{[member](const Config& c) { return c.*member; },
                     [member](Config& c, const std::string& v) { c.*member = v; }};
    };
    num("seed", &Config::seed);
    num("threads", &Config::threads);
    num("dim", &Config::dim);
    num("latent_dim", &Config::latent_dim);
    num("id_length", &Config::id_length);
    num("codebook", &Config::codebook);
    num("beta", &Config::beta);
    num("lr", &Config::lr);
    num("l2", &Config::l2);
    num("batch", &Config::batch);
    num("patience", &Config::patience);
    num("rqvae_epochs", &Config::rqvae_epochs);
    num("rec_epochs", &Config::rec_epochs);
    num("history", &Config::history);
    num("layers", &Config::layers);
    num("heads", &Config::heads);
    num("ffn_dim", &Config::ffn_dim);
    str("pos_encoding", &Config::pos_encoding);
    str("token_variant", &Config::token_variant);
    num("top_k", &Config::top_k);
    num("gcn_layers", &Config::gcn_layers);
    num("synth_users", &Config::synth_users);
    num("synth_items", &Config::synth_items);
    num("synth_density", &Config::synth_density);
    num("synth_rank", &Config::synth_rank);
    num("synth_noise", &Config::synth_noise);
    num("dim_visual", &Config::dim_visual);
    num("dim_acoustic", &Config::dim_acoustic);
    num("dim_textual", &Config::dim_textual);
    num("mf_lr", &Config::mf_lr);
    num("mf_l2", &Config::mf_l2);
    num("mf_epochs", &Config::mf_epochs);
    num("bench_base_items", &Config::bench_base_items);
    num("bench_users", &Config::bench_users);
    num("bench_reps", &Config::bench_reps);
    return f;
  }();
  return kFields;
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  auto it = fields().find(key);
  if (it == fields().end()) throw UsageError("config: unknown key `" + key + "`");
  it->second.set(*this, value);
}

void Config::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("config: cannot open " + path);
  std::string line;
  int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config: " + path + ":" + std::to_string(line_no) +
                       ": expected key=value, got `" + line + "`");
    set(line.substr(0, eq), line.substr(eq + 1));
  }
}

std::string Config::serialize() const {
  std::ostringstream os;
  for (const auto& [key, field] : fields()) os << key << "=" << field.get(*this) << "\n";
  return os.str();
}

void Config::validate() const {
  auto fail = [](const std::string& msg) { throw UsageError("config: " + msg); };
  if (dim <= 0) fail("dim must be positive");
  if (latent_dim <= 0) fail("latent_dim must be positive");
  if (id_length < 2 || id_length > 6)
    fail("id_length must be in [2,6] (semantic tokens plus the popularity token)");
  if (codebook != 64 && codebook != 128 && codebook != 256 && codebook != 512)
    fail("codebook must be one of 64, 128, 256, 512");
  if (beta < 0) fail("beta must be non-negative");
  if (lr <= 0) fail("lr must be positive");
  if (l2 < 0) fail("l2 must be non-negative");
  if (batch != 500 && batch != 1000 && batch != 2000 && batch != 3000)
    fail("batch must be one of 500, 1000, 2000, 3000");
  if (patience < 1) fail("patience must be at least 1");
  if (rqvae_epochs < 1 || rec_epochs < 1) fail("epoch budgets must be positive");
  if (history < 1) fail("history must be positive");
  if (layers < 1) fail("layers must be at least 1");
  if (heads < 1 || dim % heads != 0) fail("heads must divide dim");
  if (ffn_dim < 1) fail("ffn_dim must be positive");
  if (pos_encoding != "relation" && pos_encoding != "sinusoid" && pos_encoding != "none")
    fail("pos_encoding must be relation, sinusoid or none");
  if (token_variant != "popularity" && token_variant != "random")
    fail("token_variant must be popularity or random");
  if (top_k < 1) fail("top_k must be positive");
  if (gcn_layers < 1) fail("gcn_layers must be at least 1");
  if (synth_users <= 0 || synth_items <= 0) fail("synth sizes must be positive");
  if (synth_density <= 0 || synth_density > 1) fail("synth_density must be in (0,1]");
  if (synth_rank < 1) fail("synth_rank must be positive");
  if (dim_visual < 0 || dim_acoustic < 0 || dim_textual < 0)
    fail("modality dims must be non-negative");
  if (dim_visual + dim_acoustic + dim_textual == 0)
    fail("at least one modality dimension must be positive");
  if (mf_lr <= 0 || mf_epochs < 1) fail("mf options must be positive");
  if (bench_base_items < top_k) fail("bench_base_items too small");
  if (bench_users < 1 || bench_reps < 0) fail("bench options out of range");
  if (threads < 0) fail("threads must be >= 0");
}

}  // namespace genrec
