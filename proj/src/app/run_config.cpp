#include "app/run_config.hpp"

#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace cajscc::app {

namespace {

const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d = {
        {"seed", "1"},
        {"ofdm.l_f", "64"},
        {"ofdm.n_s", "8"},
        {"ofdm.bandwidth_ratio", ""},
        {"ofdm.n_p", "2"},
        {"ofdm.cp_len", "16"},
        {"ofdm.l_t", "8"},
        {"ofdm.channel", "freq"},
        {"model.c", "3"},
        {"model.h", "32"},
        {"model.w", "32"},
        {"model.widths", "64,128,128,128"},
        {"model.strides", "2,2,1,1,1"},
        {"model.kernel", "3"},
        {"model.variant", "dual"},
        {"model.checkpoint", ""},
        {"csi.estimator", "mmse"},
        {"csi.checkpoint_perfect", ""},
        {"csi.checkpoint_mmse", ""},
        {"train.snr", "uniform:0:20"},
        {"train.batch", "32"},
        {"train.epochs", "200"},
        {"train.patience", "10"},
        {"train.lr", "0.0001"},
        {"train.val_fraction", "0.1"},
        {"train.val_realizations", "2"},
        {"data.source", "synthetic"},
        {"data.count", "500"},
        {"data.paths", ""},
        {"data.crop", "0"},
        {"data.test_paths", ""},
        {"data.test_count", "100"},
        {"eval.mu", "10"},
        {"eval.mu_list", "0,5,10,15,20"},
        {"eval.realizations", "10"},
        {"eval.threads", "0"},
        {"bench.trials", "10000"},
        {"bench.mu_list", "0,5,10,15,20"},
        {"gradcheck.eps", "1e-6"},
        {"gradcheck.tol", "1e-4"},
    };
    return d;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(trim(item));
    return out;
}

double to_double(const std::string& key, const std::string& text) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos == text.size()) return v;
    } catch (const std::logic_error&) {
    }
    throw ConfigError(key + ": expected a number, got '" + text + "'");
}

std::size_t to_size(const std::string& key, const std::string& text) {
    if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos) {
        try {
            return std::stoull(text);
        } catch (const std::out_of_range&) {
        }
    }
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
}

}  // namespace

RunConfig::RunConfig() : values_(defaults()) {}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& [key, value] : defaults()) out.push_back(key);
        return out;
    }();
    return k;
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    parse_text(ss.str(), path);
}

void RunConfig::parse_text(const std::string& text, const std::string& origin) {
    std::stringstream ss(text);
    std::size_t line_no = 0;
    for (std::string line; std::getline(ss, line);) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.find('=') == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key=value");
        }
        set_assignment(t);
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
    it->second = trim(value);
}

void RunConfig::set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
    return it->second;
}

double RunConfig::get_double(const std::string& key) const { return to_double(key, get(key)); }
std::size_t RunConfig::get_size(const std::string& key) const { return to_size(key, get(key)); }

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(get(key))) out.push_back(to_double(key, item));
    return out;
}

std::vector<std::size_t> RunConfig::get_size_list(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(get(key))) out.push_back(to_size(key, item));
    return out;
}

std::vector<std::string> RunConfig::get_string_list(const std::string& key) const { return split_list(get(key)); }

std::uint64_t RunConfig::seed() const { return get_size("seed"); }

phy::OfdmConfig RunConfig::ofdm() const {
    phy::OfdmConfig c;
    c.l_f = get_size("ofdm.l_f");
    c.n_p = get_size("ofdm.n_p");
    c.cp_len = get_size("ofdm.cp_len");
    c.l_t = get_size("ofdm.l_t");
    const std::string& channel = get("ofdm.channel");
    if (channel == "freq") {
        c.mode = phy::ChannelMode::Frequency;
    } else if (channel == "taps") {
        c.mode = phy::ChannelMode::Taps;
    } else {
        throw ConfigError("ofdm.channel must be freq or taps, got '" + channel + "'");
    }
    const std::string& ratio = get("ofdm.bandwidth_ratio");
    if (ratio.empty()) {
        c.n_s = get_size("ofdm.n_s");
    } else {
        const auto slash = ratio.find('/');
        if (slash == std::string::npos) throw ConfigError("ofdm.bandwidth_ratio must be <num>/<den>");
        const std::size_t num = to_size("ofdm.bandwidth_ratio", ratio.substr(0, slash));
        const std::size_t den = to_size("ofdm.bandwidth_ratio", ratio.substr(slash + 1));
        c.n_s = model::n_s_for_ratio(get_size("model.c"), get_size("model.h"), get_size("model.w"), c.l_f, num, den);
    }
    return c;
}

model::ModelConfig RunConfig::model() const {
    const phy::OfdmConfig o = ofdm();
    model::ModelConfig m;
    m.channels = get_size("model.c");
    m.height = get_size("model.h");
    m.width = get_size("model.w");
    m.l_f = o.l_f;
    m.n_s = o.n_s;
    m.widths = get_size_list("model.widths");
    m.strides = get_size_list("model.strides");
    m.kernel = get_size("model.kernel");
    m.padding = m.kernel / 2;
    m.variant = model::parse_variant(get("model.variant"));
    return m;
}

csi::EstimatorKind RunConfig::estimator() const { return csi::parse_estimator(get("csi.estimator")); }

train::TrainConfig RunConfig::train() const {
    train::TrainConfig t;
    t.snr = train::SnrSchedule::parse(get("train.snr"));
    t.batch_size = get_size("train.batch");
    t.max_epochs = get_size("train.epochs");
    t.patience = get_size("train.patience");
    t.adam.lr = get_double("train.lr");
    t.val_realizations = get_size("train.val_realizations");
    t.estimator = estimator();
    t.seed = seed();
    return t;
}

void RunConfig::validate() const {
    seed();
    ofdm().validate();
    model().validate();
    train().validate();
    const double vf = get_double("train.val_fraction");
    if (!(vf > 0.0 && vf < 1.0)) throw ConfigError("train.val_fraction must lie in (0, 1)");
    const std::string& source = get("data.source");
    if (source != "synthetic" && source != "cifar10" && source != "raw") {
        throw ConfigError("data.source must be synthetic, cifar10 or raw, got '" + source + "'");
    }
    if (source != "synthetic" && get_string_list("data.paths").empty()) {
        throw ConfigError("data.paths is required when data.source=" + source);
    }
    if (get_size("data.count") == 0) throw ConfigError("data.count must be at least 1");
    if (get_size("data.test_count") == 0) throw ConfigError("data.test_count must be at least 1");
    get_size("data.crop");
    get_double("eval.mu");
    if (get_double_list("eval.mu_list").empty()) throw ConfigError("eval.mu_list must not be empty");
    if (get_size("eval.realizations") == 0) throw ConfigError("eval.realizations must be at least 1");
    get_size("eval.threads");
    if (get_size("bench.trials") == 0) throw ConfigError("bench.trials must be at least 1");
    if (get_double_list("bench.mu_list").empty()) throw ConfigError("bench.mu_list must not be empty");
    if (!(get_double("gradcheck.eps") > 0.0)) throw ConfigError("gradcheck.eps must be positive");
    if (!(get_double("gradcheck.tol") > 0.0)) throw ConfigError("gradcheck.tol must be positive");
}

std::string RunConfig::resolved() const {
    std::string out;
    for (const auto& [key, value] : values_) out += key + "=" + value + "\n";
    return out;
}

void RunConfig::write_resolved(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << resolved();
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace cajscc::app
