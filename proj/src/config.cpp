#include "hessgan/config.hpp"

#include <charconv>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "hessgan/errors.hpp"
#include "hessgan/io.hpp"

namespace hessgan {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = s.find(',');
        out.push_back(trim(s.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view source) {
    KeyValueConfig cfg;
    cfg.source_ = std::string(source);
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(fmt::format("{}:{}: expected 'key = value'", source, line_no));
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError(fmt::format("{}:{}: empty key", source, line_no));
        if (cfg.values_.count(key)) {
            throw ConfigError(fmt::format("{}:{}: duplicate key '{}' (first set on line {})", source, line_no, key,
                                          cfg.lines_[key]));
        }
        cfg.values_[key] = value;
        cfg.lines_[key] = line_no;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path.string());
    return parse(read_text_file(path), path.string());
}

void KeyValueConfig::set(const std::string& key, std::string value) {
    values_[key] = std::move(value);
    lines_[key] = 0;
}

const std::string* KeyValueConfig::find(const std::string& key) const {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

std::string KeyValueConfig::where(const std::string& key) const {
    const auto it = lines_.find(key);
    if (it == lines_.end() || it->second == 0) return fmt::format("{}: key '{}'", source_, key);
    return fmt::format("{}:{}: key '{}'", source_, it->second, key);
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto* v = find(key);
    return v ? *v : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size()) {
        throw ConfigError(where(key) + ": expected a number, got '" + *v + "'");
    }
    return out;
}

std::uint64_t KeyValueConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size() || v->empty()) {
        throw ConfigError(where(key) + ": expected a non-negative integer, got '" + *v + "'");
    }
    return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(where(key) + ": expected true or false, got '" + *v + "'");
}

std::vector<std::uint64_t> KeyValueConfig::get_uints(const std::string& key,
                                                     const std::vector<std::uint64_t>& fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    std::vector<std::uint64_t> out;
    for (auto item : split_list(*v)) {
        std::uint64_t x = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
        if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
            throw ConfigError(where(key) + ": bad list element '" + std::string(item) + "'");
        }
        out.push_back(x);
    }
    return out;
}

std::vector<std::size_t> KeyValueConfig::get_sizes(const std::string& key,
                                                   const std::vector<std::size_t>& fallback) const {
    std::vector<std::uint64_t> fb(fallback.begin(), fallback.end());
    const auto raw = get_uints(key, fb);
    return {raw.begin(), raw.end()};
}

void KeyValueConfig::reject_unused() const {
    for (const auto& [key, value] : values_) {
        if (!used_.count(key)) throw ConfigError(where(key) + ": unknown key");
    }
}

std::string_view dataset_kind_name(DatasetConfig::Kind kind) {
    switch (kind) {
        case DatasetConfig::Kind::ring:
            return "ring";
        case DatasetConfig::Kind::grid:
            return "grid";
        case DatasetConfig::Kind::idx:
            return "idx";
    }
    return "?";
}

namespace {

DatasetConfig::Kind parse_dataset_kind(const std::string& s) {
    if (s == "ring") return DatasetConfig::Kind::ring;
    if (s == "grid") return DatasetConfig::Kind::grid;
    if (s == "idx") return DatasetConfig::Kind::idx;
    throw ConfigError("dataset.kind: unknown dataset '" + s + "' (ring, grid or idx)");
}

template <class F>
auto with_key(const char* key, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_kv(const KeyValueConfig& kv) {
    ExperimentConfig c;
    c.name = kv.get_string("name", c.name);
    c.seed = kv.get_uint("seed", c.seed);
    c.out_dir = kv.get_string("output.dir", c.out_dir.string());

    auto& d = c.dataset;
    d.kind = parse_dataset_kind(kv.get_string("dataset.kind", std::string(dataset_kind_name(d.kind))));
    d.modes = kv.get_uint("dataset.modes", d.modes);
    d.radius = kv.get_double("dataset.radius", d.radius);
    d.side = kv.get_uint("dataset.side", d.side);
    d.spacing = kv.get_double("dataset.spacing", d.spacing);
    d.std = kv.get_double("dataset.std", d.std);
    d.n = kv.get_uint("dataset.n", d.n);
    d.path = kv.get_string("dataset.path", d.path.string());

    auto& a = c.arch;
    a.latent_dim = kv.get_uint("model.latent_dim", a.latent_dim);
    a.data_dim = kv.get_uint("model.data_dim", a.data_dim);
    a.g_hidden = kv.get_sizes("model.g_hidden", a.g_hidden);
    a.d_hidden = kv.get_sizes("model.d_hidden", a.d_hidden);
    a.g_activation = with_key("model.g_activation", [&] {
        return ActivationSpec::parse(kv.get_string("model.g_activation", a.g_activation.name()));
    });
    a.d_activation = with_key("model.d_activation", [&] {
        return ActivationSpec::parse(kv.get_string("model.d_activation", a.d_activation.name()));
    });

    auto& t = c.train;
    c.epochs = kv.get_uint("train.epochs", c.epochs);
    t.max_steps = kv.get_uint("train.max_steps", t.max_steps);
    t.batch_size = kv.get_uint("train.batch_size", t.batch_size);
    t.n_critic = kv.get_uint("train.n_critic", t.n_critic);
    t.g_loss = parse_generator_loss(kv.get_string("train.g_loss", std::string(generator_loss_name(t.g_loss))));
    c.checkpoint_stride = kv.get_uint("train.checkpoint_stride", c.checkpoint_stride);

    t.optimizer = parse_optimizer(kv.get_string("optim.kind", std::string(optimizer_name(t.optimizer))));
    t.g_adam.lr = kv.get_double("optim.g_lr", kv.get_double("optim.lr", t.g_adam.lr));
    t.d_adam.lr = kv.get_double("optim.d_lr", kv.get_double("optim.lr", t.d_adam.lr));
    for (AdamHyper* h : {&t.g_adam, &t.d_adam}) {
        h->beta1 = kv.get_double("optim.beta1", h->beta1);
        h->beta2 = kv.get_double("optim.beta2", h->beta2);
        h->eps = kv.get_double("optim.eps", h->eps);
    }

    auto& n = t.nudge;
    n.k = kv.get_uint("nudge.k", n.k);
    n.recompute_stride = kv.get_uint("nudge.stride", n.recompute_stride);
    n.lanczos_steps = kv.get_uint("nudge.lanczos_steps", n.lanczos_steps);
    n.eigen_mode = with_key("nudge.mode", [&] {
        return parse_eigen_mode(kv.get_string("nudge.mode", std::string(eigen_mode_name(n.eigen_mode))));
    });
    n.apply_to = parse_nudge_target(kv.get_string("nudge.apply_to", std::string(nudge_target_name(n.apply_to))));
    n.tol = kv.get_double("nudge.tol", n.tol);

    auto& m = c.measure;
    m.stride = kv.get_uint("measure.stride", m.stride);
    m.lanczos_steps = kv.get_uint("measure.lanczos_steps", m.lanczos_steps);
    m.batch_size = kv.get_uint("measure.batch_size", m.batch_size);
    m.samples = kv.get_uint("measure.samples", m.samples);
    m.threshold_sigmas = kv.get_double("measure.threshold_sigmas", m.threshold_sigmas);

    auto& s = c.spectrum;
    s.steps = kv.get_uint("spectrum.steps", s.steps);
    s.probes = kv.get_uint("spectrum.probes", s.probes);
    s.grid_points = kv.get_uint("spectrum.grid_points", s.grid_points);
    s.sigma = kv.get_double("spectrum.sigma", s.sigma);
    s.sigma_fraction = kv.get_double("spectrum.sigma_fraction", s.sigma_fraction);
    s.batch_size = kv.get_uint("spectrum.batch_size", s.batch_size);

    auto& l = c.landscape;
    l.half_width = kv.get_double("landscape.half_width", l.half_width);
    l.resolution = kv.get_uint("landscape.resolution", l.resolution);
    l.log_scale = kv.get_bool("landscape.log_scale", l.log_scale);
    l.lanczos_steps = kv.get_uint("landscape.lanczos_steps", l.lanczos_steps);
    l.batch_size = kv.get_uint("landscape.batch_size", l.batch_size);

    c.compare_seeds = kv.get_uints("compare.seeds", c.compare_seeds);

    kv.reject_unused();
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    return from_kv(KeyValueConfig::load(path));
}

void ExperimentConfig::validate() const {
    if (name.empty() || name.find_first_of("/\\ ") != std::string::npos) {
        throw ConfigError("name: must be non-empty without spaces or slashes");
    }
    switch (dataset.kind) {
        case DatasetConfig::Kind::ring:
            if (dataset.modes < 2) throw ConfigError("dataset.modes: a ring needs at least 2 modes");
            if (!(dataset.radius > 0.0)) throw ConfigError("dataset.radius: must be positive");
            if (arch.data_dim != 2) throw ConfigError("model.data_dim: ring data is 2-dimensional");
            break;
        case DatasetConfig::Kind::grid:
            if (dataset.side < 1) throw ConfigError("dataset.side: must be >= 1");
            if (!(dataset.spacing > 0.0)) throw ConfigError("dataset.spacing: must be positive");
            if (arch.data_dim != 2) throw ConfigError("model.data_dim: grid data is 2-dimensional");
            break;
        case DatasetConfig::Kind::idx:
            if (dataset.path.empty()) throw ConfigError("dataset.path: required for idx datasets");
            if (!std::filesystem::exists(dataset.path)) {
                throw ConfigError("dataset.path: file does not exist: " + dataset.path.string());
            }
            break;
    }
    if (dataset.kind != DatasetConfig::Kind::idx) {
        if (!(dataset.std > 0.0)) throw ConfigError("dataset.std: must be positive");
        if (dataset.n == 0) throw ConfigError("dataset.n: must be positive");
    }
    if (arch.latent_dim == 0 || arch.data_dim == 0) throw ConfigError("model: dimensions must be positive");
    if (arch.g_hidden.empty() || arch.d_hidden.empty()) throw ConfigError("model: need at least one hidden layer");
    try {
        train.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    if (checkpoint_stride == 0) throw ConfigError("train.checkpoint_stride: must be >= 1");
    if (measure.stride == 0) throw ConfigError("measure.stride: must be >= 1");
    if (measure.lanczos_steps == 0) throw ConfigError("measure.lanczos_steps: must be >= 1");
    if (measure.batch_size == 0 || measure.samples == 0) throw ConfigError("measure: sizes must be positive");
    if (!(measure.threshold_sigmas > 0.0)) throw ConfigError("measure.threshold_sigmas: must be positive");
    if (spectrum.steps == 0 || spectrum.probes == 0) throw ConfigError("spectrum: steps and probes must be >= 1");
    if (spectrum.grid_points < 2) throw ConfigError("spectrum.grid_points: must be >= 2");
    if (spectrum.sigma < 0.0 || !(spectrum.sigma_fraction > 0.0)) throw ConfigError("spectrum: bad bandwidth");
    if (spectrum.batch_size == 0) throw ConfigError("spectrum.batch_size: must be positive");
    if (!(landscape.half_width > 0.0)) throw ConfigError("landscape.half_width: must be positive");
    if (landscape.resolution < 2) throw ConfigError("landscape.resolution: must be >= 2");
    if (landscape.lanczos_steps < 2) throw ConfigError("landscape.lanczos_steps: must be >= 2");
    if (landscape.batch_size == 0) throw ConfigError("landscape.batch_size: must be positive");
    if (compare_seeds.empty()) throw ConfigError("compare.seeds: need at least one seed");
}

std::string ExperimentConfig::resolved() const {
    std::string out;
    auto put = [&out](std::string_view key, const auto& value) { out += fmt::format("{} = {}\n", key, value); };
    auto list = [](const auto& v) { return fmt::format("{}", fmt::join(v, ",")); };
    put("name", name);
    put("seed", seed);
    put("output.dir", out_dir.generic_string());
    put("dataset.kind", dataset_kind_name(dataset.kind));
    put("dataset.modes", dataset.modes);
    put("dataset.radius", dataset.radius);
    put("dataset.side", dataset.side);
    put("dataset.spacing", dataset.spacing);
    put("dataset.std", dataset.std);
    put("dataset.n", dataset.n);
    if (!dataset.path.empty()) put("dataset.path", dataset.path.generic_string());
    put("model.latent_dim", arch.latent_dim);
    put("model.data_dim", arch.data_dim);
    put("model.g_hidden", list(arch.g_hidden));
    put("model.d_hidden", list(arch.d_hidden));
    put("model.g_activation", arch.g_activation.name());
    put("model.d_activation", arch.d_activation.name());
    put("train.epochs", epochs);
    put("train.max_steps", train.max_steps);
    put("train.batch_size", train.batch_size);
    put("train.n_critic", train.n_critic);
    put("train.g_loss", generator_loss_name(train.g_loss));
    put("train.checkpoint_stride", checkpoint_stride);
    put("optim.kind", optimizer_name(train.optimizer));
    put("optim.g_lr", train.g_adam.lr);
    put("optim.d_lr", train.d_adam.lr);
    put("optim.beta1", train.g_adam.beta1);
    put("optim.beta2", train.g_adam.beta2);
    put("optim.eps", train.g_adam.eps);
    put("nudge.k", train.nudge.k);
    put("nudge.stride", train.nudge.recompute_stride);
    put("nudge.lanczos_steps", train.nudge.lanczos_steps);
    put("nudge.mode", eigen_mode_name(train.nudge.eigen_mode));
    put("nudge.apply_to", nudge_target_name(train.nudge.apply_to));
    put("nudge.tol", train.nudge.tol);
    put("measure.stride", measure.stride);
    put("measure.lanczos_steps", measure.lanczos_steps);
    put("measure.batch_size", measure.batch_size);
    put("measure.samples", measure.samples);
    put("measure.threshold_sigmas", measure.threshold_sigmas);
    put("spectrum.steps", spectrum.steps);
    put("spectrum.probes", spectrum.probes);
    put("spectrum.grid_points", spectrum.grid_points);
    put("spectrum.sigma", spectrum.sigma);
    put("spectrum.sigma_fraction", spectrum.sigma_fraction);
    put("spectrum.batch_size", spectrum.batch_size);
    put("landscape.half_width", landscape.half_width);
    put("landscape.resolution", landscape.resolution);
    put("landscape.log_scale", landscape.log_scale ? "true" : "false");
    put("landscape.lanczos_steps", landscape.lanczos_steps);
    put("landscape.batch_size", landscape.batch_size);
    put("compare.seeds", list(compare_seeds));
    return out;
}

}  // namespace hessgan
