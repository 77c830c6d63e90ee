#include "hessgan/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "hessgan/errors.hpp"

namespace hessgan {

using nlohmann::ordered_json;

void write_density_csv(const SpectralDensity& density, std::ostream& out) {
    out << "t,density\n";
    for (std::size_t i = 0; i < density.grid.size(); ++i) {
        out << fmt::format("{},{}\n", density.grid[i], density.density[i]);
    }
}

std::string density_to_json(const SpectralDensity& density) {
    ordered_json j;
    j["grid"] = density.grid;
    j["density"] = density.density;
    j["sigma"] = density.sigma;
    j["m"] = density.lanczos_steps;
    j["k"] = density.num_probes;
    j["seed"] = density.seed;
    return j.dump();
}

namespace {

ordered_json adam_to_json(const AdamState& s) {
    return {{"t", s.t},           {"lr", s.hyper.lr},   {"beta1", s.hyper.beta1},
            {"beta2", s.hyper.beta2}, {"eps", s.hyper.eps}, {"m", s.m},
            {"v", s.v}};
}

AdamState adam_from_json(const ordered_json& j) {
    AdamState s;
    s.t = j.at("t").get<std::uint64_t>();
    s.hyper.lr = j.at("lr").get<double>();
    s.hyper.beta1 = j.at("beta1").get<double>();
    s.hyper.beta2 = j.at("beta2").get<double>();
    s.hyper.eps = j.at("eps").get<double>();
    s.m = j.at("m").get<std::vector<double>>();
    s.v = j.at("v").get<std::vector<double>>();
    s.validate();
    return s;
}

ordered_json cache_to_json(const NudgeCache& c) {
    ordered_json pairs = ordered_json::array();
    for (const auto& p : c.pairs) {
        pairs.push_back({{"value", p.value}, {"residual", p.residual}, {"converged", p.converged}, {"vector", p.vector}});
    }
    return {{"valid", c.valid}, {"refreshed_at", c.refreshed_at}, {"pairs", pairs}};
}

NudgeCache cache_from_json(const ordered_json& j) {
    NudgeCache c;
    c.valid = j.at("valid").get<bool>();
    c.refreshed_at = j.at("refreshed_at").get<std::uint64_t>();
    for (const auto& p : j.at("pairs")) {
        EigenPair e;
        e.value = p.at("value").get<double>();
        e.residual = p.at("residual").get<double>();
        e.converged = p.at("converged").get<bool>();
        e.vector = p.at("vector").get<std::vector<double>>();
        c.pairs.push_back(std::move(e));
    }
    return c;
}

}  // namespace

std::string checkpoint_to_json(const GanArchitecture& arch, const TrainState& state) {
    ordered_json j;
    j["format"] = "hessgan-checkpoint";
    j["version"] = kCheckpointVersion;
    j["architecture"] = {{"latent_dim", arch.latent_dim},
                         {"data_dim", arch.data_dim},
                         {"g_hidden", arch.g_hidden},
                         {"d_hidden", arch.d_hidden},
                         {"g_activation", arch.g_activation.name()},
                         {"d_activation", arch.d_activation.name()}};
    j["step"] = state.step;
    j["epoch"] = state.epoch;
    j["rng"] = {{"master_seed", state.seeds.master}, {"draws", state.draws}};
    j["theta"] = state.model.theta;
    j["phi"] = state.model.phi;
    j["g_opt"] = adam_to_json(state.g_opt);
    j["d_opt"] = adam_to_json(state.d_opt);
    j["g_nudge_cache"] = cache_to_json(state.g_cache);
    j["d_nudge_cache"] = cache_to_json(state.d_cache);
    return j.dump();
}

Checkpoint checkpoint_from_json(std::string_view text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("checkpoint: ") + e.what(), e.byte);
    }
    try {
        if (j.at("format").get<std::string>() != "hessgan-checkpoint") {
            throw ConfigError("checkpoint: not a hessgan checkpoint");
        }
        const int version = j.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw ConfigError("checkpoint: unsupported version " + std::to_string(version));
        }
        Checkpoint c;
        const auto& a = j.at("architecture");
        c.arch.latent_dim = a.at("latent_dim").get<std::size_t>();
        c.arch.data_dim = a.at("data_dim").get<std::size_t>();
        c.arch.g_hidden = a.at("g_hidden").get<std::vector<std::size_t>>();
        c.arch.d_hidden = a.at("d_hidden").get<std::vector<std::size_t>>();
        c.arch.g_activation = ActivationSpec::parse(a.at("g_activation").get<std::string>());
        c.arch.d_activation = ActivationSpec::parse(a.at("d_activation").get<std::string>());

        auto& s = c.state;
        s.model = GanModel{c.arch.generator(), c.arch.discriminator(), {}, {}};
        s.model.theta = j.at("theta").get<std::vector<double>>();
        s.model.phi = j.at("phi").get<std::vector<double>>();
        s.model.validate();
        s.step = j.at("step").get<std::uint64_t>();
        s.epoch = j.at("epoch").get<std::uint64_t>();
        s.seeds.master = j.at("rng").at("master_seed").get<std::uint64_t>();
        s.draws = j.at("rng").at("draws").get<std::uint64_t>();
        s.g_opt = adam_from_json(j.at("g_opt"));
        s.d_opt = adam_from_json(j.at("d_opt"));
        s.g_cache = cache_from_json(j.at("g_nudge_cache"));
        s.d_cache = cache_from_json(j.at("d_nudge_cache"));
        if (s.g_opt.m.size() != s.model.theta.size() || s.d_opt.m.size() != s.model.phi.size()) {
            throw ConfigError("checkpoint: optimizer state does not match the parameters");
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const GanArchitecture& arch, const TrainState& state) {
    write_text_file(path, checkpoint_to_json(arch, state));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_text_file(path)); }

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_manifest(const std::filesystem::path& dir, bool complete, std::string_view note) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() != "MANIFEST") {
            files.push_back(fs::relative(entry.path(), dir));
        }
    }
    std::sort(files.begin(), files.end());
    std::string text = fmt::format("tool: hessgan {}\nstatus: {}\n", HESSGAN_VERSION,
                                   complete ? "complete" : "incomplete");
    if (!note.empty()) text += fmt::format("note: {}\n", note);
    text += "hash: fnv1a64\n";
    for (const auto& f : files) {
        text += fmt::format("{:016x}  {}\n", fnv1a64(read_text_file(dir / f)), f.generic_string());
    }
    write_text_file(dir / "MANIFEST", text);
}

}  // namespace hessgan
