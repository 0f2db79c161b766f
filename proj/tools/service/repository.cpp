#include "repository.hpp"

#include "netpe/codec.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

namespace netpe::service {

namespace fs = std::filesystem;

namespace {

constexpr ArtifactKind kAllKinds[] = {ArtifactKind::Scenario, ArtifactKind::Sweep, ArtifactKind::Fit,
                                      ArtifactKind::Trace};

std::atomic<unsigned> g_tmp_counter{0};

} // namespace

std::string_view kind_segment(ArtifactKind kind) {
    switch (kind) {
    case ArtifactKind::Scenario:
        return "scenarios";
    case ArtifactKind::Sweep:
        return "sweeps";
    case ArtifactKind::Fit:
        return "fits";
    case ArtifactKind::Trace:
        return "traces";
    }
    return "";
}

std::optional<ArtifactKind> kind_from_segment(std::string_view segment) {
    for (auto k : kAllKinds) {
        if (kind_segment(k) == segment) {
            return k;
        }
    }
    return std::nullopt;
}

std::optional<ArtifactKind> kind_from_name(std::string_view name) {
    for (auto k : kAllKinds) {
        const auto plural = kind_segment(k);
        if (plural.substr(0, plural.size() - 1) == name) {
            return k;
        }
    }
    return std::nullopt;
}

bool is_digest(std::string_view s) {
    return s.size() == 64 &&
           std::all_of(s.begin(), s.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

void atomic_write(const fs::path& path, std::string_view bytes) {
    std::ostringstream tmp_name;
    tmp_name << ".tmp-" << path.filename().string() << "-" << std::this_thread::get_id() << "-"
             << g_tmp_counter++;
    const fs::path tmp = path.parent_path() / tmp_name.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("io", "cannot write " + tmp.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            throw Error("io", "short write to " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("io", "cannot rename into " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("io", "cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Repository::Repository(fs::path root) : root_(std::move(root)) {
    for (auto k : kAllKinds) {
        fs::create_directories(root_ / "objects" / kind_segment(k));
    }
    fs::create_directories(root_ / "names");
}

fs::path Repository::object_path(ArtifactKind kind, std::string_view digest) const {
    return root_ / "objects" / kind_segment(kind) / std::string(digest);
}

fs::path Repository::names_path(ArtifactKind kind) const {
    return root_ / "names" / (std::string(kind_segment(kind)) + ".json");
}

std::string Repository::put(ArtifactKind kind, std::string_view bytes) {
    const std::string digest = codec::sha256_hex(bytes);
    const fs::path path = object_path(kind, digest);
    if (!fs::exists(path)) {
        atomic_write(path, bytes);
    }
    return digest;
}

std::optional<std::string> Repository::get(ArtifactKind kind, std::string_view digest) const {
    if (!is_digest(digest)) {
        return std::nullopt;
    }
    const fs::path path = object_path(kind, digest);
    if (!fs::exists(path)) {
        return std::nullopt;
    }
    std::string bytes = read_file(path);
    if (codec::sha256_hex(bytes) != digest) {
        throw IntegrityError("stored " + std::string(kind_segment(kind)) + " object " +
                             std::string(digest) + " does not match its digest");
    }
    return bytes;
}

bool Repository::contains(ArtifactKind kind, std::string_view digest) const {
    return is_digest(digest) && fs::exists(object_path(kind, digest));
}

std::vector<std::string> Repository::list(ArtifactKind kind) const {
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(root_ / "objects" / kind_segment(kind))) {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && is_digest(name)) {
            out.push_back(name);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::map<std::string, std::string> Repository::names(ArtifactKind kind) const {
    std::lock_guard lock(names_mu_);
    return read_names(kind);
}

std::map<std::string, std::string> Repository::read_names(ArtifactKind kind) const {
    const fs::path path = names_path(kind);
    std::map<std::string, std::string> out;
    if (!fs::exists(path)) {
        return out;
    }
    const auto j = codec::parse_json(read_file(path));
    for (auto it = j.begin(); it != j.end(); ++it) {
        out[it.key()] = it.value().get<std::string>();
    }
    return out;
}

void Repository::set_name(ArtifactKind kind, const std::string& name, const std::string& digest) {
    if (name.empty()) {
        throw ConfigError("name", "must be nonempty");
    }
    if (!contains(kind, digest)) {
        throw Error("not_found", "no " + std::string(kind_segment(kind)) + " object " + digest);
    }
    std::lock_guard lock(names_mu_);
    auto current = read_names(kind);
    current[name] = digest;
    atomic_write(names_path(kind), codec::json(current).dump(2) + "\n");
}

std::optional<std::string> Repository::resolve(ArtifactKind kind, const std::string& name) const {
    const auto all = names(kind);
    const auto it = all.find(name);
    if (it == all.end()) {
        return std::nullopt;
    }
    return it->second;
}

} // namespace netpe::service
