#pragma once

/// @file repository.hpp
/// @brief Content-addressed artifact store with a name index.
///
/// Layout under the root:
///
///     objects/<kind>/<sha256>   artifact bytes, immutable
///     names/<kind>.json         {"name": "<sha256>", ...}
///
/// Every write goes to a temporary file in the destination directory and is
/// renamed into place, so readers never observe partial files.

#include "netpe/error.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace netpe::service {

enum class ArtifactKind { Scenario, Sweep, Fit, Trace };

/// Plural directory / URL segment: "scenarios", "sweeps", "fits", "traces".
std::string_view kind_segment(ArtifactKind kind);
std::optional<ArtifactKind> kind_from_segment(std::string_view segment);
/// Singular form accepted on the command line: "scenario", "sweep", ...
std::optional<ArtifactKind> kind_from_name(std::string_view name);

/// Stored bytes no longer hash to their digest.
class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& message) : Error("integrity", message) {}
};

/// True for 64 lowercase hex characters.
bool is_digest(std::string_view s);

class Repository {
public:
    /// Creates the directory layout if missing.
    explicit Repository(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }

    /// Stores `bytes`; returns its digest. Storing identical bytes twice is a
    /// no-op.
    std::string put(ArtifactKind kind, std::string_view bytes);

    /// Reads and verifies an artifact. nullopt when absent.
    /// @throws IntegrityError on digest mismatch.
    std::optional<std::string> get(ArtifactKind kind, std::string_view digest) const;

    bool contains(ArtifactKind kind, std::string_view digest) const;

    /// Digests of one kind, sorted.
    std::vector<std::string> list(ArtifactKind kind) const;

    /// Points `name` at an existing artifact, replacing any previous target.
    void set_name(ArtifactKind kind, const std::string& name, const std::string& digest);
    std::optional<std::string> resolve(ArtifactKind kind, const std::string& name) const;
    std::map<std::string, std::string> names(ArtifactKind kind) const;

private:
    std::filesystem::path object_path(ArtifactKind kind, std::string_view digest) const;
    std::filesystem::path names_path(ArtifactKind kind) const;
    std::map<std::string, std::string> read_names(ArtifactKind kind) const;

    std::filesystem::path root_;
    mutable std::mutex names_mu_;
};

/// Writes `bytes` to `path` through a sibling temporary file and rename.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

} // namespace netpe::service
