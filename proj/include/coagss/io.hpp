#pragma once

#include <filesystem>
#include <string>

#include "coagss/dynamics.hpp"
#include "coagss/moments.hpp"
#include "coagss/profile.hpp"
#include "coagss/solver.hpp"
#include "coagss/verify.hpp"
#include <nlohmann/json.hpp>

namespace coagss {

/// Problem parameters stored next to a profile.
struct ProfileMeta {
  double rho = 0.5;
  double lambda = 0.0;
  std::string kernel;  // family name, informational
};

struct StoredProfile {
  Profile profile;
  ProfileMeta meta;
};

/// Sidecar path: the CSV path with its extension replaced by ".json".
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Writes "x,f" rows in shortest round-trip notation plus the JSON sidecar
/// (zero_exponent, tail_exponent, tail terms, rho, lambda, kernel).
void write_profile(const std::filesystem::path& csv, const Profile& p, const ProfileMeta& meta);

/// Reads a profile written by write_profile. The grid is rebuilt from its end
/// points and node count and every node must match the file bit for bit.
/// Throws ConfigError on malformed input.
StoredProfile read_profile(const std::filesystem::path& csv);

nlohmann::json to_json(const SolveReport& r);
nlohmann::json to_json(const InequalityCheck& c);
nlohmann::json to_json(const PowerFit& f);
nlohmann::json to_json(const VerifyReport& r);
nlohmann::json to_json(const LaplaceProbe& p);

/// JSON number, or null for NaN and infinities.
nlohmann::json number(double v);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace coagss
