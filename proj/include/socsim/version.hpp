#pragma once

namespace socsim {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kManifestSchema = "socsim.manifest/1";

} // namespace socsim
