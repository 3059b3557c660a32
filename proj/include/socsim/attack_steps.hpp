#pragma once

#include <array>
#include <bitset>
#include <optional>
#include <string>
#include <string_view>

namespace socsim {

/// The built-in attack modules.
enum class StepName {
    InfectEmailExe,
    InfectFlashdriveExe,
    C2ChangeWallpaper,
    C2DownloadMalware,
    C2Exfiltration,
    C2Mimikatz,
    C2TakeScreenshot,
    MiscDownloadMalware,
    MiscExecuteMalware,
    MiscExfiltration,
    MiscSetAutostart,
    MiscSqlmap,
};

inline constexpr std::size_t kStepCount = 12;

inline constexpr std::array kAllSteps = {
    StepName::InfectEmailExe,      StepName::InfectFlashdriveExe, StepName::C2ChangeWallpaper,
    StepName::C2DownloadMalware,   StepName::C2Exfiltration,      StepName::C2Mimikatz,
    StepName::C2TakeScreenshot,    StepName::MiscDownloadMalware, StepName::MiscExecuteMalware,
    StepName::MiscExfiltration,    StepName::MiscSetAutostart,    StepName::MiscSqlmap,
};

enum class StepFamily { Infect, C2, Misc };

/// ATT&CK Enterprise tactics, in matrix order.
enum class Tactic {
    Reconnaissance,
    ResourceDevelopment,
    InitialAccess,
    Execution,
    Persistence,
    PrivilegeEscalation,
    DefenseEvasion,
    CredentialAccess,
    Discovery,
    LateralMovement,
    Collection,
    CommandAndControl,
    Exfiltration,
    Impact,
};

inline constexpr std::size_t kTacticCount = 14;

using TacticSet = std::bitset<kTacticCount>;

std::string_view to_string(StepName step);
std::string_view to_string(StepFamily family);
std::string_view to_string(Tactic tactic);
std::optional<StepName> parse_step_name(std::string_view text);

/// Derived from the identifier prefix.
StepFamily family(StepName step);

/// Tactic coverage of a built-in step.
TacticSet tactics(StepName step);

constexpr std::size_t index_of(StepName step) { return static_cast<std::size_t>(step); }

} // namespace socsim
