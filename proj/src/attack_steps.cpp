#include "socsim/attack_steps.hpp"

#include <stdexcept>

namespace socsim {

namespace {

constexpr std::array<std::string_view, kStepCount> kStepNames = {
    "infect_email_exe",      "infect_flashdrive_exe", "c2_change_wallpaper", "c2_download_malware",
    "c2_exfiltration",       "c2_mimikatz",           "c2_take_screenshot",  "misc_download_malware",
    "misc_execute_malware",  "misc_exfiltration",     "misc_set_autostart",  "misc_sqlmap",
};

constexpr std::array<std::string_view, kTacticCount> kTacticNames = {
    "Reconnaissance",   "Resource Development", "Initial Access",      "Execution",
    "Persistence",      "Privilege Escalation", "Defense Evasion",     "Credential Access",
    "Discovery",        "Lateral Movement",     "Collection",          "Command and Control",
    "Exfiltration",     "Impact",
};

// Coverage rows, one character per tactic in matrix order.
constexpr std::array<std::string_view, kStepCount> kCoverage = {
    "10110000000000", // infect_email_exe
    "00010000000000", // infect_flashdrive_exe
    "00000000000001", // c2_change_wallpaper
    "00000000000100", // c2_download_malware
    "00000000011110", // c2_exfiltration
    "00000111000000", // c2_mimikatz
    "00000000001110", // c2_take_screenshot
    "00010000000000", // misc_download_malware
    "00010000000000", // misc_execute_malware
    "00000000100100", // misc_exfiltration
    "00001000000000", // misc_set_autostart
    "11100001000000", // misc_sqlmap
};

} // namespace

std::string_view to_string(StepName step)
{
    return kStepNames.at(index_of(step));
}

std::string_view to_string(StepFamily f)
{
    switch (f) {
    case StepFamily::Infect: return "Infect";
    case StepFamily::C2: return "C2";
    case StepFamily::Misc: return "Misc";
    }
    throw std::logic_error("bad StepFamily");
}

std::string_view to_string(Tactic tactic)
{
    return kTacticNames.at(static_cast<std::size_t>(tactic));
}

std::optional<StepName> parse_step_name(std::string_view text)
{
    for (std::size_t i = 0; i < kStepCount; ++i) {
        if (kStepNames[i] == text) {
            return static_cast<StepName>(i);
        }
    }
    return std::nullopt;
}

StepFamily family(StepName step)
{
    const auto name = to_string(step);
    if (name.starts_with("infect_")) return StepFamily::Infect;
    if (name.starts_with("c2_")) return StepFamily::C2;
    return StepFamily::Misc;
}

TacticSet tactics(StepName step)
{
    TacticSet set;
    const auto row = kCoverage.at(index_of(step));
    for (std::size_t t = 0; t < kTacticCount; ++t) {
        set[t] = row[t] == '1';
    }
    return set;
}

} // namespace socsim
