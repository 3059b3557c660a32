#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "socsim/kernel.hpp"
#include "socsim/rng.hpp"
#include "socsim/scenario.hpp"

namespace socsim {

enum class UserModule { Web, Email, File };
enum class FileActionKind { Create, Delete, Append, Read, Move, Copy };

inline constexpr std::array kAllFileActions = {FileActionKind::Create, FileActionKind::Delete,
                                               FileActionKind::Append, FileActionKind::Read,
                                               FileActionKind::Move,   FileActionKind::Copy};

std::string to_string(UserModule m);
std::string to_string(FileActionKind a);

struct Mail {
    std::uint64_t id = 0;
    std::string from;
    std::string to;
    std::string subject;
    bool has_link = false;
    bool has_attachment = false;
    bool malicious = false;
    bool operator==(const Mail&) const = default;
};

enum class UserEventKind {
    Timer,          ///< next wake-up of the owning FSM
    SessionStart,
    SessionEnd,
    PageOpen,
    LinkFollow,
    MailRead,
    AttachmentOpen,
    LinkOpen,
    MailSent,
    ExternalReply,  ///< responder's reply, delivered to the sender at `at`
    FileAction,
};

std::string to_string(UserEventKind k);

struct UserEvent {
    SimTime at = 0;
    std::string client;
    UserModule module = UserModule::Web;
    UserEventKind kind = UserEventKind::Timer;
    std::map<std::string, std::string> detail;
    std::optional<Mail> mail;
    bool noop = false; ///< file action on a missing file

    bool operator==(const UserEvent&) const = default;
};

/// One seeded state machine per (client, module). The stream is derived from
/// (root seed, ["client", client_id, module]) so clients never share draws.
struct UserFsm {
    std::string client_id;
    UserModule module = UserModule::Web;
    std::string state; ///< "idle" / "browsing" (web), "polling" (email), "iterating" (file)
    RngStream stream;

    std::vector<Mail> inbox;       // email
    std::uint64_t next_mail_id = 1;
    std::set<std::string> files;   // file
};

UserFsm make_user_fsm(std::uint64_t root_seed, const std::string& client_id, UserModule module);

/// Whole seconds, at least 1. Fixed dwells consume no draws.
SimTime draw_dwell(RngStream& stream, const Dwell& dwell);

/// Idle: draws an inactivity dwell and emits only the wake-up timer.
/// Browsing: plays one full session of routines and emits its events plus a
/// timer at session end.
std::vector<UserEvent> step_web_module(UserFsm& fsm, SimTime now, const WebParams& params);

/// Opens links and attachments of every mail in the inbox and clears it.
/// This is the hook phishing deliveries use.
std::vector<UserEvent> read_inbox(UserFsm& fsm, SimTime now);

/// Poll: read_inbox, then maybe compose a mail to a peer client or the external
/// responder, then schedule the next poll.
std::vector<UserEvent> step_email_module(UserFsm& fsm, SimTime now, const EmailParams& params,
                                         std::span<const std::string> peer_clients);

/// One file action on a drawn filename plus the next-iteration timer.
std::vector<UserEvent> step_file_module(UserFsm& fsm, SimTime now, const FileParams& params);

} // namespace socsim
