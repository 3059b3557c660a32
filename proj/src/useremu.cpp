#include "socsim/useremu.hpp"

#include <cmath>
#include <stdexcept>

namespace socsim {

std::string to_string(UserModule m)
{
    switch (m) {
    case UserModule::Web: return "web";
    case UserModule::Email: return "email";
    case UserModule::File: return "file";
    }
    throw std::logic_error("bad UserModule");
}

std::string to_string(FileActionKind a)
{
    switch (a) {
    case FileActionKind::Create: return "create";
    case FileActionKind::Delete: return "delete";
    case FileActionKind::Append: return "append";
    case FileActionKind::Read: return "read";
    case FileActionKind::Move: return "move";
    case FileActionKind::Copy: return "copy";
    }
    throw std::logic_error("bad FileActionKind");
}

std::string to_string(UserEventKind k)
{
    switch (k) {
    case UserEventKind::Timer: return "timer";
    case UserEventKind::SessionStart: return "session-start";
    case UserEventKind::SessionEnd: return "session-end";
    case UserEventKind::PageOpen: return "page-open";
    case UserEventKind::LinkFollow: return "link-follow";
    case UserEventKind::MailRead: return "mail-read";
    case UserEventKind::AttachmentOpen: return "attachment-open";
    case UserEventKind::LinkOpen: return "link-open";
    case UserEventKind::MailSent: return "mail-sent";
    case UserEventKind::ExternalReply: return "external-reply";
    case UserEventKind::FileAction: return "file-action";
    }
    throw std::logic_error("bad UserEventKind");
}

UserFsm make_user_fsm(std::uint64_t root_seed, const std::string& client_id, UserModule module)
{
    UserFsm fsm{client_id, module, {}, derive_stream(root_seed, {"client", client_id, to_string(module)}), {}, 1, {}};
    switch (module) {
    case UserModule::Web: fsm.state = "idle"; break;
    case UserModule::Email: fsm.state = "polling"; break;
    case UserModule::File: fsm.state = "iterating"; break;
    }
    return fsm;
}

SimTime draw_dwell(RngStream& stream, const Dwell& dwell)
{
    double seconds = dwell.mean_seconds;
    if (dwell.kind == DwellKind::Exponential) {
        seconds = stream.exponential(dwell.mean_seconds);
    }
    return std::max<SimTime>(1, static_cast<SimTime>(std::ceil(seconds)));
}

namespace {

UserEvent make_event(const UserFsm& fsm, SimTime at, UserEventKind kind)
{
    UserEvent e;
    e.at = at;
    e.client = fsm.client_id;
    e.module = fsm.module;
    e.kind = kind;
    return e;
}

template <class T>
const T& pick(RngStream& s, const std::vector<T>& items)
{
    return items.at(s.uniform_index(items.size()));
}

} // namespace

std::vector<UserEvent> step_web_module(UserFsm& fsm, SimTime now, const WebParams& params)
{
    if (fsm.module != UserModule::Web) {
        throw std::invalid_argument("step_web_module: FSM is not a web module");
    }
    auto& s = fsm.stream;
    std::vector<UserEvent> out;

    if (fsm.state == "idle") {
        const SimTime dwell = draw_dwell(s, params.inactivity);
        out.push_back(make_event(fsm, now + dwell, UserEventKind::Timer));
        fsm.state = "browsing";
        return out;
    }

    const SimTime end = now + draw_dwell(s, params.session);
    out.push_back(make_event(fsm, now, UserEventKind::SessionStart));
    const double follow_p = 1.0 / (1.0 + params.mean_follows);
    SimTime t = now;
    while (t < end) {
        auto open = make_event(fsm, t, UserEventKind::PageOpen);
        if (s.bernoulli(params.search_probability)) {
            open.detail["entry"] = "search";
            open.detail["term"] = pick(s, params.search_terms);
        } else {
            open.detail["entry"] = "direct";
        }
        const std::string site = pick(s, params.sites);
        open.detail["site"] = site;
        out.push_back(std::move(open));

        const auto follows = s.geometric(follow_p);
        for (std::uint64_t k = 0; k < follows; ++k) {
            t += draw_dwell(s, params.click_delay);
            if (t >= end) break;
            auto follow = make_event(fsm, t, UserEventKind::LinkFollow);
            follow.detail["site"] = site;
            follow.detail["link"] = std::to_string(k + 1);
            out.push_back(std::move(follow));
        }
        t += draw_dwell(s, params.routine_gap);
    }
    out.push_back(make_event(fsm, end, UserEventKind::SessionEnd));
    out.push_back(make_event(fsm, end, UserEventKind::Timer));
    fsm.state = "idle";
    return out;
}

std::vector<UserEvent> read_inbox(UserFsm& fsm, SimTime now)
{
    if (fsm.module != UserModule::Email) {
        throw std::invalid_argument("read_inbox: FSM is not an email module");
    }
    std::vector<UserEvent> out;
    for (const auto& mail : fsm.inbox) {
        auto read = make_event(fsm, now, UserEventKind::MailRead);
        read.mail = mail;
        out.push_back(read);
        if (mail.has_link) {
            auto e = make_event(fsm, now, UserEventKind::LinkOpen);
            e.mail = mail;
            out.push_back(std::move(e));
        }
        if (mail.has_attachment) {
            auto e = make_event(fsm, now, UserEventKind::AttachmentOpen);
            e.mail = mail;
            out.push_back(std::move(e));
        }
    }
    fsm.inbox.clear();
    return out;
}

std::vector<UserEvent> step_email_module(UserFsm& fsm, SimTime now, const EmailParams& params,
                                         std::span<const std::string> peer_clients)
{
    auto out = read_inbox(fsm, now);
    auto& s = fsm.stream;

    if (s.bernoulli(params.compose_probability)) {
        const bool external = peer_clients.empty() || s.bernoulli(params.external_probability);
        Mail mail;
        mail.id = fsm.next_mail_id++;
        mail.from = fsm.client_id;
        mail.to = external ? params.external_address
                           : peer_clients[static_cast<std::size_t>(s.uniform_index(peer_clients.size()))];
        mail.subject = "msg-" + fsm.client_id + "-" + std::to_string(mail.id);
        mail.has_attachment = s.bernoulli(params.attachment_probability);
        mail.has_link = s.bernoulli(params.link_probability);

        auto sent = make_event(fsm, now, UserEventKind::MailSent);
        sent.mail = mail;
        out.push_back(sent);

        if (external) {
            Mail reply = mail;
            reply.from = params.external_address;
            reply.to = fsm.client_id;
            reply.subject = "Re: " + mail.subject + " [modified]";
            auto e = make_event(fsm, now + params.reply_delay, UserEventKind::ExternalReply);
            e.mail = std::move(reply);
            e.detail["body"] = "modified";
            out.push_back(std::move(e));
        }
    }
    out.push_back(make_event(fsm, now + params.poll_interval, UserEventKind::Timer));
    return out;
}

std::vector<UserEvent> step_file_module(UserFsm& fsm, SimTime now, const FileParams& params)
{
    if (fsm.module != UserModule::File) {
        throw std::invalid_argument("step_file_module: FSM is not a file module");
    }
    auto& s = fsm.stream;
    auto draw_name = [&] {
        return "file_" + std::to_string(s.uniform_index(static_cast<std::uint64_t>(params.filename_pool))) + ".txt";
    };

    const std::string name = draw_name();
    double total = 0.0;
    for (double w : params.action_weights) total += w;
    double u = s.uniform01() * total;
    std::size_t pick = 0;
    for (; pick + 1 < params.action_weights.size(); ++pick) {
        if (u < params.action_weights[pick]) break;
        u -= params.action_weights[pick];
    }
    const FileActionKind action = kAllFileActions[pick];

    auto e = make_event(fsm, now, UserEventKind::FileAction);
    e.detail["action"] = to_string(action);
    e.detail["file"] = params.folder + "\\" + name;
    const bool exists = fsm.files.count(name) > 0;
    switch (action) {
    case FileActionKind::Create: fsm.files.insert(name); break;
    case FileActionKind::Delete:
        e.noop = !exists;
        fsm.files.erase(name);
        break;
    case FileActionKind::Append:
    case FileActionKind::Read: e.noop = !exists; break;
    case FileActionKind::Move:
    case FileActionKind::Copy: {
        const std::string dest = draw_name();
        e.detail["destination"] = params.folder + "\\" + dest;
        e.noop = !exists;
        if (exists) {
            if (action == FileActionKind::Move) fsm.files.erase(name);
            fsm.files.insert(dest);
        }
        break;
    }
    }
    std::vector<UserEvent> out;
    out.push_back(std::move(e));
    out.push_back(make_event(fsm, now + draw_dwell(s, params.interval), UserEventKind::Timer));
    return out;
}

} // namespace socsim
