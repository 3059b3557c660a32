#include "socsim/simulation.hpp"

#include <algorithm>
#include <variant>

#include "socsim/kernel.hpp"
#include "socsim/useremu.hpp"

namespace socsim {

std::vector<std::string> check_chain(const AttackChain& chain, const ScenarioConfig& cfg)
{
    std::vector<std::string> out;
    const auto check = validate_chain(chain, scenario_digraph(cfg));
    if (!check.valid) {
        out.push_back("entry " + std::to_string(check.index) + " (" +
                      std::string(to_string(chain.entries[check.index].step)) + "): " + check.reason +
                      ": " + check.detail);
    }
    for (std::size_t i = 0; i < chain.entries.size(); ++i) {
        const auto& e = chain.entries[i];
        const auto prefix = "entry " + std::to_string(i) + " (" + std::string(to_string(e.step)) + "): ";
        const auto* host = cfg.find_id(e.target);
        if (!host) {
            out.push_back(prefix + "unknown target '" + e.target + "'");
        } else if (host->kind != required_target_kind(e.step)) {
            out.push_back(prefix + "target '" + e.target + "' is a " + to_string(host->kind) +
                          ", expected " + to_string(required_target_kind(e.step)));
        }
        if (!e.peer.empty()) {
            const auto* peer = cfg.find_id(e.peer);
            if (!peer || peer->kind != HostKind::Client) {
                out.push_back(prefix + "peer '" + e.peer + "' is not a client");
            }
        }
    }
    return out;
}

namespace {

struct Wake {
    std::size_t fsm;
};

struct ReplyArrival {
    std::size_t fsm;
    UserEvent reply;
};

struct AttackStep {
    std::size_t entry;
};

using Action = std::variant<Wake, ReplyArrival, AttackStep>;

constexpr SimTime kStartJitter = 60;

} // namespace

RunResult run_simulation(const ScenarioConfig& cfg, std::uint64_t seed, const AttackChain& chain,
                         const SimulationOptions& options)
{
    if (const auto problems = check_chain(chain, cfg); !problems.empty()) {
        throw std::invalid_argument("chain rejected: " + problems.front());
    }
    const SimTime horizon = cfg.run_seconds;
    const auto& emu = cfg.emulation;
    const auto* attacker_host = cfg.find_kind(HostKind::Attacker);
    const std::string attacker = attacker_host ? attacker_host->id : "attacker";

    std::vector<std::string> client_ids;
    for (const auto* c : cfg.clients()) client_ids.push_back(c->id);

    std::vector<UserFsm> fsms;
    std::map<std::string, std::size_t> email_fsm;
    for (const auto& id : client_ids) {
        for (auto module : {UserModule::Web, UserModule::Email, UserModule::File}) {
            if (module == UserModule::Email) email_fsm[id] = fsms.size();
            fsms.push_back(make_user_fsm(seed, id, module));
        }
    }

    RunResult result;
    std::vector<LogEvent> user_logs;
    std::vector<LogEvent> attack_logs;
    EventQueue<Action> queue;

    auto record_user = [&](const UserEvent& ue, const std::optional<std::string>& cause) {
        if (ue.at >= horizon) return;
        for (auto& e : user_activity_events(ue, cfg)) {
            e.cause = cause;
            user_logs.push_back(std::move(e));
        }
    };

    if (options.user_activity) {
        for (std::size_t i = 0; i < fsms.size(); ++i) {
            const auto at = static_cast<SimTime>(fsms[i].stream.uniform_index(kStartJitter));
            if (at < horizon) queue.schedule(at, fsms[i].client_id, Wake{i});
        }
    }
    for (std::size_t i = 0; i < chain.entries.size(); ++i) {
        const SimTime at = cfg.warmup_seconds + chain.entries[i].offset;
        if (at < horizon) queue.schedule(at, attacker, AttackStep{i});
    }

    auto handle_user = [&](std::size_t idx, std::vector<UserEvent> events,
                           EventQueue<Action>& q) {
        for (auto& ue : events) {
            if (ue.kind == UserEventKind::Timer) {
                if (ue.at < horizon) q.schedule(ue.at, fsms[idx].client_id, Wake{idx});
            } else if (ue.kind == UserEventKind::ExternalReply) {
                if (ue.at < horizon) q.schedule(ue.at, emu.email.external_address, ReplyArrival{idx, std::move(ue)});
            } else {
                record_user(ue, std::nullopt);
            }
        }
    };

    auto handler = [&](const SimEvent<Action>& ev, EventQueue<Action>& q) {
        std::string kind;
        std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, Wake>) {
                    auto& fsm = fsms[a.fsm];
                    kind = "wake " + to_string(fsm.module) + " " + fsm.state;
                    std::vector<UserEvent> events;
                    switch (fsm.module) {
                    case UserModule::Web: events = step_web_module(fsm, ev.at, emu.web); break;
                    case UserModule::Email: {
                        std::vector<std::string> peers;
                        for (const auto& id : client_ids) {
                            if (id != fsm.client_id) peers.push_back(id);
                        }
                        events = step_email_module(fsm, ev.at, emu.email, peers);
                        break;
                    }
                    case UserModule::File: events = step_file_module(fsm, ev.at, emu.file); break;
                    }
                    handle_user(a.fsm, std::move(events), q);
                } else if constexpr (std::is_same_v<T, ReplyArrival>) {
                    kind = "reply " + a.reply.client;
                    fsms[a.fsm].inbox.push_back(*a.reply.mail);
                    record_user(a.reply, std::nullopt);
                } else {
                    const auto& entry = chain.entries[a.entry];
                    kind = "attack " + entry_name(entry);
                    auto exec = execute_step(entry, result.attacker, ev.at, cfg);
                    result.attacker = std::move(exec.state);
                    const std::string cause = std::to_string(a.entry) + ":" + std::string(to_string(entry.step));
                    if (entry.step == StepName::InfectEmailExe && entry.stage != StepStage::Deliver) {
                        auto& inbox_fsm = fsms[email_fsm.at(entry.target)];
                        Mail mail;
                        mail.id = 1000000 + a.entry;
                        mail.from = "it-support@update-service.example";
                        mail.to = entry.target;
                        mail.subject = "Outstanding invoice";
                        mail.has_attachment = true;
                        mail.malicious = true;
                        inbox_fsm.inbox.push_back(mail);
                        for (const auto& ue : read_inbox(inbox_fsm, ev.at)) {
                            record_user(ue, ue.mail && ue.mail->malicious ? std::optional(cause) : std::nullopt);
                        }
                    }
                    auto drops = derive_stream(seed, {"drop", std::to_string(a.entry)});
                    for (auto& e : emit_attack_events(entry, a.entry, cfg, ev.at, drops)) {
                        if (e.timestamp < horizon) attack_logs.push_back(std::move(e));
                    }
                }
            },
            ev.action);
        if (options.record_transcript) {
            result.transcript.push_back(std::to_string(ev.at) + " " + ev.origin + " " +
                                        std::to_string(ev.seq) + " " + kind);
        }
    };
    result.processed_events = queue.run_until(std::max<SimTime>(horizon, 0), handler);

    std::vector<LogEvent> noise;
    if (options.noise && horizon > 0 && !client_ids.empty()) {
        const double dispersion = emu.noise.dispersion;
        noise = emit_noise(default_noise_profile(dispersion), horizon,
                           derive_stream(seed, {"noise", "default"}), client_ids);
        for (auto& e : emit_noise(best_practice_noise_profile(dispersion), horizon,
                                  derive_stream(seed, {"noise", "best-practice"}), client_ids)) {
            const bool keep = e.source == LogSource::AdvancedHostAudit
                                  ? cfg.logging.advanced_host_audit
                                  : cfg.logging.verbose_shell_logging;
            if (keep) noise.push_back(std::move(e));
        }
    }

    RunOutputs outputs;
    outputs.scenario = &cfg;
    outputs.seed = seed;
    outputs.chain = chain;
    outputs.attack = std::move(attack_logs);
    outputs.user = std::move(user_logs);
    outputs.noise = std::move(noise);
    result.dataset = assemble_dataset(std::move(outputs));
    return result;
}

} // namespace socsim
