#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "socsim/scenario.hpp"
#include "socsim/useremu.hpp"

using namespace socsim;

namespace {

const EmulationParams& params()
{
    static const EmulationParams p = default_scenario().emulation;
    return p;
}

struct Alternations {
    int sessions = 0;
    int idles = 0;
    bool operator==(const Alternations&) const = default;
};

// Re-executes the web machine's draw order against a bare stream: an idle
// period draws one inactivity dwell; a session draws its length and then,
// per routine, entry kind, optional term, site, follow count, click delays
// (stopping at the end), and the gap to the next routine.
Alternations replay_web_hour(std::uint64_t seed, const std::string& client, const WebParams& w)
{
    auto s = derive_stream(seed, {"client", client, "web"});
    auto dwell = [&](const Dwell& d) {
        const double x = d.kind == DwellKind::Exponential ? s.exponential(d.mean_seconds) : d.mean_seconds;
        return std::max<SimTime>(1, static_cast<SimTime>(std::ceil(x)));
    };
    Alternations a;
    SimTime now = 0;
    bool idle = true;
    while (now < 3600) {
        if (idle) {
            ++a.idles;
            now += dwell(w.inactivity);
        } else {
            ++a.sessions;
            const SimTime end = now + dwell(w.session);
            SimTime t = now;
            while (t < end) {
                if (s.bernoulli(w.search_probability)) s.uniform_index(w.search_terms.size());
                s.uniform_index(w.sites.size());
                const auto follows = s.geometric(1.0 / (1.0 + w.mean_follows));
                for (std::uint64_t k = 0; k < follows; ++k) {
                    t += dwell(w.click_delay);
                    if (t >= end) break;
                }
                t += dwell(w.routine_gap);
            }
            now = end;
        }
        idle = !idle;
    }
    return a;
}

Alternations drive_web_hour(std::uint64_t seed, const std::string& client, const WebParams& w)
{
    auto fsm = make_user_fsm(seed, client, UserModule::Web);
    Alternations a;
    SimTime now = 0;
    while (now < 3600) {
        const auto events = step_web_module(fsm, now, w);
        const bool session = events.front().kind == UserEventKind::SessionStart;
        ++(session ? a.sessions : a.idles);
        now = events.back().at;
        REQUIRE(events.back().kind == UserEventKind::Timer);
    }
    return a;
}

} // namespace

TEST_CASE("idle web state emits only its timer")
{
    auto fsm = make_user_fsm(1, "client1", UserModule::Web);
    WebParams w = params().web;
    w.inactivity = {DwellKind::Fixed, 600.0};
    const auto events = step_web_module(fsm, 100, w);
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == UserEventKind::Timer);
    CHECK(events[0].at == 700);
    CHECK(fsm.state == "browsing");
}

TEST_CASE("web sessions are bracketed and stay inside the session")
{
    auto fsm = make_user_fsm(3, "client2", UserModule::Web);
    fsm.state = "browsing";
    const auto events = step_web_module(fsm, 0, params().web);
    REQUIRE(events.size() >= 3);
    CHECK(events.front().kind == UserEventKind::SessionStart);
    const SimTime end = events.back().at;
    CHECK(events[events.size() - 2].kind == UserEventKind::SessionEnd);
    for (const auto& e : events) CHECK(e.at <= end);
    CHECK(std::any_of(events.begin(), events.end(), [](const UserEvent& e) { return e.kind == UserEventKind::PageOpen; }));
}

TEST_CASE("web module is deterministic per seed")
{
    auto a = make_user_fsm(9, "client1", UserModule::Web);
    auto b = make_user_fsm(9, "client1", UserModule::Web);
    for (SimTime t = 0; t < 5; ++t) CHECK(step_web_module(a, t * 1000, params().web) == step_web_module(b, t * 1000, params().web));
}

TEST_CASE("session/idle alternation over an hour matches an independent replay")
{
    for (std::uint64_t seed : {1u, 2u, 3u, 17u, 4242u}) {
        for (const std::string client : {"client1", "client2", "client3"}) {
            CHECK(drive_web_hour(seed, client, params().web) == replay_web_hour(seed, client, params().web));
        }
    }
}

TEST_CASE("attachment in the inbox is opened")
{
    auto fsm = make_user_fsm(1, "client1", UserModule::Email);
    Mail m;
    m.id = 77;
    m.has_attachment = true;
    fsm.inbox.push_back(m);
    const auto events = read_inbox(fsm, 50);
    CHECK(std::any_of(events.begin(), events.end(), [](const UserEvent& e) {
        return e.kind == UserEventKind::AttachmentOpen && e.mail && e.mail->id == 77;
    }));
    CHECK(fsm.inbox.empty());
}

TEST_CASE("empty inbox with no compose draw yields only the poll timer")
{
    auto fsm = make_user_fsm(1, "client1", UserModule::Email);
    EmailParams p = params().email;
    p.compose_probability = 0.0;
    const auto events = step_email_module(fsm, 10, p, {});
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == UserEventKind::Timer);
    CHECK(events[0].at == 10 + p.poll_interval);
}

TEST_CASE("external mail gets a modified reply")
{
    auto fsm = make_user_fsm(1, "client1", UserModule::Email);
    EmailParams p = params().email;
    p.compose_probability = 1.0;
    p.external_probability = 1.0;
    const std::vector<std::string> peers = {"client2"};
    const auto events = step_email_module(fsm, 10, p, peers);
    const auto it = std::find_if(events.begin(), events.end(),
                                 [](const UserEvent& e) { return e.kind == UserEventKind::ExternalReply; });
    REQUIRE(it != events.end());
    CHECK(it->at == 10 + p.reply_delay);
    CHECK(it->mail->from == p.external_address);
    CHECK(it->mail->subject.find("[modified]") != std::string::npos);
}

TEST_CASE("delete of a never-created file is a flagged no-op")
{
    auto fsm = make_user_fsm(1, "client1", UserModule::File);
    FileParams p = params().file;
    p.action_weights = {0, 1, 0, 0, 0, 0};
    const auto events = step_file_module(fsm, 0, p);
    REQUIRE(events.size() == 2);
    CHECK(events[0].detail.at("action") == "delete");
    CHECK(events[0].noop);
}

TEST_CASE("file actions replay identically")
{
    auto a = make_user_fsm(5, "client3", UserModule::File);
    auto b = make_user_fsm(5, "client3", UserModule::File);
    for (int i = 0; i < 200; ++i) {
        const auto ea = step_file_module(a, i, params().file);
        const auto eb = step_file_module(b, i, params().file);
        REQUIRE(ea == eb);
    }
}

TEST_CASE("file action frequencies are uniform within 3 sigma")
{
    auto fsm = make_user_fsm(12, "client1", UserModule::File);
    std::map<std::string, int> counts;
    const int n = 6000;
    for (int i = 0; i < n; ++i) ++counts[step_file_module(fsm, i, params().file)[0].detail.at("action")];
    REQUIRE(counts.size() == 6);
    // Binomial(6000, 1/6): mean 1000, sd = sqrt(6000 * 1/6 * 5/6).
    const double sd = std::sqrt(n * (1.0 / 6) * (5.0 / 6));
    for (const auto& [action, c] : counts) {
        INFO(action);
        CHECK(std::fabs(c - 1000.0) <= 3 * sd);
    }
}

TEST_CASE("clients diverge and do not disturb each other")
{
    auto a = make_user_fsm(5, "client1", UserModule::File);
    auto b = make_user_fsm(5, "client2", UserModule::File);
    std::vector<std::string> fa;
    std::vector<std::string> fb;
    for (int i = 0; i < 20; ++i) {
        fa.push_back(step_file_module(a, i, params().file)[0].detail.at("file"));
        fb.push_back(step_file_module(b, i, params().file)[0].detail.at("file"));
    }
    CHECK(fa != fb);

    // A fresh client1 machine is unaffected by client2 having run.
    auto again = make_user_fsm(5, "client1", UserModule::File);
    for (int i = 0; i < 20; ++i) CHECK(step_file_module(again, i, params().file)[0].detail.at("file") == fa[i]);
}
