#include <catch_amalgamated.hpp>

#include <fstream>

#include "oracles.hpp"
#include "socsim/adversary.hpp"
#include "socsim/scenario.hpp"

using namespace socsim;

namespace {

const ScenarioConfig& cfg()
{
    static const ScenarioConfig c = default_scenario();
    return c;
}

const std::vector<Target>& targets()
{
    static const std::vector<Target> t = scenario_targets(cfg());
    return t;
}

ChainEntry entry(StepName step, std::string target, SimTime offset)
{
    ChainEntry e;
    e.step = step;
    e.target = std::move(target);
    e.offset = offset;
    return e;
}

oracle::ChainShape shape(const AttackChain& c)
{
    oracle::ChainShape s;
    for (const auto& e : c.entries) s.emplace_back(std::string(to_string(e.step)), e.target);
    return s;
}

} // namespace

TEST_CASE("default digraph edges")
{
    const auto g = build_default_digraph();
    CHECK(g.has_edge(StepName::InfectEmailExe, StepName::C2TakeScreenshot));
    CHECK(g.has_edge(StepName::C2Mimikatz, StepName::C2Exfiltration));
    CHECK(g.has_edge(StepName::MiscSqlmap, StepName::InfectEmailExe));
    CHECK_FALSE(g.has_edge(StepName::MiscSqlmap, StepName::C2Mimikatz));
    CHECK(g.is_entry(StepName::MiscSqlmap));
    CHECK_FALSE(g.is_entry(StepName::C2Mimikatz));
    CHECK(digraph_violations(g).empty());
}

TEST_CASE("digraph spec round-trips")
{
    const auto g = build_default_digraph();
    CHECK(digraph_from_spec(digraph_to_spec(g)) == g);
    CHECK_THROWS_AS(digraph_from_spec(AttackGraphSpec{{"misc_nothing"}, {}}), std::invalid_argument);
}

TEST_CASE("c2 step as entry is a digraph violation")
{
    auto g = build_default_digraph();
    g.entry.insert(StepName::C2Mimikatz);
    CHECK_FALSE(digraph_violations(g).empty());
}

TEST_CASE("validate_chain examples")
{
    const auto g = build_default_digraph();
    CHECK(validate_chain(AttackChain{}, g).valid);

    const auto lone = validate_chain(AttackChain{{entry(StepName::C2Mimikatz, "client1", 0)}}, g);
    CHECK_FALSE(lone.valid);
    CHECK(lone.index == 0);
    CHECK((lone.reason == "not-entry" || lone.reason == "no-live-channel"));

    CHECK(validate_chain(AttackChain{{entry(StepName::InfectEmailExe, "client1", 0),
                                      entry(StepName::C2Exfiltration, "client1", 180)}},
                         g)
              .valid);

    const auto other_host = validate_chain(AttackChain{{entry(StepName::InfectEmailExe, "client1", 0),
                                                        entry(StepName::C2Exfiltration, "client2", 180)}},
                                           g);
    CHECK_FALSE(other_host.valid);
    CHECK(other_host.index == 1);
    CHECK(other_host.reason == "no-live-channel");

    const auto after_misc = validate_chain(AttackChain{{entry(StepName::InfectEmailExe, "client1", 0),
                                                        entry(StepName::MiscSetAutostart, "client1", 180),
                                                        entry(StepName::C2Mimikatz, "client1", 360)}},
                                           g);
    CHECK_FALSE(after_misc.valid);
    CHECK(after_misc.index == 2);
    CHECK(after_misc.reason == "no-edge");

    const auto order = validate_chain(AttackChain{{entry(StepName::MiscSqlmap, "dmz-server", 10),
                                                   entry(StepName::MiscSqlmap, "dmz-server", 10)}},
                                      g);
    CHECK(order.reason == "offset-order");
}

TEST_CASE("split email stages")
{
    const auto g = build_default_digraph();
    auto deliver = entry(StepName::InfectEmailExe, "client1", 0);
    deliver.stage = StepStage::Deliver;
    auto trigger = entry(StepName::InfectEmailExe, "client1", 180);
    trigger.stage = StepStage::Trigger;
    auto shot = entry(StepName::C2TakeScreenshot, "client1", 360);
    CHECK(validate_chain(AttackChain{{deliver, trigger, shot}}, g).valid);
    // A delivered-but-unopened mail gives no channel yet.
    auto early = shot;
    early.offset = 180;
    CHECK(validate_chain(AttackChain{{deliver, early}}, g).reason == "no-live-channel");
    CHECK(validate_chain(AttackChain{{trigger}}, g).reason == "no-delivered-mail");
    auto bad = entry(StepName::MiscSqlmap, "dmz-server", 0);
    bad.stage = StepStage::Deliver;
    CHECK(validate_chain(AttackChain{{bad}}, g).reason == "invalid-stage");
}

TEST_CASE("exemplary kill chain")
{
    const auto chain = exemplary_killchain(targets());
    REQUIRE(chain.entries.size() == 9);
    CHECK(validate_chain(chain, build_default_digraph()).valid);
    CHECK(chain.entries[0].step == StepName::MiscSqlmap);
    CHECK(chain.entries[0].target == "dmz-server");
    CHECK(chain.entries[5].peer == "client2");
    for (std::size_t i = 0; i < chain.entries.size(); ++i) CHECK(chain.entries[i].offset == SimTime(180 * i));
}

TEST_CASE("generate_chain length 0 is empty and generation is deterministic")
{
    const auto g = build_default_digraph();
    CHECK(generate_chain(g, derive_stream(1, {"chain"}), 0, targets()).entries.empty());
    const auto a = generate_chain(g, derive_stream(42, {"chain"}), 5, targets());
    const auto b = generate_chain(g, derive_stream(42, {"chain"}), 5, targets());
    CHECK(a == b);
}

TEST_CASE("seed 42, length 5 is a member of the brute-force enumeration")
{
    const auto chain = generate_chain(build_default_digraph(), derive_stream(42, {"chain"}), 5, targets());
    const auto all = oracle::enumerate_chains(5, "dmz-server", {"client1", "client2", "client3"});
    CHECK(all.count(shape(chain)) == 1);
}

TEST_CASE("enumeration oracle agrees with validate_chain on length 2")
{
    // Every (step, target) pair sequence of length 2 classified both ways.
    const auto g = build_default_digraph();
    const auto valid = oracle::enumerate_chains(2, "dmz-server", {"client1", "client2", "client3"});
    std::size_t accepted = 0;
    for (const auto& t1 : targets()) {
        for (auto s1 : kAllSteps) {
            if (required_target_kind(s1) != t1.kind) continue;
            for (const auto& t2 : targets()) {
                for (auto s2 : kAllSteps) {
                    if (required_target_kind(s2) != t2.kind) continue;
                    AttackChain c{{entry(s1, t1.host, 0), entry(s2, t2.host, 180)}};
                    const bool ok = validate_chain(c, g).valid;
                    CHECK(ok == (valid.count(shape(c)) == 1));
                    accepted += ok;
                }
            }
        }
    }
    CHECK(accepted == valid.size());
}

TEST_CASE("generated chains are always valid")
{
    const auto g = build_default_digraph();
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto c = generate_chain(g, derive_stream(seed, {"chain"}), 1 + seed % 8, targets());
        REQUIRE(validate_chain(c, g).valid);
    }
}

TEST_CASE("execute_step opens channels and enforces prerequisites")
{
    AttackerState s;
    CHECK_THROWS_AS(execute_step(entry(StepName::C2Mimikatz, "client1", 0), s, 0, cfg()), PrerequisiteError);
    const auto after = execute_step(entry(StepName::InfectEmailExe, "client1", 0), s, 5, cfg());
    CHECK(after.state.has_live_channel("client1"));
    CHECK_FALSE(after.state.has_live_channel("client2"));
    CHECK_NOTHROW(execute_step(entry(StepName::C2Mimikatz, "client1", 0), after.state, 10, cfg()));

    auto killed = after.state;
    killed.kill_channel("client1");
    CHECK_THROWS_AS(execute_step(entry(StepName::C2Mimikatz, "client1", 0), killed, 10, cfg()), PrerequisiteError);

    CHECK_THROWS_AS(execute_step(entry(StepName::MiscSqlmap, "client1", 0), s, 0, cfg()), PrerequisiteError);
    CHECK_THROWS_AS(execute_step(entry(StepName::MiscSqlmap, "nowhere", 0), s, 0, cfg()), PrerequisiteError);
    CHECK_FALSE(execute_step(entry(StepName::MiscSqlmap, "dmz-server", 0), s, 0, cfg()).actions.empty());
}

TEST_CASE("tactic coverage")
{
    const StepName sql = StepName::MiscSqlmap;
    const auto m = tactic_coverage(std::span(&sql, 1));
    REQUIRE(m.size() == 1);
    TacticSet want;
    want.set(static_cast<std::size_t>(Tactic::Reconnaissance));
    want.set(static_cast<std::size_t>(Tactic::ResourceDevelopment));
    want.set(static_cast<std::size_t>(Tactic::InitialAccess));
    want.set(static_cast<std::size_t>(Tactic::CredentialAccess));
    CHECK(m[0].second == want);

    const std::vector<StepName> all(kAllSteps.begin(), kAllSteps.end());
    CHECK(coverage_union(tactic_coverage(all)).all());
}

TEST_CASE("chain file round-trip and rejection")
{
    oracle::TempDir dir("chain");
    const auto chain = exemplary_killchain(targets());
    save_chain(chain, dir / "c.json");
    CHECK(load_chain(dir / "c.json") == chain);

    auto j = chain_to_json(chain);
    j["entries"][0]["step"] = "misc_teleport";
    CHECK_THROWS_AS(chain_from_json(j), std::invalid_argument);
}
