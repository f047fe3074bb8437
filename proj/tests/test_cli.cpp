#include <gtest/gtest.h>

#include <sstream>

#include "epimail/cli.hpp"

namespace {

using epimail::Verdict;
using nlohmann::json;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

std::string scenario(const std::string& name) { return std::string(EPIMAIL_SCENARIOS) + "/" + name; }

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = epimail::cli::run_command(args, out, err);
    return {code, out.str(), err.str()};
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

TEST(Cli, CheckLegal) {
    Outcome r = run({"check", scenario("alma.eea")});
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(contains(r.out, "legal\n"));
    EXPECT_TRUE(contains(r.out, "witness spo: e0<e1"));
}

TEST(Cli, CheckIllegal) {
    Outcome r = run({"check", scenario("orphan_forward.eea")});
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(contains(r.out, "illegal"));
    EXPECT_TRUE(contains(r.out, "blocked: e1"));
    EXPECT_EQ(run({"check", scenario("unexplained.eea")}).code, 1);
}

TEST(Cli, CkNamesFailedCondition) {
    Outcome r = run({"ck", scenario("alma.eea"), "--group", "a,b,c,d", "--email", "e2"});
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(contains(r.out, "failed conditions: C2"));
    Outcome ok = run({"ck", scenario("alma.eea"), "--group", "a,c,d", "--email", "e2"});
    EXPECT_EQ(ok.code, 0);
    EXPECT_TRUE(contains(ok.out, "shared emails: e0 e3"));
    EXPECT_EQ(run({"ck", scenario("alma.eea"), "--group", "a,b,c,d", "--message", "m0"}).code, 1);
}

TEST(Cli, CkSmallGroupUnsupported) {
    Outcome r = run({"ck", scenario("alma.eea"), "--group", "a,c", "--email", "e2"});
    EXPECT_EQ(r.code, 3);
    EXPECT_TRUE(contains(r.err, "unsupported"));
}

TEST(Cli, EvalViaProcedure) {
    Outcome r = run({"eval", scenario("alma.eea"), "C{a,c,d} email(m2,{a})", "--json"});
    EXPECT_EQ(r.code, 0);
    json j = json::parse(r.out);
    EXPECT_EQ(j["mode"], "exact-via-procedure");
    EXPECT_EQ(j["value"], true);
}

TEST(Cli, EvalBounded) {
    Outcome r = run({"eval", scenario("observer.eea"), "C{j,o} invl(k, m)", "--json"});
    EXPECT_EQ(r.code, 1);
    json j = json::parse(r.out);
    EXPECT_EQ(j["value"], false);
    Outcome k = run({"eval", scenario("observer.eea"), "K o invl(k, m)"});
    EXPECT_EQ(k.code, 0);
}

TEST(Cli, EvalOnIllegalState) {
    EXPECT_EQ(run({"eval", scenario("orphan_forward.eea"), "sent(m1)"}).code, 1);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frob"}).code, 2);
    EXPECT_EQ(run({"check"}).code, 2);
    EXPECT_EQ(run({"check", scenario("missing.eea")}).code, 2);
    EXPECT_EQ(run({"ck", scenario("alma.eea"), "--group", "a,b"}).code, 2);
    EXPECT_EQ(run({"ck", scenario("alma.eea"), "--group", "a,z", "--message", "m0"}).code, 2);
    EXPECT_EQ(run({"eval", scenario("alma.eea"), "sent(m0"}).code, 2);
    EXPECT_EQ(run({"ig", scenario("alma.eea"), "--email", "e0", "--agent", "b"}).code, 2);
}

TEST(Cli, EiAndIg) {
    Outcome ei = run({"ei", scenario("alma.eea"), "--email", "e2", "--json"});
    EXPECT_EQ(ei.code, 0);
    EXPECT_TRUE(json::parse(ei.out)["value"].is_null());
    Outcome ig = run({"ig", scenario("alma.eea"), "--email", "e2", "--agent", "a", "--json"});
    EXPECT_EQ(ig.code, 0);
    EXPECT_TRUE(contains(ig.out, "invl(a, m2)"));
}

TEST(Cli, ReportAndExchange) {
    EXPECT_EQ(run({"report", scenario("alma.eea")}).code, 0);
    Outcome ex = run({"exchange", scenario("alma.eea"), "--all", "--json"});
    EXPECT_EQ(ex.code, 0);
    EXPECT_EQ(run({"exchange", scenario("orphan_forward.eea")}).code, 1);
}

TEST(Cli, SimulateBcc) {
    EXPECT_EQ(run({"simulate-bcc", scenario("alma.eea")}).code, 1);
    Outcome d = run({"simulate-bcc", scenario("blind.eea"), "--email", "e", "--check-distinguish", "3", "2", "--json"});
    EXPECT_EQ(d.code, 0);
    Outcome breach = run({"simulate-bcc", scenario("blind_forwarded.eea"), "--email", "e", "--check-distinguish", "3", "2"});
    EXPECT_EQ(breach.code, 3);
    EXPECT_TRUE(contains(breach.err, "forward-to-j"));
}

TEST(Cli, JsonIsStable) {
    for (auto args : std::vector<std::vector<std::string>>{
             {"check", scenario("alma.eea"), "--json"},
             {"report", scenario("alma.eea"), "--json"},
             {"eval", scenario("observer.eea"), "C{j,o} invl(k, m)", "--json"},
             {"simulate-bcc", scenario("blind.eea"), "--email", "e", "--check-distinguish", "3", "2", "--json"}}) {
        Outcome a = run(args), b = run(args);
        EXPECT_EQ(a.out, b.out);
        EXPECT_EQ(a.code, b.code);
    }
}

TEST(Cli, TimingIsOptIn) {
    Outcome r = run({"check", scenario("alma.eea"), "--json", "--timing"});
    json j = json::parse(r.out);
    EXPECT_TRUE(j.contains("timing_ms"));
    EXPECT_FALSE(json::parse(run({"check", scenario("alma.eea"), "--json"}).out).contains("timing_ms"));
}

TEST(VerdictJson, RoundTrip) {
    Outcome r = run({"ck", scenario("alma.eea"), "--group", "a,b,c,d", "--email", "e2", "--json", "--timing"});
    Verdict v = json::parse(r.out).get<Verdict>();
    EXPECT_EQ(v.command, "ck");
    ASSERT_TRUE(v.value.has_value());
    EXPECT_FALSE(*v.value);
    EXPECT_EQ(json(v).get<Verdict>(), v);

    Verdict plain;
    plain.command = "ei";
    plain.query = "e0";
    EXPECT_EQ(json(plain).get<Verdict>(), plain);
    EXPECT_TRUE(json(plain)["value"].is_null());
}

}  // namespace
