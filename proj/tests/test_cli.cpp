#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

#include "specproj/banded.hpp"
#include "specproj/synth.hpp"

#ifndef SPECPROJ_CLI_PATH
#error "SPECPROJ_CLI_PATH must point at the CLI binary"
#endif

using json = nlohmann::ordered_json;
using namespace specproj;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string out;
};

CmdResult run(const std::string& args) {
    const std::string cmd = std::string(SPECPROJ_CLI_PATH) + " " + args + " 2>/dev/null";
    std::array<char, 4096> buf{};
    CmdResult r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), got);
    const int status = pclose(p);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return s;
}

json strip_wall_times(json rep) {
    rep["totals"].erase("wall_ms");
    for (auto& it : rep["per_iteration"]) it.erase("wall_ms");
    return rep;
}

} // namespace

TEST(CliGenerate, HeaderFormat) {
    CmdResult r = run("generate --n 512 --band 1 --gap 1e-1 --out /tmp/specproj_g1.sbm");
    ASSERT_EQ(r.exit_code, 0) << r.out;
    std::ifstream is("/tmp/specproj_g1.sbm");
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "SBM 512 1");
    BandedSymmetric A = read_sbm("/tmp/specproj_g1.sbm");
    EXPECT_EQ(A.n, 512);
    EXPECT_EQ(A.b, 1);
    EXPECT_NE(r.out.find("nu=256"), std::string::npos);
}

TEST(CliGenerate, RejectsBandGeqN) {
    CmdResult r = run("generate --n 3 --band 4 --out /tmp/specproj_bad.sbm");
    EXPECT_EQ(r.exit_code, 2);
}

TEST(CliGenerate, MissingFlagsExit2) {
    CmdResult r = run("generate --n 16 --band 1");
    EXPECT_EQ(r.exit_code, 2);
}

TEST(CliProject, MissingInputExit3) {
    CmdResult r = run("project --in /tmp/specproj_does_not_exist.sbm");
    EXPECT_EQ(r.exit_code, 3);
}

TEST(CliProject, ShiftedIdentityFullTrace) {
    BandedSymmetric I(32, 1);
    for (int i = 0; i < 32; ++i) I.bands[0][i] = 1.0;
    write_sbm("/tmp/specproj_id.sbm", I);
    CmdResult r = run("project --in /tmp/specproj_id.sbm --shift 2 --nmin 8 "
                      "--report /tmp/specproj_id.json");
    ASSERT_EQ(r.exit_code, 0);
    json rep = json::parse(slurp("/tmp/specproj_id.json"));
    EXPECT_NEAR(rep["totals"]["trace_p"].get<double>(), 32.0, 1e-8);
    EXPECT_EQ(rep["params"]["shift"].get<double>(), 2.0);
}

TEST(CliProject, ReportSchema) {
    CmdResult g = run("generate --n 128 --band 2 --gap 1e-2 --out /tmp/specproj_g2.sbm");
    ASSERT_EQ(g.exit_code, 0);
    CmdResult r = run("project --in /tmp/specproj_g2.sbm --nmin 32 --report /tmp/specproj_r2.json");
    ASSERT_EQ(r.exit_code, 0);
    json rep = json::parse(slurp("/tmp/specproj_r2.json"));
    for (const char* key : {"input", "params", "iterations", "per_iteration", "errors", "totals"})
        EXPECT_TRUE(rep.contains(key)) << key;
    EXPECT_TRUE(rep["errors"].is_null()); // no oracle in project mode
    EXPECT_GE(rep["iterations"].get<int>(), 1);
    EXPECT_LE(rep["iterations"].get<int>(), 6);
    for (const auto& it : rep["per_iteration"]) {
        EXPECT_TRUE(std::isfinite(it["l"].get<double>()));
        EXPECT_TRUE(std::isfinite(it["c"].get<double>()));
    }
    EXPECT_GT(rep["totals"]["memory_bytes"].get<std::size_t>(), 0u);
}

TEST(CliVerify, ErrorsFilledAndDeterministic) {
    CmdResult g = run("generate --n 96 --band 1 --gap 1e-1 --out /tmp/specproj_g3.sbm");
    ASSERT_EQ(g.exit_code, 0);
    CmdResult r1 = run("verify --in /tmp/specproj_g3.sbm --nmin 24 --report /tmp/specproj_v1.json");
    CmdResult r2 = run("verify --in /tmp/specproj_g3.sbm --nmin 24 --report /tmp/specproj_v2.json");
    ASSERT_EQ(r1.exit_code, 0);
    ASSERT_EQ(r2.exit_code, 0);
    json a = json::parse(slurp("/tmp/specproj_v1.json"));
    json b = json::parse(slurp("/tmp/specproj_v2.json"));
    EXPECT_FALSE(a["errors"].is_null());
    EXPECT_LT(a["errors"]["e_id"].get<double>(), 1e-8);
    EXPECT_EQ(strip_wall_times(a), strip_wall_times(b)); // identical modulo wall time
}

TEST(CliVerify, OracleCapExit5) {
    CmdResult r = run("verify --in /tmp/specproj_g3.sbm --oracle-cap 64");
    EXPECT_EQ(r.exit_code, 5);
    // environment variable path
    const std::string cmd = "SPECPROJ_ORACLE_CAP=64 " + std::string(SPECPROJ_CLI_PATH) +
                            " verify --in /tmp/specproj_g3.sbm 2>/dev/null";
    const int status = std::system(cmd.c_str());
    EXPECT_EQ(WEXITSTATUS(status), 5);
}

TEST(CliProject, CholeskyBreakdownExit4) {
    // tiny gap with a coarse tolerance: the first Cholesky iterate has a huge
    // weight c_1, so truncation error c_1*eps dwarfs lambda_min(Z) = 1
    CmdResult g = run("generate --n 256 --band 1 --gap 1e-8 --seed 19 --out /tmp/specproj_g4.sbm");
    ASSERT_EQ(g.exit_code, 0);
    CmdResult r = run("project --in /tmp/specproj_g4.sbm --nmin 32 --eps 1e-2");
    EXPECT_EQ(r.exit_code, 4);
}

TEST(CliRankscan, SingleRowSanity) {
    CmdResult r = run("rankscan --n 128 --band 1 --gaps 1e-1 --eps-list 1e-10 --nmin 32");
    ASSERT_EQ(r.exit_code, 0);
    std::istringstream is(r.out);
    std::string header, row;
    std::getline(is, header);
    EXPECT_EQ(header, "gap,eps,max_rank,e_id,e_trace,e_sp,decay_margin");
    ASSERT_TRUE(static_cast<bool>(std::getline(is, row)));
    double gap, eps, e_id, e_trace, e_sp, margin;
    int rank;
    ASSERT_EQ(std::sscanf(row.c_str(), "%lg,%lg,%d,%lg,%lg,%lg,%lg", &gap, &eps, &rank, &e_id,
                          &e_trace, &e_sp, &margin),
              7);
    EXPECT_EQ(gap, 0.1);
    EXPECT_LT(e_id, 1e-8);
    EXPECT_LE(margin, 1.0);
}

TEST(CliBench, CsvWellFormed) {
    CmdResult r = run("bench --sizes 64,128 --band 1 --gap 1e-1 --nmin 16 --repeat 1");
    ASSERT_EQ(r.exit_code, 0);
    std::istringstream is(r.out);
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "n,b,wall_ms,memory_bytes,max_rank");
    int rows = 0;
    std::string row;
    while (std::getline(is, row))
        if (!row.empty()) ++rows;
    EXPECT_EQ(rows, 2);
}

TEST(CliGivensRoundTrip, SbmPrecision) {
    // full round-trip precision through the text format
    SpectrumSpec spec = SpectrumSpec::uniform_two_sided(48, 1e-3);
    BandedSymmetric A = synth_banded(spec, 3, 9);
    write_sbm("/tmp/specproj_rt.sbm", A);
    BandedSymmetric B = read_sbm("/tmp/specproj_rt.sbm");
    for (int d = 0; d <= 3; ++d)
        for (std::size_t i = 0; i < A.bands[d].size(); ++i)
            EXPECT_EQ(A.bands[d][i], B.bands[d][i]);
}
