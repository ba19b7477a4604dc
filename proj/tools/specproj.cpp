// Command-line front end: synthesis of banded test matrices, spectral
// projector computation via hQDWH, verification against the dense
// eigensolver oracle, rank/decay scans, and scaling benchmarks.
//
// Exit codes: 0 ok, 2 invalid flags, 3 I/O failure, 4 Cholesky breakdown,
// 5 oracle size cap exceeded.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "specproj/banded.hpp"
#include "specproj/estimates.hpp"
#include "specproj/fast_qr.hpp"
#include "specproj/hodlr.hpp"
#include "specproj/qdwh.hpp"
#include "specproj/synth.hpp"
#include "specproj/zolotarev.hpp"

using json = nlohmann::ordered_json;
using namespace specproj;

namespace {

constexpr int kExitFlags = 2;
constexpr int kExitIo = 3;
constexpr int kExitCholesky = 4;
constexpr int kExitOracleCap = 5;

int default_nmin(int b) { return b == 1 ? 250 : 500; }

int oracle_cap(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("SPECPROJ_ORACLE_CAP")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<int>(v);
    }
    return 4096;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

struct RunOutput {
    ProjectorResult result;
    double wall_ms = 0.0;
};

RunOutput run_hqdwh(const BandedSymmetric& A, int n_min, double eps, double delta) {
    using clock = std::chrono::steady_clock;
    RunOutput out;
    const auto t0 = clock::now();
    out.result = hqdwh(A, n_min, eps, delta);
    out.wall_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(clock::now() - t0)
            .count();
    return out;
}

json make_report(const std::string& file, const BandedSymmetric& A, double gap_or_nan,
                 long long seed_or_neg, int n_min, double eps, double delta, double shift,
                 const RunOutput& run, const ErrorMetrics* errors) {
    const ProjectorResult& r = run.result;
    json rep;
    rep["input"] = {{"file", file}, {"n", A.n}, {"b", A.b}};
    if (gap_or_nan == gap_or_nan)
        rep["input"]["gap"] = gap_or_nan;
    else
        rep["input"]["gap"] = nullptr;
    if (seed_or_neg >= 0)
        rep["input"]["seed"] = seed_or_neg;
    else
        rep["input"]["seed"] = nullptr;
    rep["params"] = {{"n_min", n_min}, {"eps", eps},   {"delta", delta},
                     {"shift", shift}, {"alpha", r.alpha}, {"l0", r.l0}};
    rep["iterations"] = r.iterations;
    rep["per_iteration"] = json::array();
    for (const auto& d : r.per_iteration)
        rep["per_iteration"].push_back({{"k", d.k},
                                        {"l", d.l},
                                        {"c", d.c},
                                        {"max_rank", d.max_rank},
                                        {"memory_bytes", d.memory_bytes},
                                        {"wall_ms", d.wall_ms}});
    if (errors)
        rep["errors"] = {{"e_id", errors->e_id}, {"e_trace", errors->e_trace},
                         {"e_sp", errors->e_sp}};
    else
        rep["errors"] = nullptr;
    const HodlrDiagnostics d = diagnostics(r.P);
    rep["totals"] = {{"wall_ms", run.wall_ms},
                     {"memory_bytes", d.memory_bytes},
                     {"max_rank", d.max_offdiag_rank},
                     {"trace_p", hodlr_trace(r.P)}};
    return rep;
}

int write_report(const json& rep, const std::string& path) {
    if (path.empty()) {
        std::cout << rep.dump(2) << "\n";
        return 0;
    }
    std::ofstream os(path);
    if (!os) {
        std::cerr << "error: cannot open report file " << path << "\n";
        return kExitIo;
    }
    os << rep.dump(2) << "\n";
    return os ? 0 : kExitIo;
}

int cmd_generate(int n, int band, double gap, long long seed, const std::string& out) {
    if (n < 2 || band < 1 || band >= n || !(gap > 0.0) || gap > 1.0) {
        std::cerr << "error: require n >= 2, 1 <= band < n, 0 < gap <= 1\n";
        return kExitFlags;
    }
    SpectrumSpec spec = SpectrumSpec::uniform_two_sided(n, gap);
    BandedSymmetric A = synth_banded(spec, band, seed < 0 ? 0 : static_cast<std::uint64_t>(seed));
    try {
        write_sbm(out, A);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    std::cout << "wrote " << out << ": n=" << n << " b=" << band << " gap=" << fmt(gap)
              << " nu=" << spec.negative_count() << " spectrum=[-1,-" << fmt(gap) << "] u ["
              << fmt(gap) << ",1]\n";
    return 0;
}

int load_matrix(const std::string& path, double shift, BandedSymmetric& A) {
    try {
        A = read_sbm(path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    if (shift != 0.0)
        for (int i = 0; i < A.n; ++i) A.bands[0][i] -= shift;
    return 0;
}

int cmd_project(const std::string& in, int n_min, double eps, double delta, double shift,
                const std::string& report_path, const std::string& dump_path) {
    BandedSymmetric A;
    if (int rc = load_matrix(in, shift, A)) return rc;
    const int nm = n_min > 0 ? n_min : default_nmin(A.b);
    RunOutput run;
    try {
        run = run_hqdwh(A, nm, eps, delta);
    } catch (const NotPositiveDefiniteError& e) {
        std::cerr << "error: " << e.what()
                  << " (formatted Cholesky lost definiteness; try a smaller --eps)\n";
        return kExitCholesky;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFlags;
    }
    if (!dump_path.empty()) {
        if (A.n > 8192) {
            std::cerr << "error: --dump-projector is limited to n <= 8192\n";
            return kExitFlags;
        }
        Matrix P = to_dense(run.result.P);
        std::ofstream os(dump_path);
        if (!os) {
            std::cerr << "error: cannot open " << dump_path << "\n";
            return kExitIo;
        }
        os << "DENSE " << A.n << "\n";
        for (int i = 0; i < A.n; ++i) {
            for (int j = 0; j < A.n; ++j) os << fmt(P(i, j)) << (j + 1 == A.n ? "" : " ");
            os << "\n";
        }
        if (!os) return kExitIo;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return write_report(make_report(in, A, nan, -1, nm, eps, delta, shift, run, nullptr),
                        report_path);
}

int cmd_verify(const std::string& in, int n_min, double eps, double delta, double shift,
               const std::string& report_path, int cap_flag) {
    BandedSymmetric A;
    if (int rc = load_matrix(in, shift, A)) return rc;
    const int cap = oracle_cap(cap_flag);
    if (A.n > cap) {
        std::cerr << "error: n=" << A.n << " exceeds the dense oracle cap " << cap
                  << " (set SPECPROJ_ORACLE_CAP or --oracle-cap to raise it)\n";
        return kExitOracleCap;
    }
    const int nm = n_min > 0 ? n_min : default_nmin(A.b);
    RunOutput run;
    try {
        run = run_hqdwh(A, nm, eps, delta);
    } catch (const NotPositiveDefiniteError& e) {
        std::cerr << "error: " << e.what()
                  << " (formatted Cholesky lost definiteness; try a smaller --eps)\n";
        return kExitCholesky;
    }
    const SpectralOracle oracle = dense_spectral_projector(to_dense(A));
    const ErrorMetrics m = error_metrics(to_dense(run.result.U), oracle);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return write_report(make_report(in, A, nan, -1, nm, eps, delta, shift, run, &m), report_path);
}

int cmd_rankscan(int n, int band, const std::string& gaps_csv, const std::string& eps_csv,
                 int n_min, long long seed, const std::string& out_path, int cap_flag) {
    if (n < 2 || band < 1 || band >= n) {
        std::cerr << "error: require n >= 2, 1 <= band < n\n";
        return kExitFlags;
    }
    const std::vector<double> gaps = parse_list(gaps_csv);
    const std::vector<double> epss = parse_list(eps_csv);
    if (gaps.empty() || epss.empty()) {
        std::cerr << "error: --gaps and --eps-list must be nonempty\n";
        return kExitFlags;
    }
    const int cap = oracle_cap(cap_flag);
    if (n > cap) {
        std::cerr << "error: rankscan needs the dense oracle; n exceeds cap " << cap << "\n";
        return kExitOracleCap;
    }
    const int nm = n_min > 0 ? n_min : default_nmin(band);

    std::ostringstream csv;
    csv << "gap,eps,max_rank,e_id,e_trace,e_sp,decay_margin\n";
    for (double gap : gaps) {
        if (!(gap > 0.0) || gap > 1.0) {
            std::cerr << "error: gap out of range (0, 1]\n";
            return kExitFlags;
        }
        SpectrumSpec spec = SpectrumSpec::uniform_two_sided(n, gap);
        BandedSymmetric A =
            synth_banded(spec, band, seed < 0 ? 0 : static_cast<std::uint64_t>(seed));
        const SpectralOracle oracle = dense_spectral_projector(to_dense(A));
        const DecayReport decay = verify_decay(oracle.projector, band, gap, 32);
        for (double eps : epss) {
            RunOutput run;
            try {
                run = run_hqdwh(A, nm, eps, 1e-15);
            } catch (const NotPositiveDefiniteError& e) {
                std::cerr << "error: " << e.what() << " at eps=" << fmt(eps) << "\n";
                return kExitCholesky;
            }
            const ErrorMetrics m = error_metrics(to_dense(run.result.U), oracle);
            const HodlrDiagnostics d = diagnostics(run.result.P);
            csv << fmt(gap) << "," << fmt(eps) << "," << d.max_offdiag_rank << "," << fmt(m.e_id)
                << "," << fmt(m.e_trace) << "," << fmt(m.e_sp) << ","
                << fmt(decay.worst_margin) << "\n";
        }
    }
    if (out_path.empty()) {
        std::cout << csv.str();
        return 0;
    }
    std::ofstream os(out_path);
    if (!os) {
        std::cerr << "error: cannot open " << out_path << "\n";
        return kExitIo;
    }
    os << csv.str();
    return os ? 0 : kExitIo;
}

int cmd_bench(const std::string& sizes_csv, int band, double gap, int repeat, int n_min,
              const std::string& out_path) {
    const std::vector<double> sizes = parse_list(sizes_csv);
    if (sizes.empty() || band < 1 || !(gap > 0.0) || gap > 1.0 || repeat < 1) {
        std::cerr << "error: invalid bench flags\n";
        return kExitFlags;
    }
    std::ostringstream csv;
    csv << "n,b,wall_ms,memory_bytes,max_rank\n";
    for (double ns : sizes) {
        const int n = static_cast<int>(ns);
        if (n < 2 || band >= n) {
            std::cerr << "error: size " << n << " incompatible with band " << band << "\n";
            return kExitFlags;
        }
        SpectrumSpec spec = SpectrumSpec::uniform_two_sided(n, gap);
        BandedSymmetric A = synth_banded(spec, band, 0);
        const int nm = n_min > 0 ? n_min : default_nmin(band);
        double best_ms = 0.0;
        std::size_t mem = 0;
        int max_rank = 0;
        for (int r = 0; r < repeat; ++r) {
            RunOutput run;
            try {
                run = run_hqdwh(A, nm, 1e-10, 1e-15);
            } catch (const NotPositiveDefiniteError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitCholesky;
            }
            const HodlrDiagnostics d = diagnostics(run.result.P);
            if (r == 0 || run.wall_ms < best_ms) best_ms = run.wall_ms;
            mem = d.memory_bytes;
            max_rank = d.max_offdiag_rank;
        }
        csv << n << "," << band << "," << fmt(best_ms) << "," << mem << "," << max_rank << "\n";
        std::cerr << "bench n=" << n << " done: " << fmt(best_ms) << " ms, rank " << max_rank
                  << "\n";
    }
    if (out_path.empty()) {
        std::cout << csv.str();
        return 0;
    }
    std::ofstream os(out_path);
    if (!os) {
        std::cerr << "error: cannot open " << out_path << "\n";
        return kExitIo;
    }
    os << csv.str();
    return os ? 0 : kExitIo;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral projectors of symmetric banded matrices via hQDWH"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize a banded matrix with a two-sided spectrum");
    int g_n = 0, g_band = 1;
    double g_gap = 1e-1;
    long long g_seed = 0;
    std::string g_out;
    gen->add_option("--n", g_n, "dimension")->required();
    gen->add_option("--band", g_band, "bandwidth")->required();
    gen->add_option("--gap", g_gap, "spectral gap");
    gen->add_option("--seed", g_seed, "eigenvalue-order shuffle seed (0 = sorted)");
    gen->add_option("--out", g_out, "output SBM file")->required();

    // shared projector flags
    struct ProjFlags {
        std::string in, report, dump;
        int nmin = 0, cap = 0;
        double eps = 1e-10, delta = 1e-15, shift = 0.0;
    };
    ProjFlags pf, vf;

    auto* proj = app.add_subcommand("project", "compute the spectral projector in HODLR format");
    proj->add_option("--in", pf.in, "input SBM file")->required();
    proj->add_option("--nmin", pf.nmin, "minimal HODLR block size (0 = 250/500 default)");
    proj->add_option("--eps", pf.eps, "truncation tolerance");
    proj->add_option("--delta", pf.delta, "stopping tolerance");
    proj->add_option("--shift", pf.shift, "shift mu: project A - mu I");
    proj->add_option("--report", pf.report, "JSON report path (default stdout)");
    proj->add_option("--dump-projector", pf.dump, "dense text dump of P (desk scale)");

    auto* ver = app.add_subcommand("verify", "projector plus dense-oracle error metrics");
    ver->add_option("--in", vf.in, "input SBM file")->required();
    ver->add_option("--nmin", vf.nmin, "minimal HODLR block size (0 = 250/500 default)");
    ver->add_option("--eps", vf.eps, "truncation tolerance");
    ver->add_option("--delta", vf.delta, "stopping tolerance");
    ver->add_option("--shift", vf.shift, "shift mu: verify on A - mu I");
    ver->add_option("--report", vf.report, "JSON report path (default stdout)");
    ver->add_option("--oracle-cap", vf.cap, "dense oracle size cap (default 4096)");

    auto* scan = app.add_subcommand("rankscan", "accuracy/rank sweep over gaps and tolerances");
    int s_n = 512, s_band = 1, s_nmin = 0, s_cap = 0;
    long long s_seed = 0;
    std::string s_gaps = "1e-1", s_eps = "1e-10", s_out;
    scan->add_option("--n", s_n, "dimension");
    scan->add_option("--band", s_band, "bandwidth");
    scan->add_option("--gaps", s_gaps, "comma-separated gap list");
    scan->add_option("--eps-list", s_eps, "comma-separated truncation tolerances");
    scan->add_option("--nmin", s_nmin, "minimal HODLR block size");
    scan->add_option("--seed", s_seed, "synthesis seed");
    scan->add_option("--out", s_out, "CSV output path (default stdout)");
    scan->add_option("--oracle-cap", s_cap, "dense oracle size cap (default 4096)");

    auto* bench = app.add_subcommand("bench", "wall-time/memory scaling sweep (no oracle)");
    std::string b_sizes = "4096,8192", b_out;
    int b_band = 1, b_repeat = 1, b_nmin = 0;
    double b_gap = 1e-6;
    bench->add_option("--sizes", b_sizes, "comma-separated sizes");
    bench->add_option("--band", b_band, "bandwidth");
    bench->add_option("--gap", b_gap, "spectral gap");
    bench->add_option("--repeat", b_repeat, "repetitions per size (min is reported)");
    bench->add_option("--nmin", b_nmin, "minimal HODLR block size");
    bench->add_option("--out", b_out, "CSV output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitFlags;
    }

    try {
        if (gen->parsed()) return cmd_generate(g_n, g_band, g_gap, g_seed, g_out);
        if (proj->parsed())
            return cmd_project(pf.in, pf.nmin, pf.eps, pf.delta, pf.shift, pf.report, pf.dump);
        if (ver->parsed())
            return cmd_verify(vf.in, vf.nmin, vf.eps, vf.delta, vf.shift, vf.report, vf.cap);
        if (scan->parsed())
            return cmd_rankscan(s_n, s_band, s_gaps, s_eps, s_nmin, s_seed, s_out, s_cap);
        if (bench->parsed()) return cmd_bench(b_sizes, b_band, b_gap, b_repeat, b_nmin, b_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFlags;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
