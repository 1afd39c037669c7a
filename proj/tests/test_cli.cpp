#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "c4r/config.hpp"
#include "c4r/container.hpp"

using namespace c4r;

namespace {

std::string cli_path() { return C4R_CLI_PATH; }

struct RunResult {
    int exit_code;
    std::string out, err;
};

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    std::string out = testing::TempDir() + "cli_out_" + std::to_string(counter) + ".txt";
    std::string err = testing::TempDir() + "cli_err_" + std::to_string(counter) + ".txt";
    ++counter;
    std::string cmd = cli_path() + " " + args + " >" + out + " 2>" + err;
    int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string write_file(const std::string& name, const std::string& text) {
    std::string path = testing::TempDir() + name;
    std::ofstream f(path);
    f << text;
    return path;
}

} // namespace

TEST(Cli, NoSubcommandPrintsHelpAndFails) {
    RunResult r = run_cli("");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("generate"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) {
    RunResult r = run_cli("--no-such-flag");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("usage error"), std::string::npos);
}

TEST(Cli, HelpExitsZero) {
    RunResult r = run_cli("--help");
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_NE(r.out.find("distill"), std::string::npos);
}

TEST(Cli, GradcheckPasses) {
    RunResult r = run_cli("gradcheck --seed 1");
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_NE(r.out.find("(pass)"), std::string::npos);
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, PrintConfigRoundTripsDefaults) {
    RunResult r = run_cli("--print-config");
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.out, Config{}.print());
    // the printed text parses back to the same config
    EXPECT_EQ(Config::parse_text(r.out).print(), r.out);
}

TEST(Cli, PrintConfigEchoesOverrides) {
    std::string cfg = write_file("over.cfg", "embed_dim=24\nsteps=5\nteacher.pooling=first_token\n");
    RunResult r = run_cli("--config " + cfg + " --print-config");
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_NE(r.out.find("embed_dim=24\n"), std::string::npos);
    EXPECT_NE(r.out.find("steps=5\n"), std::string::npos);
    EXPECT_NE(r.out.find("teacher.pooling=first_token\n"), std::string::npos);
}

TEST(Cli, UnknownConfigKeyIsDataError) {
    std::string cfg = write_file("bad.cfg", "no_such_key=1\n");
    RunResult r = run_cli("--config " + cfg + " gradcheck");
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("unknown key"), std::string::npos);
}

TEST(Cli, GenerateIsByteDeterministic) {
    std::string a = testing::TempDir() + "gen_a";
    std::string b = testing::TempDir() + "gen_b";
    EXPECT_EQ(run_cli("generate --out " + a + " --seed 3 --count 6 --classes 3 --size 16").exit_code, 0);
    EXPECT_EQ(run_cli("generate --out " + b + " --seed 3 --count 6 --classes 3 --size 16").exit_code, 0);
    for (const char* name : {"img_00000.c4i", "img_00005.c4i", "labels.csv"}) {
        std::string fa = slurp(a + "/" + name), fb = slurp(b + "/" + name);
        EXPECT_FALSE(fa.empty());
        EXPECT_EQ(fa, fb) << name;
    }
    // a different seed changes the pixels
    std::string c = testing::TempDir() + "gen_c";
    EXPECT_EQ(run_cli("generate --out " + c + " --seed 4 --count 6 --classes 3 --size 16").exit_code, 0);
    EXPECT_NE(slurp(a + "/img_00000.c4i"), slurp(c + "/img_00000.c4i"));
}

TEST(Cli, EvalOnMissingDataIsDataError) {
    RunResult r = run_cli("eval --model /nonexistent.c4r --queries /nonexistent.tsv"
                          " --data /nonexistent_dir --out " + testing::TempDir() + "rep.csv");
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, EndToEndSmoke) {
    std::string dir = testing::TempDir() + "smoke";
    std::string cfg = write_file("smoke.cfg",
                                 "image_size=16\n"
                                 "embed_dim=16\n"
                                 "teacher.patch=8\n"
                                 "teacher.dim=16\n"
                                 "student.head_hidden=16\n"
                                 "steps=2\n"
                                 "batch=4\n"
                                 "disc_hidden=8\n"
                                 "pca_query_dim=4\n");
    ASSERT_EQ(run_cli("generate --out " + dir + " --seed 1 --count 8 --classes 2 --size 16").exit_code, 0);

    std::string ckpt = testing::TempDir() + "smoke_ckpt.c4r";
    std::string hist = testing::TempDir() + "smoke_hist.csv";
    RunResult dis = run_cli("--config " + cfg + " distill --data " + dir + " --out " + ckpt +
                            " --history " + hist);
    ASSERT_EQ(dis.exit_code, 0) << dis.err;
    EXPECT_EQ(slurp(hist).rfind("step,pca,gl,adv_student,disc,total,disc_accuracy\n", 0), 0u);

    std::string model = testing::TempDir() + "smoke_model.c4r";
    RunResult exp = run_cli("export --ckpt " + ckpt + " --out " + model);
    ASSERT_EQ(exp.exit_code, 0) << exp.err;
    ModelContainer exported = load_container(model);
    for (const auto& t : exported.tensors) {
        EXPECT_EQ(t.name.rfind("pca.", 0), std::string::npos) << t.name;
        EXPECT_EQ(t.name.rfind("disc.", 0), std::string::npos) << t.name;
    }

    // quantized export against the same data as calibration set
    std::string qmodel = testing::TempDir() + "smoke_model_q.c4r";
    RunResult qexp = run_cli("export --ckpt " + ckpt + " --out " + qmodel +
                             " --quantize int16 --calib " + dir);
    ASSERT_EQ(qexp.exit_code, 0) << qexp.err;
    EXPECT_NE(qexp.out.find("calibration mean cosine"), std::string::npos);

    // self-match: the embed output doubles as a one-row query store
    RunResult emb = run_cli("embed --model " + model + " --image " + dir + "/img_00000.c4i");
    ASSERT_EQ(emb.exit_code, 0) << emb.err;
    EXPECT_EQ(emb.out.rfind("dim=16\n", 0), 0u);
    std::string queries = write_file("smoke_queries.tsv", emb.out);

    RunResult lab = run_cli("label --model " + model + " --queries " + queries + " --image " +
                            dir + "/img_00000.c4i --threshold 0.99");
    ASSERT_EQ(lab.exit_code, 0) << lab.err;
    EXPECT_NE(lab.out.find("accepted"), std::string::npos);

    // per-class query store built from one exemplar of each class
    RunResult e0 = run_cli("embed --model " + model + " --image " + dir + "/img_00000.c4i");
    RunResult e1 = run_cli("embed --model " + model + " --image " + dir + "/img_00001.c4i");
    auto row = [](const std::string& out, const std::string& label) {
        std::size_t nl = out.find('\n');
        std::size_t tab = out.find('\t', nl);
        return label + out.substr(tab);
    };
    std::string store_text = "dim=16\n" + row(e0.out, "class0") + row(e1.out, "class1");
    std::string class_queries = write_file("smoke_class_queries.tsv", store_text);

    std::string report = testing::TempDir() + "smoke_report.csv";
    RunResult ev = run_cli("eval --model " + model + " --queries " + class_queries + " --data " +
                           dir + " --out " + report);
    ASSERT_EQ(ev.exit_code, 0) << ev.err;
    std::string csv = slurp(report);
    EXPECT_EQ(csv.rfind("class,auc,n_pos,n_neg\n", 0), 0u);
    EXPECT_NE(csv.find("class0,"), std::string::npos);
    EXPECT_NE(csv.find("class1,"), std::string::npos);
}
