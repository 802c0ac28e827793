// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(AXBXP_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    std::array<char, 4096> buf{};
    while (std::size_t got = fread(buf.data(), 1, buf.size(), pipe))
        r.output.append(buf.data(), got);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

const std::string dataset = AXBXP_SOURCE_DIR "/data/digits_8x8.csv";

std::size_t count_lines(const std::string& s, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = s.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

} // namespace

TEST_CASE("enumerate emits the table and counts") {
    const RunResult k3 = run("enumerate --k 3 --format csv");
    CHECK(k3.exit_code == 0);
    CHECK(count_lines(k3.output, "\n3,") == 3);

    const RunResult counts = run("enumerate --counts");
    CHECK(counts.exit_code == 0);
    CHECK(counts.output.find("2655") != std::string::npos);
    CHECK(counts.output.find("188") != std::string::npos);

    const RunResult bad = run("enumerate --k 5");
    CHECK(bad.exit_code != 0);
    CHECK(bad.output.find("error") != std::string::npos);
}

TEST_CASE("convert writes an AXBP file and reports the footprint") {
    const fs::path dir = fs::temp_directory_path() / "axbxp_cli_convert";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "input.csv") << "3,24,-7,100\n";

    const RunResult r = run("convert --input " + (dir / "input.csv").string() +
                            " --k 2 --nt 2 --mode dynamic --out " + (dir / "t.axbp").string());
    CHECK(r.exit_code == 0);
    // 4 data bits + 2 index bits + sign = 7 per element
    CHECK(r.output.find("\"per_element_bits\": 7") != std::string::npos);
    CHECK(r.output.find("\"data_index_bits\": 6") != std::string::npos);
    CHECK(fs::exists(dir / "t.axbp"));

    const RunResult missing = run("convert --input /nonexistent.csv --out " +
                                  (dir / "u.axbp").string());
    CHECK(missing.exit_code != 0);

    const RunResult bad_value = [&] {
        std::ofstream(dir / "bad.csv") << "300\n";
        return run("convert --input " + (dir / "bad.csv").string() + " --out " +
                   (dir / "v.axbp").string());
    }();
    CHECK(bad_value.exit_code != 0);
    fs::remove_all(dir);
}

TEST_CASE("train, eval, search and report drive the full pipeline") {
    const fs::path dir = fs::temp_directory_path() / "axbxp_cli_pipeline";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string ckpt = (dir / "ckpt").string();

    const RunResult trained =
        run("train --data " + dataset + " --epochs 12 --seed 1 --out " + ckpt);
    CHECK(trained.exit_code == 0);
    CHECK(trained.output.find("\"train_accuracy\"") != std::string::npos);

    const RunResult eval = run("eval --model " + ckpt + " --data " + dataset);
    CHECK(eval.exit_code == 0);
    CHECK(eval.output.find("\"accuracy\"") != std::string::npos);

    // permissive gamma: cheapest configs, exit 0
    const RunResult relaxed = run("search --model " + ckpt + " --data " + dataset +
                                  " --k 2 --gamma 100 --seed 1 --out " + (dir / "r1.json").string());
    CHECK(relaxed.exit_code == 0);
    {
        std::ifstream in(dir / "r1.json");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        CHECK(text.find("(2,1,1)") != std::string::npos);
        CHECK(text.find("\"best_effort\": false") != std::string::npos);
    }

    // impossible gamma on every layer including first/last: best effort, exit 2
    const RunResult strict = run("search --model " + ckpt + " --data " + dataset +
                                 " --k 2 --gamma 0 --max-epoch 0 --approx-first-last --seed 1" +
                                 " --out " + (dir / "r2.json").string());
    CHECK(strict.exit_code == 2);

    // deterministic: repeated run gives the identical report
    const RunResult again = run("search --model " + ckpt + " --data " + dataset +
                                " --k 2 --gamma 100 --seed 1 --out " + (dir / "r3.json").string());
    CHECK(again.exit_code == 0);
    std::ifstream a(dir / "r1.json"), b(dir / "r3.json");
    const std::string ta((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    const std::string tb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(ta == tb);

    const RunResult report = run("report --model " + ckpt + " --data " + dataset +
                                 " --format csv --fabric fusion");
    CHECK(report.exit_code == 0);
    CHECK(report.output.find("record,layer,tensor,key,bin,value") == 0);
    CHECK(report.output.find("mae_dynamic") != std::string::npos);

    const RunResult report_json = run("report --model " + ckpt);
    CHECK(report_json.exit_code == 0);
    CHECK(report_json.output.find("\"cost\"") != std::string::npos);

    fs::remove_all(dir);
}

TEST_CASE("missing checkpoint fails cleanly") {
    const RunResult r = run("eval --model /nonexistent_ckpt --data " + dataset);
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("unknown flags fail without writing files") {
    const RunResult r = run("enumerate --nope");
    CHECK(r.exit_code != 0);
}
