#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>
#include <unistd.h>

#include "raterlab/io.hpp"

using namespace raterlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("raterlab_io_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name, const std::string& content) const {
        std::string p = (path / name).string();
        write_file(p, content);
        return p;
    }
};

} // namespace

TEST_CASE("csv parsing handles quotes, newlines, and crlf", "[io]") {
    auto rows = parse_csv("a,b,c\r\n\"x,1\",\"say \"\"hi\"\"\",\"two\nlines\"\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
    CHECK(rows[1][0] == "x,1");
    CHECK(rows[1][1] == "say \"hi\"");
    CHECK(rows[1][2] == "two\nlines");
    CHECK_THROWS_AS(parse_csv("\"unterminated"), ParseError);
    CHECK(parse_csv("a;b\n1;2\n", ';')[1][1] == "2");
    // Trailing empty fields survive.
    CHECK(parse_csv("a,\n")[0].size() == 2);
}

TEST_CASE("csv quoting round-trips through the parser", "[io]") {
    for (const std::string& v :
         {std::string("plain"), std::string("with,comma"), std::string("say \"hi\""),
          std::string("multi\nline"), std::string("")}) {
        auto rows = parse_csv("h\n" + csv_quote(v) + ",x\n");
        REQUIRE(rows.size() == 2);
        CHECK(rows[1][0] == v);
    }
}

TEST_CASE("number parsing is strict", "[io]") {
    CHECK(parse_number("3.5", "t") == 3.5);
    CHECK(parse_number(" 42 ", "t") == 42.0);
    CHECK(parse_number("-0.5", "t") == -0.5);
    CHECK_THROWS_AS(parse_number("3.5x", "t"), ParseError);
    CHECK_THROWS_AS(parse_number("", "t"), ParseError);
    CHECK_THROWS_AS(parse_number("na", "t"), ParseError);
}

TEST_CASE("ratings ingest builds the tensor and applies recodes", "[io]") {
    TempDir tmp;
    std::string path = tmp.file("ratings.csv",
                                "essay_id,rater_id,aspect,score\n"
                                "e2,r1,Accuracy,4.5\n"
                                "e1,r1,Accuracy,1.2\n"
                                "e1,r2,Accuracy,3\n"
                                "e2,r2,Accuracy,7.5\n"
                                "e1,r1,Holistic,55\n");
    IngestResult in = ingest_ratings(path);
    CHECK(in.n_records == 5);
    CHECK(in.tensor.essays == std::vector<std::string>{"e1", "e2"});
    CHECK(in.tensor.raters == std::vector<std::string>{"r1", "r2"});
    // 1.2 is on the half-step grid only after rounding; the published fix is
    // aspect-specific (Intelligibility), so Accuracy 1.2 rounds to 1.0.
    std::size_t acc = in.tensor.aspect_index(Aspect::Accuracy);
    CHECK(in.tensor.category(0, 0, acc) == 2);
    CHECK(in.tensor.recode_log.size() == 1);
    CHECK(in.tensor.recode_log[0].rule == "round");
    std::size_t hol = in.tensor.aspect_index(Aspect::Holistic);
    CHECK(in.tensor.category(0, 0, hol) == 6);
}

TEST_CASE("ingest validates the header and rows", "[io]") {
    TempDir tmp;
    CHECK_THROWS_AS(ingest_ratings(tmp.file("a.csv", "essay_id,rater_id,score\n")),
                    ParseError); // missing aspect column
    CHECK_THROWS_AS(
        ingest_ratings(tmp.file("b.csv", "essay_id,rater_id,aspect,score\n"
                                         "e1,r1,Accuracy\n")),
        ParseError); // short row
    CHECK_THROWS_AS(
        ingest_ratings(tmp.file("c.csv", "essay_id,rater_id,aspect,score\n"
                                         ",r1,Accuracy,3\n")),
        ParseError); // empty id
    CHECK_THROWS_AS(ingest_ratings((tmp.path / "missing.csv").string()),
                    ParseError);
}

TEST_CASE("a custom schema renames the columns", "[io]") {
    TempDir tmp;
    std::string path = tmp.file("alt.csv",
                                "sample,judge,dimension,points\n"
                                "e1,r1,Fluency,2.5\n"
                                "e2,r1,Fluency,8\n");
    IngestOptions opt;
    opt.schema.essay_id = "sample";
    opt.schema.rater_id = "judge";
    opt.schema.aspect = "dimension";
    opt.schema.score = "points";
    IngestResult in = ingest_ratings(path, opt);
    CHECK(in.n_records == 2);
    CHECK(in.tensor.category(0, 0, 0) == 5);
}

TEST_CASE("tensor json round-trips", "[io]") {
    TempDir tmp;
    std::string path = tmp.file("r.csv",
                                "essay_id,rater_id,aspect,score\n"
                                "e1,r1,Accuracy,4.5\n"
                                "e1,r2,Accuracy,5\n"
                                "e2,r1,Accuracy,2\n");
    RatingTensor t = ingest_ratings(path).tensor;
    RatingTensor back = tensor_from_json(tensor_to_json(t));
    CHECK(back.essays == t.essays);
    CHECK(back.raters == t.raters);
    CHECK(back.aspects == t.aspects);
    CHECK(back.cells == t.cells);
    CHECK(back.scales[0].max_category == t.scales[0].max_category);

    nlohmann::json bad = tensor_to_json(t);
    bad["cells"] = std::vector<int>{1, 2, 3};
    CHECK_THROWS_AS(tensor_from_json(bad), ParseError);
}

TEST_CASE("predictions load from long csv", "[io]") {
    TempDir tmp;
    std::string path = tmp.file("pred.csv",
                                "essay_id,aspect,score\n"
                                "e1,Accuracy,3.25\n"
                                "e2,Accuracy,7.5\n"
                                "e1,Fluency,2\n"
                                "e2,Fluency,6\n");
    PredictionSet p = load_predictions(path, "demo");
    CHECK(p.source_id == "demo");
    CHECK(p.essays == std::vector<std::string>{"e1", "e2"});
    CHECK(p.column(Aspect::Accuracy) == std::vector<double>{3.25, 7.5});
    CHECK(p.column(Aspect::Fluency) == std::vector<double>{2.0, 6.0});
    CHECK(p.essay_index("e2") == 1);
    CHECK_THROWS_AS(p.column(Aspect::Holistic), UnknownAspectError);
    CHECK_THROWS_AS(p.essay_index("e9"), DomainError);
}

TEST_CASE("prediction files must be rectangular and unique", "[io]") {
    TempDir tmp;
    CHECK_THROWS_AS(
        load_predictions(tmp.file("dup.csv", "essay_id,aspect,score\n"
                                             "e1,Accuracy,3\n"
                                             "e1,Accuracy,4\n"),
                         "s"),
        DuplicateError);
    CHECK_THROWS_AS(
        load_predictions(tmp.file("ragged.csv", "essay_id,aspect,score\n"
                                                "e1,Accuracy,3\n"
                                                "e2,Accuracy,4\n"
                                                "e1,Fluency,2\n"),
                         "s"),
        DomainError); // Fluency misses e2
    CHECK_THROWS_AS(load_predictions(tmp.file("none.csv", "essay_id,aspect,score\n"),
                                     "s"),
                    ParseError);
}

TEST_CASE("a custom score column can be selected", "[io]") {
    TempDir tmp;
    std::string path = tmp.file("multi.csv",
                                "essay_id,aspect,score,wavg\n"
                                "e1,Accuracy,3,3.25\n"
                                "e2,Accuracy,7,6.75\n");
    CHECK(load_predictions(path, "s").column(Aspect::Accuracy) ==
          std::vector<double>{3.0, 7.0});
    CHECK(load_predictions(path, "s", "wavg").column(Aspect::Accuracy) ==
          std::vector<double>{3.25, 6.75});
}

TEST_CASE("fair scores convert to a prediction-backed table", "[io]") {
    TempDir tmp;
    std::string path = tmp.file("fair.csv",
                                "essay_id,aspect,score\n"
                                "e1,Accuracy,3.2\n"
                                "e2,Accuracy,6.1\n");
    auto fair = fair_from_predictions(load_predictions(path, "fair"));
    REQUIRE(fair.count(Aspect::Accuracy) == 1);
    CHECK(fair.at(Aspect::Accuracy).expected_of("e2") == 6.1);
    CHECK(fair.at(Aspect::Accuracy).scale.step_value == 0.5);
}

TEST_CASE("essay texts load sorted with quoting intact", "[io]") {
    TempDir tmp;
    std::string path = tmp.file("essays.csv",
                                "essay_id,text\n"
                                "e2,\"I think, therefore\nI write.\"\n"
                                "e1,plain text\n");
    auto essays = load_essays(path);
    REQUIRE(essays.size() == 2);
    CHECK(essays[0].essay_id == "e1");
    CHECK(essays[1].text == "I think, therefore\nI write.");
    CHECK_THROWS_AS(load_essays(tmp.file("dup.csv", "essay_id,text\n"
                                                    "e1,a\n"
                                                    "e1,b\n")),
                    DuplicateError);
    CHECK_THROWS_AS(load_essays(tmp.file("bad.csv", "essay_id,body\ne1,a\n")),
                    ParseError);
}
