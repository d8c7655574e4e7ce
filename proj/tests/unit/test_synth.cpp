#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>

#include "cmine/error.hpp"
#include "cmine/synth.hpp"
#include "doctest.h"
#include "schema_gen.hpp"
#include "test_support.hpp"

using namespace cmine;
using namespace cmine::synth;
using cmine::testing::read_file;
using cmine::testing::TempDir;
using cmine::testing::write_file;
using nlohmann::ordered_json;

namespace {

std::vector<mining::CulturePoint> cluster(std::size_t cluster_id, std::size_t n) {
    std::vector<mining::CulturePoint> out;
    for (std::size_t i = 0; i < n; ++i) {
        mining::CulturePoint cp;
        cp.id = "c" + std::to_string(cluster_id) + "_" + std::to_string(i);
        cp.title = "Title " + std::to_string(i);
        cp.leading_paragraph = "Paragraph " + std::to_string(i) + ".";
        cp.lang = "ja";
        cp.cluster_id = cluster_id;
        cp.cluster_size = n;
        cp.centrality_rank = n - i;  // reverse order on purpose
        out.push_back(cp);
    }
    return out;
}

std::vector<ValidationCode> codes(const ValidationResult& r) {
    std::vector<ValidationCode> out;
    if (const auto* issues = std::get_if<std::vector<ValidationIssue>>(&r))
        for (const auto& i : *issues) out.push_back(i.code);
    return out;
}

bool has(const ValidationResult& r, ValidationCode c) {
    const auto cs = codes(r);
    return std::find(cs.begin(), cs.end(), c) != cs.end();
}

struct SlowClient final : LlmClient {
    std::chrono::milliseconds delay;
    std::atomic<int> active{0};
    std::atomic<int> peak{0};
    explicit SlowClient(std::chrono::milliseconds d) : delay(d) {}
    std::string model_id() const override { return "slow"; }
    std::string complete(const std::string& prompt) override {
        const int now = ++active;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(delay);
        --active;
        return MockClient{}.complete(prompt);
    }
};

struct FailingClient final : LlmClient {
    std::string model_id() const override { return "failing"; }
    std::string complete(const std::string&) override { throw TransportError("connection reset"); }
};

const auto fixed_clock = [] { return std::string("2024-01-01T00:00:00Z"); };

}  // namespace

TEST_CASE("task type names") {
    for (TaskType t : k_all_task_types) CHECK(parse_task_type(to_string(t)) == t);
    CHECK_THROWS_AS(parse_task_type("essay"), ArgumentError);
}

TEST_CASE("templates carry the placeholder and their schema keys") {
    for (TaskType t : k_all_task_types) {
        const auto tmpl = prompt_template(t);
        CHECK(tmpl.find(k_input_placeholder) != std::string_view::npos);
        CHECK(tmpl.find("\"question_type\": \"" + std::string(to_string(t)) + "\"") != std::string_view::npos);
        CHECK(tmpl.find("\"correct_answer\"") != std::string_view::npos);
        CHECK(tmpl.find("\"reason\"") != std::string_view::npos);
    }
    CHECK(prompt_template(TaskType::single_choice).find("\"options\"") != std::string_view::npos);
    CHECK(prompt_template(TaskType::true_false).find("\"statement\"") != std::string_view::npos);
}

TEST_CASE("build_prompt uses the top entries by centrality") {
    const auto c = cluster(7, 15);
    const auto task = build_prompt(c, TaskType::true_false, 10);
    CHECK(task.cluster_id == 7);
    CHECK(task.task_type == TaskType::true_false);
    CHECK(task.prompt.find(k_input_placeholder) == std::string::npos);
    CHECK(task.prompt.find(task.input_text) != std::string::npos);
    // rank 1 is the last element; ranks 1..10 are entries 14..5
    CHECK(task.input_text.rfind("Title 14\nParagraph 14.", 0) == 0);
    CHECK(task.input_text.find("Title 5\n") != std::string::npos);
    CHECK(task.input_text.find("Title 4\n") == std::string::npos);

    SUBCASE("n larger than the cluster takes everything") {
        const auto all = build_prompt(c, TaskType::short_answer, 100);
        for (int i = 0; i < 15; ++i)
            CHECK(all.input_text.find("Title " + std::to_string(i) + "\n") != std::string::npos);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(build_prompt({}, TaskType::single_choice), ArgumentError);
        CHECK_THROWS_AS(build_prompt(c, TaskType::single_choice, 0), ArgumentError);
    }
}

TEST_CASE("assemble_input_text layout") {
    auto c = cluster(1, 2);
    CHECK(assemble_input_text(c) == "Title 0\nParagraph 0.\n\nTitle 1\nParagraph 1.");
}

TEST_CASE("build_tasks is one task per cluster and type, clusters ascending") {
    auto a = cluster(9, 3);
    auto b = cluster(2, 4);
    std::vector<mining::CulturePoint> all(a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    const auto tasks = build_tasks(all, 10, 2);
    REQUIRE(tasks.size() == 12);
    CHECK(tasks.front().cluster_id == 2);
    CHECK(tasks.back().cluster_id == 9);
    CHECK(tasks[0].task_type == TaskType::single_choice);
    CHECK(tasks[1].task_type == TaskType::single_choice);
    CHECK(tasks[2].task_type == TaskType::true_false);
    const auto groups = group_by_cluster(all);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].front().centrality_rank == 1);
}

TEST_CASE("validate_response examples") {
    const std::string good =
        R"({"question_type":"single_choice","question":"Which is specifically true?",)"
        R"("options":{"A":"a","B":"b","C":"c","D":"d"},"correct_answer":"B","reason":"because"})";
    CHECK(accepted(validate_response(good, TaskType::single_choice)));
    CHECK(accepted(validate_response("  \n" + good + "\n ", TaskType::single_choice)));

    std::string bad_letter = good;
    bad_letter.replace(bad_letter.find("\"B\","), 4, "\"E\",");
    CHECK(has(validate_response(bad_letter, TaskType::single_choice), ValidationCode::illegal_answer));

    CHECK(codes(validate_response("Sure! " + good, TaskType::single_choice)) ==
          std::vector{ValidationCode::extra_prose});
    CHECK(codes(validate_response("```json\n" + good + "\n```", TaskType::single_choice)) ==
          std::vector{ValidationCode::extra_prose});
    CHECK(codes(validate_response("no json here", TaskType::single_choice)) ==
          std::vector{ValidationCode::not_json});
    CHECK(codes(validate_response("[1,2]", TaskType::single_choice)) == std::vector{ValidationCode::not_object});
    CHECK(has(validate_response(good, TaskType::true_false), ValidationCode::question_type_mismatch));

    const std::string tf = R"({"question_type":"true_false","statement":"s","reason":"r","correct_answer":"true"})";
    CHECK(has(validate_response(tf, TaskType::true_false), ValidationCode::illegal_answer));
    const std::string typed = R"({"question_type":"short_answer","question":1,"reason":"r","correct_answer":"x"})";
    CHECK(has(validate_response(typed, TaskType::short_answer), ValidationCode::wrong_type));
    const std::string empty = R"({"question_type":"short_answer","question":"  ","reason":"r","correct_answer":"x"})";
    CHECK(has(validate_response(empty, TaskType::short_answer), ValidationCode::empty_value));
    const std::string opts = R"({"question_type":"single_choice","question":"q","options":["a"],"correct_answer":"A","reason":"r"})";
    CHECK(has(validate_response(opts, TaskType::single_choice), ValidationCode::wrong_type));
}

TEST_CASE("conforming objects pass and single-key deletions fail") {
    Rng rng(42);
    for (TaskType t : k_all_task_types) {
        for (int i = 0; i < 100; ++i) {
            const auto obj = cmine::testing::random_conforming(t, rng);
            const auto r = validate_response(obj.dump(), t);
            REQUIRE(accepted(r));
            CHECK(std::get<ordered_json>(r) == obj);
            for (const auto& m : cmine::testing::deletion_mutants(obj)) {
                const auto mr = validate_response(m.dump(), t);
                CHECK_FALSE(accepted(mr));
                CHECK(has(mr, ValidationCode::missing_key));
            }
            CHECK_FALSE(accepted(validate_response("Here you go: " + obj.dump(), t)));
        }
    }
}

TEST_CASE("mock client output validates for every type") {
    MockClient client;
    for (TaskType t : k_all_task_types) {
        const auto task = build_prompt(cluster(0, 3), t);
        CHECK(accepted(validate_response(client.complete(task.prompt), t)));
    }
}

TEST_CASE("dataset emit and read") {
    TempDir dir;
    const auto path = dir / "out" / "dataset.jsonl";
    Rng rng(3);
    std::vector<InstructionRecord> records;
    for (TaskType t : k_all_task_types)
        records.push_back({t, cmine::testing::random_conforming(t, rng), 4, {"m", "2024-01-01T00:00:00Z"}});
    emit_dataset(records, path);
    const auto back = read_dataset(path);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].task_type == records[i].task_type);
        CHECK(back[i].payload == records[i].payload);
        CHECK(back[i].cluster_id == 4);
        CHECK(back[i].provenance.model == "m");
    }
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));

    SUBCASE("overwrite replaces the whole file") {
        emit_dataset({}, path);
        CHECK(read_file(path).empty());
        CHECK(read_dataset(path).empty());
    }
    SUBCASE("malformed lines are a format error") {
        write_file(path, "{\"task_type\": \"essay\"}\n");
        CHECK_THROWS(read_dataset(path));
        write_file(path, "not json\n");
        CHECK_THROWS_AS(read_dataset(path), FormatError);
    }
}

TEST_CASE("replay client") {
    TempDir dir;
    write_file(dir / "r.jsonl",
               "{\"prompt\":\"p1\",\"response\":\"r1\",\"model\":\"gpt-x\"}\n\n{\"prompt\":\"p2\",\"response\":\"r2\"}\n");
    auto client = ReplayClient::from_file(dir / "r.jsonl");
    CHECK(client.model_id() == "gpt-x");
    CHECK(client.complete("p1") == "r1");
    CHECK(client.complete("p2") == "r2");
    CHECK_THROWS_AS(client.complete("p3"), TransportError);
    write_file(dir / "bad.jsonl", "{\"prompt\":\"p\"}\n");
    CHECK_THROWS_AS(ReplayClient::from_file(dir / "bad.jsonl"), FormatError);
    CHECK_THROWS_AS(ReplayClient::from_file(dir / "missing.jsonl"), IoError);
}

TEST_CASE("dispatch keeps order, bounds concurrency and records failures") {
    auto cps = cluster(0, 3);
    auto more = cluster(1, 3);
    cps.insert(cps.end(), more.begin(), more.end());
    const auto tasks = build_tasks(cps, 10, 2);
    REQUIRE(tasks.size() == 12);

    SUBCASE("bounded") {
        SlowClient client(std::chrono::milliseconds(20));
        const auto out = dispatch(tasks, client, DispatchOptions{3, std::chrono::seconds(10)}, fixed_clock);
        REQUIRE(out.size() == tasks.size());
        CHECK(client.peak.load() <= 3);
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i].task.prompt == tasks[i].prompt);
            REQUIRE(out[i].record.has_value());
            CHECK(out[i].record->task_type == tasks[i].task_type);
            CHECK(out[i].record->provenance.model == "slow");
            CHECK(out[i].record->provenance.timestamp == "2024-01-01T00:00:00Z");
        }
    }
    SUBCASE("timeout") {
        SlowClient client(std::chrono::milliseconds(200));
        const auto out = dispatch(std::span(tasks).first(2), client,
                                  DispatchOptions{1, std::chrono::milliseconds(10)}, fixed_clock);
        CHECK(out[0].error == "timeout");
        CHECK_FALSE(out[0].record.has_value());
    }
    SUBCASE("transport failure") {
        FailingClient client;
        const auto out = dispatch(tasks, client, DispatchOptions{}, fixed_clock);
        for (const auto& o : out) {
            CHECK(o.error.find("connection reset") != std::string::npos);
            CHECK_FALSE(o.record.has_value());
        }
    }
    SUBCASE("invalid replies keep their issues") {
        ReplayClient client;
        for (const auto& t : tasks) client.add(t.prompt, "Sure! {\"a\": 1}");
        const auto out = dispatch(tasks, client, DispatchOptions{}, fixed_clock);
        for (const auto& o : out) {
            CHECK_FALSE(o.record.has_value());
            REQUIRE(o.issues.size() == 1);
            CHECK(o.issues[0].code == ValidationCode::extra_prose);
            CHECK(o.raw == "Sure! {\"a\": 1}");
        }
    }
}
