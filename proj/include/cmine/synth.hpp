#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cmine/mining.hpp"
#include "json.hpp"

namespace cmine::synth {

enum class TaskType { single_choice, true_false, short_answer };

inline constexpr TaskType k_all_task_types[] = {TaskType::single_choice, TaskType::true_false,
                                                TaskType::short_answer};

std::string_view to_string(TaskType t);
// Throws ArgumentError for an unknown name.
TaskType parse_task_type(std::string_view name);

inline constexpr std::string_view k_input_placeholder = "{{INPUT_TEXT}}";
inline constexpr std::string_view k_template_version = "v1";

std::string_view prompt_template(TaskType t);

struct SynthesisTask {
    std::size_t cluster_id = 0;
    TaskType task_type = TaskType::single_choice;
    std::string input_text;
    std::string prompt;
};

// Title + "\n" + leading paragraph per entry, entries separated by a blank line.
std::string assemble_input_text(std::span<const mining::CulturePoint> entries);

// Renders the template for `type` with the cluster's top-n entries by centrality rank.
// Throws ArgumentError on an empty cluster or n == 0.
SynthesisTask build_prompt(std::span<const mining::CulturePoint> cluster, TaskType type,
                           std::size_t n = 10);

// Groups CPs by cluster id, ascending, each group sorted by centrality rank then id.
std::vector<std::vector<mining::CulturePoint>> group_by_cluster(
    std::span<const mining::CulturePoint> cps);

// One task per (cluster, type, repetition), clusters ascending.
std::vector<SynthesisTask> build_tasks(std::span<const mining::CulturePoint> cps,
                                       std::size_t n = 10, std::size_t per_type = 1);

enum class ValidationCode {
    not_json,
    extra_prose,
    not_object,
    missing_key,
    wrong_type,
    empty_value,
    illegal_answer,
    question_type_mismatch,
};

std::string_view to_string(ValidationCode c);

struct ValidationIssue {
    ValidationCode code;
    std::string detail;
};

using ValidationResult = std::variant<nlohmann::ordered_json, std::vector<ValidationIssue>>;

// Accepts exactly one JSON object (surrounding whitespace allowed) matching the schema
// of `type`; otherwise returns every issue found.
ValidationResult validate_response(std::string_view text, TaskType type);

inline bool accepted(const ValidationResult& r) {
    return std::holds_alternative<nlohmann::ordered_json>(r);
}

struct Provenance {
    std::string model;
    std::string timestamp;
};

struct InstructionRecord {
    TaskType task_type = TaskType::single_choice;
    nlohmann::ordered_json payload;
    std::size_t cluster_id = 0;
    Provenance provenance;
};

nlohmann::ordered_json to_json(const InstructionRecord& r);
InstructionRecord record_from_json(const nlohmann::ordered_json& j);

// JSONL, one record per line; written to a temporary file then renamed into place.
void emit_dataset(std::span<const InstructionRecord> records, const std::filesystem::path& path);
std::vector<InstructionRecord> read_dataset(const std::filesystem::path& path);

// Sends a prompt, returns the raw model text.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string model_id() const = 0;
    virtual std::string complete(const std::string& prompt) = 0;
};

// Replays recorded responses keyed by prompt text.
class ReplayClient final : public LlmClient {
public:
    explicit ReplayClient(std::string model = "replay");
    void add(std::string prompt, std::string response);
    // JSONL lines of {"prompt": "...", "response": "..."}.
    static ReplayClient from_file(const std::filesystem::path& path);
    std::string model_id() const override { return model_; }
    std::string complete(const std::string& prompt) override;

private:
    std::string model_;
    std::unordered_map<std::string, std::string> responses_;
};

// Answers every prompt with a schema-conforming object built from the prompt's input.
class MockClient final : public LlmClient {
public:
    std::string model_id() const override { return "mock-synth"; }
    std::string complete(const std::string& prompt) override;
};

struct DispatchOptions {
    std::size_t max_in_flight = 4;
    std::chrono::milliseconds timeout{std::chrono::seconds(120)};
};

struct TaskOutcome {
    SynthesisTask task;
    std::string raw;
    std::optional<InstructionRecord> record;
    std::vector<ValidationIssue> issues;
    std::string error;  // transport failure or timeout
};

// Sends every task with bounded concurrency and validates each reply. Results keep task order.
std::vector<TaskOutcome> dispatch(std::span<const SynthesisTask> tasks, LlmClient& client,
                                  const DispatchOptions& options,
                                  const std::function<std::string()>& clock);

}  // namespace cmine::synth
