#include "cmine/synth.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <future>
#include <map>

#include "cmine/error.hpp"
#include "cmine/random.hpp"

namespace cmine::synth {

namespace assets {
extern const std::string_view k_single_choice;
extern const std::string_view k_true_false;
extern const std::string_view k_short_answer;
}  // namespace assets

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(TaskType t) {
    switch (t) {
        case TaskType::single_choice: return "single_choice";
        case TaskType::true_false: return "true_false";
        case TaskType::short_answer: return "short_answer";
    }
    return "unknown";
}

TaskType parse_task_type(std::string_view name) {
    for (TaskType t : k_all_task_types)
        if (to_string(t) == name) return t;
    throw ArgumentError("unknown task type: " + std::string(name));
}

std::string_view prompt_template(TaskType t) {
    switch (t) {
        case TaskType::single_choice: return assets::k_single_choice;
        case TaskType::true_false: return assets::k_true_false;
        case TaskType::short_answer: return assets::k_short_answer;
    }
    throw ArgumentError("unknown task type");
}

std::string assemble_input_text(std::span<const mining::CulturePoint> entries) {
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += entries[i].title;
        out += "\n";
        out += entries[i].leading_paragraph;
    }
    return out;
}

namespace {

bool by_rank(const mining::CulturePoint& a, const mining::CulturePoint& b) {
    return a.centrality_rank != b.centrality_rank ? a.centrality_rank < b.centrality_rank : a.id < b.id;
}

std::string render(std::string_view tmpl, const std::string& input) {
    std::string out;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t hit = tmpl.find(k_input_placeholder, pos);
        if (hit == std::string_view::npos) break;
        out.append(tmpl.substr(pos, hit - pos));
        out.append(input);
        pos = hit + k_input_placeholder.size();
    }
    out.append(tmpl.substr(pos));
    return out;
}

}  // namespace

SynthesisTask build_prompt(std::span<const mining::CulturePoint> cluster, TaskType type, std::size_t n) {
    if (cluster.empty()) throw ArgumentError("cannot build a prompt for an empty cluster");
    if (n == 0) throw ArgumentError("N must be at least 1");
    std::vector<mining::CulturePoint> ordered(cluster.begin(), cluster.end());
    std::sort(ordered.begin(), ordered.end(), by_rank);
    if (ordered.size() > n) ordered.resize(n);

    SynthesisTask task;
    task.cluster_id = ordered.front().cluster_id;
    task.task_type = type;
    task.input_text = assemble_input_text(ordered);
    task.prompt = render(prompt_template(type), task.input_text);
    return task;
}

std::vector<std::vector<mining::CulturePoint>> group_by_cluster(std::span<const mining::CulturePoint> cps) {
    std::map<std::size_t, std::vector<mining::CulturePoint>> groups;
    for (const auto& cp : cps) groups[cp.cluster_id].push_back(cp);
    std::vector<std::vector<mining::CulturePoint>> out;
    for (auto& [id, g] : groups) {
        std::sort(g.begin(), g.end(), by_rank);
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<SynthesisTask> build_tasks(std::span<const mining::CulturePoint> cps, std::size_t n,
                                       std::size_t per_type) {
    std::vector<SynthesisTask> out;
    for (const auto& group : group_by_cluster(cps))
        for (TaskType t : k_all_task_types)
            for (std::size_t rep = 0; rep < per_type; ++rep) out.push_back(build_prompt(group, t, n));
    return out;
}

std::string_view to_string(ValidationCode c) {
    switch (c) {
        case ValidationCode::not_json: return "not_json";
        case ValidationCode::extra_prose: return "extra_prose";
        case ValidationCode::not_object: return "not_object";
        case ValidationCode::missing_key: return "missing_key";
        case ValidationCode::wrong_type: return "wrong_type";
        case ValidationCode::empty_value: return "empty_value";
        case ValidationCode::illegal_answer: return "illegal_answer";
        case ValidationCode::question_type_mismatch: return "question_type_mismatch";
    }
    return "unknown";
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

class SchemaCheck {
public:
    explicit SchemaCheck(const ordered_json& obj) : obj_(obj) {}

    // Returns the string value when present, well-typed and non-empty.
    const std::string* text(const ordered_json& parent, const std::string& key, const std::string& path) {
        auto it = parent.find(key);
        if (it == parent.end()) {
            issues.push_back({ValidationCode::missing_key, path});
            return nullptr;
        }
        if (!it->is_string()) {
            issues.push_back({ValidationCode::wrong_type, path + " must be a string"});
            return nullptr;
        }
        const auto* s = it->get_ptr<const std::string*>();
        if (trim(*s).empty()) {
            issues.push_back({ValidationCode::empty_value, path});
            return nullptr;
        }
        return s;
    }
    const std::string* text(const std::string& key) { return text(obj_, key, key); }

    void answer_in(const std::vector<std::string>& allowed) {
        const std::string* a = text("correct_answer");
        if (a && std::find(allowed.begin(), allowed.end(), *a) == allowed.end())
            issues.push_back({ValidationCode::illegal_answer, "correct_answer \"" + *a + "\""});
    }

    std::vector<ValidationIssue> issues;

private:
    const ordered_json& obj_;
};

}  // namespace

ValidationResult validate_response(std::string_view raw, TaskType type) {
    const std::string_view text = trim(raw);
    std::vector<ValidationIssue> issues;
    ordered_json obj = ordered_json::parse(text.begin(), text.end(), nullptr, false);
    if (obj.is_discarded()) {
        const auto open = text.find('{');
        const auto close = text.rfind('}');
        if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
            auto inner = json::parse(text.substr(open, close - open + 1), nullptr, false);
            if (!inner.is_discarded() && inner.is_object()) {
                issues.push_back({ValidationCode::extra_prose, "text surrounds the JSON object"});
                return issues;
            }
        }
        issues.push_back({ValidationCode::not_json, "response is not valid JSON"});
        return issues;
    }
    if (!obj.is_object()) {
        issues.push_back({ValidationCode::not_object, "response is not a JSON object"});
        return issues;
    }

    SchemaCheck check(obj);
    if (const std::string* qt = check.text("question_type"); qt && *qt != to_string(type))
        check.issues.push_back({ValidationCode::question_type_mismatch,
                                "question_type \"" + *qt + "\", expected " + std::string(to_string(type))});
    switch (type) {
        case TaskType::single_choice: {
            check.text("question");
            check.text("reason");
            auto opts = obj.find("options");
            if (opts == obj.end()) {
                check.issues.push_back({ValidationCode::missing_key, "options"});
            } else if (!opts->is_object()) {
                check.issues.push_back({ValidationCode::wrong_type, "options must be an object"});
            } else {
                for (const char* letter : {"A", "B", "C", "D"})
                    check.text(*opts, letter, std::string("options.") + letter);
            }
            check.answer_in({"A", "B", "C", "D"});
            break;
        }
        case TaskType::true_false:
            check.text("statement");
            check.text("reason");
            check.answer_in({"True", "False"});
            break;
        case TaskType::short_answer:
            check.text("question");
            check.text("reason");
            check.text("correct_answer");
            break;
    }
    if (!check.issues.empty()) return check.issues;
    return obj;
}

ordered_json to_json(const InstructionRecord& r) {
    return ordered_json{{"task_type", std::string(to_string(r.task_type))},
                        {"payload", r.payload},
                        {"cluster_id", r.cluster_id},
                        {"provenance", ordered_json{{"model", r.provenance.model},
                                                    {"timestamp", r.provenance.timestamp}}}};
}

InstructionRecord record_from_json(const ordered_json& j) {
    InstructionRecord r;
    r.task_type = parse_task_type(j.at("task_type").get<std::string>());
    r.payload = j.at("payload");
    r.cluster_id = j.at("cluster_id").get<std::size_t>();
    r.provenance.model = j.at("provenance").at("model").get<std::string>();
    r.provenance.timestamp = j.at("provenance").at("timestamp").get<std::string>();
    return r;
}

void emit_dataset(std::span<const InstructionRecord> records, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write dataset: " + tmp.string());
        for (const auto& r : records) out << to_json(r).dump() << '\n';
        out.flush();
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("cannot move dataset into place: " + path.string() + ": " + ec.message());
    }
}

std::vector<InstructionRecord> read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset: " + path.string());
    std::vector<InstructionRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(record_from_json(ordered_json::parse(line)));
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
    }
    return out;
}

ReplayClient::ReplayClient(std::string model) : model_(std::move(model)) {}

void ReplayClient::add(std::string prompt, std::string response) {
    responses_.insert_or_assign(std::move(prompt), std::move(response));
}

ReplayClient ReplayClient::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open replay file: " + path.string());
    ReplayClient client;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("prompt") || !j.contains("response"))
            throw FormatError("bad replay line in " + path.string());
        if (j.contains("model")) client.model_ = j["model"].get<std::string>();
        client.add(j["prompt"].get<std::string>(), j["response"].get<std::string>());
    }
    return client;
}

std::string ReplayClient::complete(const std::string& prompt) {
    auto it = responses_.find(prompt);
    if (it == responses_.end()) throw TransportError("no recorded response for prompt");
    return it->second;
}

std::string MockClient::complete(const std::string& prompt) {
    std::string topic = "the described tradition";
    const auto open = prompt.find("\"\"\"");
    if (open != std::string::npos) {
        const auto start = open + 3;
        const auto end = prompt.find_first_of("\n\"", start);
        if (end != std::string::npos && end > start) topic = prompt.substr(start, end - start);
    }
    ordered_json j;
    if (prompt.find("\"question_type\": \"single_choice\"") != std::string::npos) {
        j["question_type"] = "single_choice";
        j["question"] = "Which statement specifically describes " + topic + "?";
        j["options"] = ordered_json{{"A", "A regional variant"},
                                    {"B", "The traditional practice described"},
                                    {"C", "A stereotype from a neighbouring culture"},
                                    {"D", "A modern commercial adaptation"}};
        j["correct_answer"] = "B";
        j["reason"] = "The context describes " + topic + " directly.";
    } else if (prompt.find("\"question_type\": \"true_false\"") != std::string::npos) {
        j["question_type"] = "true_false";
        j["statement"] = topic + " is typically observed only in formal settings.";
        j["reason"] = "The context does not restrict it to formal settings.";
        j["correct_answer"] = "False";
    } else {
        j["question_type"] = "short_answer";
        j["question"] = "Why do people specifically value " + topic + "?";
        j["reason"] = "The context explains its cultural role.";
        j["correct_answer"] = "Because " + topic + " carries shared cultural meaning.";
    }
    return j.dump();
}

std::vector<TaskOutcome> dispatch(std::span<const SynthesisTask> tasks, LlmClient& client,
                                  const DispatchOptions& options,
                                  const std::function<std::string()>& clock) {
    std::vector<TaskOutcome> out(tasks.size());
    const std::size_t limit = std::max<std::size_t>(1, options.max_in_flight);
    std::deque<std::pair<std::size_t, std::future<std::string>>> in_flight;

    auto collect = [&](std::pair<std::size_t, std::future<std::string>>& slot) {
        TaskOutcome& o = out[slot.first];
        o.task = tasks[slot.first];
        if (slot.second.wait_for(options.timeout) != std::future_status::ready) {
            o.error = "timeout";
            return;
        }
        try {
            o.raw = slot.second.get();
        } catch (const std::exception& e) {
            o.error = e.what();
            return;
        }
        auto result = validate_response(o.raw, o.task.task_type);
        if (auto* payload = std::get_if<ordered_json>(&result)) {
            o.record = InstructionRecord{o.task.task_type, std::move(*payload), o.task.cluster_id,
                                         Provenance{client.model_id(), clock()}};
        } else {
            o.issues = std::get<std::vector<ValidationIssue>>(std::move(result));
        }
    };

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (in_flight.size() >= limit) {
            collect(in_flight.front());
            in_flight.pop_front();
        }
        in_flight.emplace_back(i, std::async(std::launch::async,
                                             [&client, &tasks, i] { return client.complete(tasks[i].prompt); }));
    }
    while (!in_flight.empty()) {
        collect(in_flight.front());
        in_flight.pop_front();
    }
    return out;
}

}  // namespace cmine::synth
