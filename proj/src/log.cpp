#include "cbmorph/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace cbmorph::log {

namespace {

Level from_env() {
    const char* v = std::getenv("CBMORPH_LOG");
    if (v == nullptr) return Level::Info;
    const std::string s(v);
    if (s == "debug") return Level::Debug;
    if (s == "warn") return Level::Warn;
    if (s == "error") return Level::Error;
    return Level::Info;
}

std::atomic<int>& current() {
    static std::atomic<int> level{static_cast<int>(from_env())};
    return level;
}

const char* name(Level l) {
    switch (l) {
        case Level::Debug: return "debug";
        case Level::Info: return "info";
        case Level::Warn: return "warn";
        case Level::Error: return "error";
    }
    return "info";
}

}  // namespace

Level threshold() { return static_cast<Level>(current().load()); }

void set_threshold(Level level) { current().store(static_cast<int>(level)); }

void emit(Level level, std::string_view event, const nlohmann::json& fields) {
    if (static_cast<int>(level) < current().load()) return;
    nlohmann::json line = {{"level", name(level)}, {"event", std::string(event)}};
    if (fields.is_object()) {
        for (auto it = fields.begin(); it != fields.end(); ++it) line[it.key()] = it.value();
    }
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    std::cerr << line.dump() << '\n';
}

}  // namespace cbmorph::log
