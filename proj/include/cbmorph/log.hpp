#pragma once

#include <string_view>

#include <json.hpp>

namespace cbmorph::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3 };

/// Threshold from CBMORPH_LOG (debug | info | warn | error), default info.
Level threshold();
void set_threshold(Level level);

/// One JSON object per line on stderr: {"level", "event", ...fields}.
void emit(Level level, std::string_view event, const nlohmann::json& fields = nlohmann::json::object());

inline void debug(std::string_view e, const nlohmann::json& f = nlohmann::json::object()) { emit(Level::Debug, e, f); }
inline void info(std::string_view e, const nlohmann::json& f = nlohmann::json::object()) { emit(Level::Info, e, f); }
inline void warn(std::string_view e, const nlohmann::json& f = nlohmann::json::object()) { emit(Level::Warn, e, f); }
inline void error(std::string_view e, const nlohmann::json& f = nlohmann::json::object()) { emit(Level::Error, e, f); }

}  // namespace cbmorph::log
