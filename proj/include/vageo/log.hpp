#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "vageo/config.hpp"

namespace vageo {

// One JSON object per line: {"event": ..., <fields>}, copied to every sink.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(std::ostream* out) : sinks_{out} {}

  void add_sink(std::ostream* out) { sinks_.push_back(out); }
  void write(const std::string& event, const Json& fields = Json::object()) const;

 private:
  std::vector<std::ostream*> sinks_;
};

}  // namespace vageo
