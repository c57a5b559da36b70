#include "vageo/log.hpp"

namespace vageo {

void EventLog::write(const std::string& event, const Json& fields) const {
  Json line;
  line["event"] = event;
  for (const auto& [key, value] : fields.items()) line[key] = value;
  const std::string text = line.dump();
  for (std::ostream* out : sinks_) {
    if (!out) continue;
    *out << text << '\n';
    out->flush();
  }
}

}  // namespace vageo
