#pragma once

// JSON encodings shared by the report writer and the CLI's structured output.

#include <nlohmann/json.hpp>

#include "qibla/dataio.hpp"

namespace qibla {

nlohmann::ordered_json to_json(const GeoCoordinate& c);
nlohmann::ordered_json to_json(const CalibrationState& c);
nlohmann::ordered_json to_json(const ReportSummary& s);
nlohmann::ordered_json to_json(const Report& r);

// {"format": "qibla-report", "version": 1, "meta": meta}
nlohmann::ordered_json report_envelope(nlohmann::ordered_json meta);

}  // namespace qibla
