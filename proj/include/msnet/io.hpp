#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "msnet/evaluate.hpp"
#include "msnet/pipeline.hpp"

namespace msnet {

inline constexpr const char* kModelFormatTag = "lstm-msnet-model v1";
inline constexpr const char* kMetricsFormatTag = "#lstm-msnet-metrics v1";
inline constexpr const char* kSignificanceFormatTag = "#lstm-msnet-significance v1";
inline constexpr const char* kSeriesCsvHeader = "series_id,index,value";
inline constexpr const char* kForecastCsvHeader = "series_id,step,forecast";

/// Long CSV `series_id,index,value`; indices must run 0..K-1 per series.
/// Series keep the order of their first appearance. Periods and horizon are left unset.
SeriesCollection ingest_csv(const std::filesystem::path& path);
SeriesCollection parse_series_csv(std::istream& in);

void write_series_csv(std::ostream& out, const std::vector<TimeSeries>& series);

struct ForecastRow {
    std::string series_id;
    Vector values;
};

void write_forecast_csv(std::ostream& out, const ForecastResult& result);
std::vector<ForecastRow> read_forecast_csv(const std::filesystem::path& path);

/// Shortest round-trippable decimal for a double.
std::string format_double(double v);

struct MetricsReport {
    std::string method;
    double epsilon = 0.0;
    int season = 1;
    MetricSummary summary;
    std::vector<SeriesError> errors;
};

void write_metrics(std::ostream& out, const MetricsReport& report);
MetricsReport read_metrics(const std::filesystem::path& path);

/// Significance table: control method first, then the rest by adjusted p.
void write_significance(std::ostream& out, const SignificanceReport& sig, const std::vector<MetricsReport>& reports);

void save_model(std::ostream& out, const FittedModel& model);
FittedModel load_model(std::istream& in);
FittedModel load_model(const std::filesystem::path& path);

/// Writes to a temporary sibling, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace msnet
