#pragma once

#include <string>
#include <vector>

#include "lakegp/data.hpp"
#include "lakegp/metrics.hpp"

namespace lakegp {

// Fixed schemas (exact headers, UTF-8, LF newlines, ISO-8601 dates, decimal
// temperatures with at most six fractional digits):
//   ensemble.csv:  ref_date,horizon,depth,ensemble_id,temp_c
//   field.csv:     date,depth,temp_c
//   forecasts.csv: model,ref_date,horizon,depth,mean,sd,lo90,hi90
//   scores.csv:    model,group_key,group_value,rmse,log_score,coverage,width,n

/// Fixed-point with six fractional digits, trailing zeros trimmed.
std::string format_value(double v);

void write_ensemble_csv(const std::string& path, const RawEnsemble& data);
RawEnsemble read_ensemble_csv(const std::string& path);

void write_field_csv(const std::string& path, const FieldSeries& data);
FieldSeries read_field_csv(const std::string& path);

void write_forecasts_csv(const std::string& path, const std::vector<ForecastRecord>& records,
                         bool append);
std::vector<ForecastRecord> read_forecasts_csv(const std::string& path);

void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& rows);

}  // namespace lakegp
