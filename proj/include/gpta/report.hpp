#pragma once

#include <string>
#include <vector>

#include "gpta/trainer.hpp"

namespace gpta {

// Header epoch,train_loss,val_best,val_empty,improvement_rate; one row per
// epoch with values at 6 decimals.
std::string metrics_csv(const RunReport& report);

// Static 800x480 line chart of the four per-epoch series. Byte-identical
// for identical input.
std::string curves_svg(const RunReport& report);

// Reads <run_dir>/report.json and writes metrics.csv and curves.svg into
// out_dir. Returns the written paths.
std::vector<std::string> emit_report(const std::string& run_dir, const std::string& out_dir);

}  // namespace gpta
