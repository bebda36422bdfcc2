#pragma once

// CSV tables, SVG figures and the key=value run manifest.

#include "vcdd/experiments.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace vcdd {

// Column order of results.csv; reals use 17 significant digits.
const std::vector<std::string>& csv_columns();

void write_csv(const SweepResult& result, const std::filesystem::path& path);
SweepResult read_csv(const std::filesystem::path& path);

// Per-row wall time, kept out of results.csv so that file stays reproducible.
void write_timing_csv(const SweepResult& result, const std::filesystem::path& path);

struct SvgStyle {
  int width = 720;
  int panel_height = 240;
  std::string title;
};

// Train/test/bound (seed means, min-max test band) on a log x axis, then a norm^2
// panel, then an SV-count panel for SVM sweeps.
std::string svg_string(const SweepResult& result, const SvgStyle& style = {});
void render_svg(const SweepResult& result, const std::filesystem::path& path, const SvgStyle& style = {});

// Ordered key=value lines; '#' starts a comment line.
using Manifest = std::vector<std::pair<std::string, std::string>>;

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace vcdd
