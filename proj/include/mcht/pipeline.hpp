#pragma once

// Plate-level orchestration and the on-disk artifact formats shared by the
// command-line stages. CSV files use '.' decimals, LF line endings and a
// header row; numbers are printed with fixed precision so equal inputs give
// byte-identical files.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edges.hpp"
#include "error.hpp"
#include "grid.hpp"
#include "hough.hpp"
#include "image.hpp"
#include "io.hpp"
#include "median.hpp"
#include "quantify.hpp"
#include "segment.hpp"
#include "synth.hpp"

namespace mcht
{

    struct PipelineParams
    {
        MedianParams median;
        CannyParams canny;
        ChtParams cht;
        GridSpec grid;
        int margin = 4;
    };

    /// Per-pixel mean of the two channels, used for localization.
    inline GrayImage composite(const ChannelPair &pair)
    {
        const auto r = pair.red().pixels(), g = pair.green().pixels();
        std::vector<GrayImage::value_type> px(r.size());
        for (std::size_t i = 0; i < r.size(); ++i)
            px[i] = static_cast<GrayImage::value_type>((static_cast<std::uint32_t>(r[i]) + g[i]) / 2);
        return GrayImage(pair.width(), pair.height(), pair.red().bit_depth(), std::move(px));
    }

    struct Detection
    {
        std::vector<Circle> circles; ///< strongest first
        SpotGrid grid;
    };

    /// Median filter, Canny, circular Hough, grid addressing.
    inline Detection detect_plate(const ChannelPair &pair, const PipelineParams &p)
    {
        Detection d;
        const GrayImage smoothed = median_filter(composite(pair), p.median);
        d.circles = detect_circles(smoothed, p.canny, p.cht);
        d.grid = assign_grid(d.circles, p.grid, pair.width(), pair.height());
        return d;
    }

    // ---------------------------------------------------------------- CSV

    inline std::string fmt_fixed(double v, int digits = 6)
    {
        if (v == 0.0)
            v = 0.0; // drop the sign of negative zero
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", digits, v);
        return buf;
    }

    inline std::vector<std::string> split_csv_line(const std::string &line)
    {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ','))
            out.push_back(cell);
        if (!line.empty() && line.back() == ',')
            out.emplace_back();
        return out;
    }

    /// Rows of a CSV file after checking the header.
    inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path &path, const std::string &expected_header)
    {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open " + path.string());
        std::string line;
        if (!std::getline(in, line) || line != expected_header)
            throw ParseError(path.string() + ": unexpected header, expected '" + expected_header + "'", 0);
        const auto n_cols = split_csv_line(expected_header).size();
        std::vector<std::vector<std::string>> rows;
        std::size_t offset = line.size() + 1;
        while (std::getline(in, line))
        {
            if (!line.empty())
            {
                auto cells = split_csv_line(line);
                if (cells.size() != n_cols)
                    throw ParseError(path.string() + ": expected " + std::to_string(n_cols) + " fields", offset);
                rows.push_back(std::move(cells));
            }
            offset += line.size() + 1;
        }
        return rows;
    }

    inline int to_int(const std::string &s)
    {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size())
            throw ParseError("not an integer: '" + s + "'", 0);
        return static_cast<int>(v);
    }

    inline constexpr const char *circles_header = "spot_id,u,v,r,support";
    inline constexpr const char *grid_header = "row,col,u,v,r,provenance";
    inline constexpr const char *spots_header = "spot_id,row,col,x0,y0,w,h,u,v,r";
    inline constexpr const char *quant_header = "spot_id,row,col,method,red_intensity,green_intensity,level,clamped,"
                                                "q_sig_noise_r,q_bkg1_r,q_bkg2_r,q_com2_r,q_com2_g,q_index";
    inline constexpr const char *truth_header = "row,col,present,u,v,r,red_fg,green_fg,expression";
    inline constexpr const char *summary_header = "method,spots,valid,level_min,level_max,level_mean,q_index_mean,f1_mean";

    inline std::string circles_csv(std::span<const Circle> circles)
    {
        std::string s = std::string(circles_header) + "\n";
        for (std::size_t i = 0; i < circles.size(); ++i)
        {
            const auto &c = circles[i];
            s += std::to_string(i) + "," + std::to_string(c.u) + "," + std::to_string(c.v) + "," + std::to_string(c.r) + "," +
                 std::to_string(c.support) + "\n";
        }
        return s;
    }

    inline std::string grid_csv(const SpotGrid &grid)
    {
        std::string s = std::string(grid_header) + "\n";
        for (const auto &c : grid.cells)
            s += std::to_string(c.row) + "," + std::to_string(c.col) + "," + std::to_string(c.circle.u) + "," +
                 std::to_string(c.circle.v) + "," + std::to_string(c.circle.r) + "," + to_string(c.provenance) + "\n";
        return s;
    }

    /// Grid cells from grid.csv; dimensions are inferred from the largest row/col index.
    inline SpotGrid read_grid_csv(const std::filesystem::path &path)
    {
        SpotGrid g;
        int max_row = -1, max_col = -1;
        for (const auto &r : read_csv(path, grid_header))
        {
            GridCell c;
            c.row = to_int(r[0]);
            c.col = to_int(r[1]);
            c.circle = Circle{to_int(r[2]), to_int(r[3]), to_int(r[4]), 0};
            if (r[5] == "detected")
                c.provenance = Provenance::detected;
            else if (r[5] == "interpolated")
                c.provenance = Provenance::interpolated;
            else
                throw ParseError(path.string() + ": bad provenance '" + r[5] + "'", 0);
            max_row = std::max(max_row, c.row);
            max_col = std::max(max_col, c.col);
            g.cells.push_back(c);
        }
        g.spec = GridSpec{max_row + 1, max_col + 1};
        if (g.cells.size() != static_cast<std::size_t>(g.spec.cells()))
            throw ParseError(path.string() + ": grid is not a complete rectangle", 0);
        for (std::size_t i = 0; i < g.cells.size(); ++i)
            if (g.cells[i].row * g.spec.cols + g.cells[i].col != static_cast<int>(i))
                throw ParseError(path.string() + ": grid cells are not in row-major order", 0);
        return g;
    }

    /// Spot window geometry: plate rect plus window-local circle.
    struct SpotWindow
    {
        int spot_id = 0;
        int row = 0;
        int col = 0;
        Rect rect;
        Circle circle;
    };

    inline std::string spots_csv(std::span<const SpotRegion> regions, int grid_cols)
    {
        std::string s = std::string(spots_header) + "\n";
        for (const auto &r : regions)
            s += std::to_string(r.row * grid_cols + r.col) + "," + std::to_string(r.row) + "," + std::to_string(r.col) + "," +
                 std::to_string(r.rect.x0) + "," + std::to_string(r.rect.y0) + "," + std::to_string(r.rect.w) + "," +
                 std::to_string(r.rect.h) + "," + std::to_string(r.circle.u) + "," + std::to_string(r.circle.v) + "," +
                 std::to_string(r.circle.r) + "\n";
        return s;
    }

    inline std::vector<SpotWindow> read_spots_csv(const std::filesystem::path &path)
    {
        std::vector<SpotWindow> out;
        for (const auto &r : read_csv(path, spots_header))
            out.push_back({to_int(r[0]), to_int(r[1]), to_int(r[2]), Rect{to_int(r[3]), to_int(r[4]), to_int(r[5]), to_int(r[6])},
                           Circle{to_int(r[7]), to_int(r[8]), to_int(r[9]), 0}});
        return out;
    }

    /// Rebuild a spot region from stored window geometry.
    inline SpotRegion region_from_window(const ChannelPair &pair, const SpotWindow &w, int margin)
    {
        SpotRegion s;
        s.row = w.row;
        s.col = w.col;
        s.rect = w.rect;
        s.circle = w.circle;
        s.margin = margin;
        s.red = crop(pair.red(), w.rect);
        s.green = crop(pair.green(), w.rect);
        return s;
    }

    inline std::string quant_csv(std::span<const ExpressionRecord> records)
    {
        std::string s = std::string(quant_header) + "\n";
        for (const auto &r : records)
        {
            s += std::to_string(r.spot_id) + "," + std::to_string(r.row) + "," + std::to_string(r.col) + "," + to_string(r.method) +
                 "," + fmt_fixed(r.expression.red_intensity) + "," + fmt_fixed(r.expression.green_intensity) + "," +
                 fmt_fixed(r.expression.level) + "," + (r.expression.clamped ? "1" : "0") + "," + fmt_fixed(r.red.sig_noise) + "," +
                 fmt_fixed(r.red.bkg1) + "," + fmt_fixed(r.red.bkg2) + "," + fmt_fixed(r.red.com2) + "," + fmt_fixed(r.green.com2) +
                 "," + fmt_fixed(r.q_index) + "\n";
        }
        return s;
    }

    inline std::string summary_csv(std::span<const MethodSummary> summaries)
    {
        std::string s = std::string(summary_header) + "\n";
        for (const auto &m : summaries)
            s += std::string(to_string(m.method)) + "," + std::to_string(m.spots) + "," + std::to_string(m.valid) + "," +
                 fmt_fixed(m.level_min) + "," + fmt_fixed(m.level_max) + "," + fmt_fixed(m.level_mean) + "," +
                 fmt_fixed(m.q_index_mean) + "," + (m.f1_mean ? fmt_fixed(*m.f1_mean) : std::string()) + "\n";
        return s;
    }

    inline nlohmann::ordered_json report_json(const ComparisonReport &report)
    {
        nlohmann::ordered_json j;
        j["summaries"] = nlohmann::ordered_json::array();
        for (const auto &m : report.summaries)
        {
            nlohmann::ordered_json s;
            s["method"] = to_string(m.method);
            s["spots"] = m.spots;
            s["valid"] = m.valid;
            s["level_min"] = m.level_min;
            s["level_max"] = m.level_max;
            s["level_mean"] = m.level_mean;
            s["q_index_mean"] = m.q_index_mean;
            s["f1_mean"] = m.f1_mean ? nlohmann::ordered_json(*m.f1_mean) : nlohmann::ordered_json(nullptr);
            j["summaries"].push_back(s);
        }
        j["records"] = nlohmann::ordered_json::array();
        for (const auto &r : report.records)
        {
            nlohmann::ordered_json o;
            o["spot_id"] = r.spot_id;
            o["row"] = r.row;
            o["col"] = r.col;
            o["method"] = to_string(r.method);
            o["valid"] = r.valid;
            o["red_intensity"] = r.expression.red_intensity;
            o["green_intensity"] = r.expression.green_intensity;
            o["level"] = r.expression.level;
            o["clamped"] = r.expression.clamped;
            o["q_red"] = {{"sig_noise", r.red.sig_noise}, {"bkg1", r.red.bkg1}, {"bkg2", r.red.bkg2}, {"com2", r.red.com2}};
            o["q_green"] = {{"sig_noise", r.green.sig_noise}, {"bkg1", r.green.bkg1}, {"bkg2", r.green.bkg2}, {"com2", r.green.com2}};
            o["q_index"] = r.q_index;
            j["records"].push_back(o);
        }
        return j;
    }

    inline std::string truth_csv(const SyntheticPlate &plate)
    {
        std::string s = std::string(truth_header) + "\n";
        for (const auto &t : plate.truth)
        {
            const Circle c = t.circle.value_or(Circle{});
            s += std::to_string(t.row) + "," + std::to_string(t.col) + "," + (t.circle ? "1" : "0") + "," + std::to_string(c.u) + "," +
                 std::to_string(c.v) + "," + std::to_string(c.r) + "," + std::to_string(t.red_fg) + "," + std::to_string(t.green_fg) +
                 "," + fmt_fixed(t.expression) + "\n";
        }
        return s;
    }

    struct TruthRow
    {
        int row = 0;
        int col = 0;
        std::optional<Circle> circle;
    };

    inline std::vector<TruthRow> read_truth_csv(const std::filesystem::path &path)
    {
        std::vector<TruthRow> out;
        for (const auto &r : read_csv(path, truth_header))
        {
            TruthRow t{to_int(r[0]), to_int(r[1]), std::nullopt};
            if (to_int(r[2]))
                t.circle = Circle{to_int(r[3]), to_int(r[4]), to_int(r[5]), 0};
            out.push_back(t);
        }
        return out;
    }

    /// Labeled pixels from a CSV with header `intensity,radial,label`.
    inline std::vector<LabeledSample> read_training_csv(const std::filesystem::path &path)
    {
        std::vector<LabeledSample> out;
        for (const auto &r : read_csv(path, "intensity,radial,label"))
            out.push_back({{std::stod(r[0]), std::stod(r[1])}, to_int(r[2])});
        return out;
    }

} // namespace mcht
