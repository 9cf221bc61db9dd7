#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "circle.hpp"
#include "error.hpp"
#include "image.hpp"

namespace mcht
{

    struct GridSpec
    {
        int rows = 21;
        int cols = 24;

        int cells() const noexcept { return rows * cols; }
    };

    enum class Provenance
    {
        detected,
        interpolated
    };

    inline const char *to_string(Provenance p) noexcept { return p == Provenance::detected ? "detected" : "interpolated"; }

    struct GridCell
    {
        int row = 0;
        int col = 0;
        Circle circle;
        Provenance provenance = Provenance::detected;
    };

    /// rows * cols cells in row-major order, top-left origin.
    struct SpotGrid
    {
        GridSpec spec;
        std::vector<GridCell> cells;

        const GridCell &at(int row, int col) const
        {
            if (row < 0 || col < 0 || row >= spec.rows || col >= spec.cols)
                throw BoundsError("grid cell (" + std::to_string(row) + "," + std::to_string(col) + ") does not exist");
            return cells[static_cast<std::size_t>(row) * spec.cols + col];
        }

        int spot_id(int row, int col) const noexcept { return row * spec.cols + col; }
    };

    namespace grid_detail
    {
        /// Group label per coordinate after cutting the sorted coordinates at the `groups - 1` largest gaps.
        /// Equal gaps prefer the earlier position.
        inline std::vector<int> split_by_gaps(std::span<const int> coords, int groups)
        {
            const std::size_t n = coords.size();
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return coords[a] < coords[b]; });

            std::vector<std::size_t> gap_pos(n > 0 ? n - 1 : 0);
            std::iota(gap_pos.begin(), gap_pos.end(), 0);
            auto gap = [&](std::size_t k) { return coords[order[k + 1]] - coords[order[k]]; };
            std::stable_sort(gap_pos.begin(), gap_pos.end(), [&](std::size_t a, std::size_t b) { return gap(a) > gap(b); });
            gap_pos.resize(static_cast<std::size_t>(groups - 1));
            std::sort(gap_pos.begin(), gap_pos.end());

            std::vector<int> label(n, 0);
            int current = 0;
            std::size_t next_cut = 0;
            for (std::size_t k = 0; k < n; ++k)
            {
                label[order[k]] = current;
                if (next_cut < gap_pos.size() && gap_pos[next_cut] == k)
                {
                    ++current;
                    ++next_cut;
                }
            }
            return label;
        }

        inline int lower_median(std::vector<int> v)
        {
            std::sort(v.begin(), v.end());
            return v[(v.size() - 1) / 2];
        }

        /// Gap split that discards stray coordinates: groups far smaller than the median group are dropped
        /// and the rest re-split until every group is populated. Dropped coordinates get label -1.
        inline std::vector<int> robust_split(std::span<const int> coords, int groups)
        {
            std::vector<std::size_t> active(coords.size());
            std::iota(active.begin(), active.end(), 0);
            std::vector<int> label(coords.size(), -1);
            for (;;)
            {
                if (active.size() < static_cast<std::size_t>(groups))
                    throw AddressingError("too few consistent circles to form " + std::to_string(groups) + " grid lines");
                std::vector<int> sub;
                for (auto i : active)
                    sub.push_back(coords[i]);
                const auto sub_label = split_by_gaps(sub, groups);
                std::vector<int> size(static_cast<std::size_t>(groups), 0);
                for (int l : sub_label)
                    ++size[l];
                const int med = lower_median(size);
                std::vector<std::size_t> keep;
                for (std::size_t k = 0; k < active.size(); ++k)
                    if (4 * size[sub_label[k]] >= med)
                        keep.push_back(active[k]);
                if (keep.size() == active.size())
                {
                    for (std::size_t k = 0; k < active.size(); ++k)
                        label[active[k]] = sub_label[k];
                    return label;
                }
                active = std::move(keep);
            }
        }

        /// Median coordinate of each group, and the median spacing between consecutive groups.
        inline std::pair<std::vector<int>, int> line_positions(std::span<const int> coords, std::span<const int> label, int groups)
        {
            std::vector<std::vector<int>> members(static_cast<std::size_t>(groups));
            for (std::size_t i = 0; i < coords.size(); ++i)
                if (label[i] >= 0)
                    members[label[i]].push_back(coords[i]);
            std::vector<int> pos;
            for (auto &m : members)
                pos.push_back(lower_median(m));
            std::vector<int> steps;
            for (std::size_t k = 1; k < pos.size(); ++k)
                steps.push_back(pos[k] - pos[k - 1]);
            return {pos, steps.empty() ? 0 : lower_median(steps)};
        }
    } // namespace grid_detail

    /// Address detected circles onto a rows x cols lattice by gap splitting of their coordinates.
    /// Circles off their row or column line by more than a quarter pitch are ignored; colliding circles keep
    /// the higher support; empty cells get the row/column line position and the median radius.
    inline SpotGrid assign_grid(std::span<const Circle> circles, const GridSpec &spec, int width, int height)
    {
        if (spec.rows < 1 || spec.cols < 1)
            throw ParamError("grid must have at least one row and column");
        const auto n = circles.size();
        if (2 * n < static_cast<std::size_t>(spec.cells()))
            throw AddressingError("only " + std::to_string(n) + " circles detected for a " + std::to_string(spec.rows) + "x" +
                                  std::to_string(spec.cols) + " grid (need at least half)");
        if (n < static_cast<std::size_t>(spec.rows) || n < static_cast<std::size_t>(spec.cols))
            throw AddressingError("fewer circles than grid rows or columns");

        std::vector<int> us, vs;
        for (const auto &c : circles)
        {
            us.push_back(c.u);
            vs.push_back(c.v);
        }
        const auto row_of = grid_detail::robust_split(vs, spec.rows);
        const auto col_of = grid_detail::robust_split(us, spec.cols);
        const auto [row_pos, row_pitch] = grid_detail::line_positions(vs, row_of, spec.rows);
        const auto [col_pos, col_pitch] = grid_detail::line_positions(us, col_of, spec.cols);

        std::vector<std::optional<Circle>> slot(static_cast<std::size_t>(spec.cells()));
        std::size_t placed = 0;
        for (std::size_t i = 0; i < n; ++i)
        {
            if (row_of[i] < 0 || col_of[i] < 0)
                continue;
            if (row_pitch > 0 && 4 * std::abs(circles[i].v - row_pos[row_of[i]]) > row_pitch)
                continue;
            if (col_pitch > 0 && 4 * std::abs(circles[i].u - col_pos[col_of[i]]) > col_pitch)
                continue;
            auto &s = slot[static_cast<std::size_t>(row_of[i]) * spec.cols + col_of[i]];
            if (!s)
                ++placed;
            if (!s || circles[i].support > s->support)
                s = circles[i];
        }
        if (2 * placed < static_cast<std::size_t>(spec.cells()))
            throw AddressingError("only " + std::to_string(placed) + " circles fit the grid lattice (need at least half)");

        std::vector<int> radii;
        for (const auto &s : slot)
            if (s)
                radii.push_back(s->r);
        const int fallback_r = grid_detail::lower_median(radii);

        SpotGrid grid{spec, {}};
        grid.cells.reserve(slot.size());
        for (int row = 0; row < spec.rows; ++row)
        {
            for (int col = 0; col < spec.cols; ++col)
            {
                const auto &s = slot[static_cast<std::size_t>(row) * spec.cols + col];
                if (s)
                {
                    grid.cells.push_back({row, col, *s, Provenance::detected});
                    continue;
                }
                const int u = std::clamp(col_pos[col], 0, std::max(0, width - 1));
                const int v = std::clamp(row_pos[row], 0, std::max(0, height - 1));
                grid.cells.push_back({row, col, Circle{u, v, fallback_r, 0}, Provenance::interpolated});
            }
        }
        return grid;
    }

    /// One spot's window in both channels, with the circle in window coordinates.
    struct SpotRegion
    {
        int row = 0;
        int col = 0;
        Rect rect;     ///< window in plate coordinates
        Circle circle; ///< window-local center, plate radius
        int margin = 4;
        GrayImage red;
        GrayImage green;

        const GrayImage &channel(Channel c) const noexcept { return c == Channel::red ? red : green; }
        int width() const noexcept { return rect.w; }
        int height() const noexcept { return rect.h; }

        std::pair<int, int> to_plate(int x, int y) const noexcept { return {x + rect.x0, y + rect.y0}; }
        std::pair<int, int> to_local(int x, int y) const noexcept { return {x - rect.x0, y - rect.y0}; }
    };

    /// Window of side 2(r + margin) + 1 around a plate-coordinate circle, clipped to the plate.
    inline SpotRegion extract_spot(const ChannelPair &pair, const Circle &c, int row, int col, int margin = 4)
    {
        if (margin < 2)
            throw ParamError("spot margin must be at least 2 pixels");
        const int half = c.r + margin;
        const int x0 = std::max(0, c.u - half), y0 = std::max(0, c.v - half);
        const int x1 = std::min(pair.width(), c.u + half + 1), y1 = std::min(pair.height(), c.v + half + 1);
        if (x1 <= x0 || y1 <= y0)
            throw BoundsError("spot window at (" + std::to_string(c.u) + "," + std::to_string(c.v) + ") lies outside the plate");
        SpotRegion s;
        s.row = row;
        s.col = col;
        s.rect = Rect{x0, y0, x1 - x0, y1 - y0};
        s.circle = Circle{c.u - x0, c.v - y0, c.r, c.support};
        s.margin = margin;
        s.red = crop(pair.red(), s.rect);
        s.green = crop(pair.green(), s.rect);
        return s;
    }

    inline SpotRegion extract_spot(const ChannelPair &pair, const SpotGrid &grid, int row, int col, int margin = 4)
    {
        return extract_spot(pair, grid.at(row, col).circle, row, col, margin);
    }

} // namespace mcht
