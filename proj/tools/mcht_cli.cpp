// mcht: command-line driver for microarray spot localization, segmentation and quantification.
//
//   mcht synth    --out DIR                          synthetic benchmark plate
//   mcht detect   --red R.tif --green G.tif --out DIR circles.csv, grid.csv, overlay.png
//   mcht segment  --red R.tif --green G.tif --out DIR per-spot masks (needs detect output)
//   mcht quantify --red R.tif --green G.tif --out DIR quant.csv (needs segment output)
//   mcht compare  --red R.tif --green G.tif --out DIR method comparison, scored against --truth when given
//
// Every command echoes its effective configuration to DIR/config.ini; feeding
// that file back through --config reproduces the run.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mcht/error.hpp"
#include "mcht/io.hpp"
#include "mcht/pipeline.hpp"
#include "mcht/png.hpp"
#include "mcht/tiff.hpp"

namespace fs = std::filesystem;
using namespace mcht;

namespace
{

    /// Missing inputs or prerequisite artifacts; reported with exit code 2.
    struct UsageError : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    struct RunConfig
    {
        std::string red, green, out, truth, svm_train;
        int grid_rows = 21, grid_cols = 24;
        int rmin = 6, rmax = 10;
        int median_window = 3;
        double canny_high = 0.8, canny_low = 0.4;
        double peak_frac = 0.5;
        double separation = -1.0; // negative: 2 * rmin
        bool unidirectional = false;
        double radius_angle_tol = 45.0; // degrees
        std::string methods = "cht,kmeans,svm,fixed";
        std::string channel = "red";
        std::uint64_t seed = 1;
        int margin = 4;
        double epsilon = 1.0;
        int fixed_radius = -1; // negative: median grid radius
        int svm_plates = 5;

        // synth
        int pitch = 32;
        int fg_lo = 1500, fg_hi = 6000, background = 500;
        double noise_sigma = 100.0, dropout = 0.0;
        int jitter = 2, bit_depth = 16;
        std::string profile = "flat";
        bool equal_channels = false;

        PipelineParams pipeline() const
        {
            PipelineParams p;
            p.median.window = median_window;
            p.canny.high_frac = canny_high;
            p.canny.low_frac = canny_low;
            p.cht.r_min = rmin;
            p.cht.r_max = rmax;
            p.cht.peak_threshold_frac = peak_frac;
            if (separation >= 0.0)
                p.cht.min_center_separation = separation;
            p.cht.bidirectional = !unidirectional;
            p.cht.radius_angle_tolerance = radius_angle_tol * std::numbers::pi / 180.0;
            p.grid = GridSpec{grid_rows, grid_cols};
            p.margin = margin;
            return p;
        }

        SynthParams synth() const
        {
            SynthParams s;
            s.rows = grid_rows;
            s.cols = grid_cols;
            s.pitch = pitch;
            s.r_lo = rmin;
            s.r_hi = rmax;
            s.fg_lo = fg_lo;
            s.fg_hi = fg_hi;
            s.background = background;
            s.noise_sigma = noise_sigma;
            s.dropout = dropout;
            s.jitter = jitter;
            s.seed = seed;
            s.bit_depth = bit_depth;
            if (profile == "flat")
                s.profile = SpotProfile::flat;
            else if (profile == "gaussian")
                s.profile = SpotProfile::gaussian;
            else
                throw UsageError("--profile must be flat or gaussian");
            s.equal_channels = equal_channels;
            return s;
        }

        std::vector<Method> method_list() const
        {
            std::vector<Method> out;
            std::stringstream ss(methods);
            std::string item;
            while (std::getline(ss, item, ','))
            {
                if (item.empty())
                    continue;
                Method m;
                try
                {
                    m = parse_method(item);
                }
                catch (const ParamError &e)
                {
                    throw UsageError(e.what());
                }
                if (std::find(out.begin(), out.end(), m) == out.end())
                    out.push_back(m);
            }
            if (out.empty())
                throw UsageError("--methods is empty");
            return out;
        }

        Channel channel_sel() const
        {
            if (channel == "red")
                return Channel::red;
            if (channel == "green")
                return Channel::green;
            throw UsageError("--channel must be red or green");
        }
    };

    void add_options(CLI::App &app, RunConfig &c)
    {
        app.option_defaults()->always_capture_default();
        app.set_config("--config", "", "Plain-text key=value configuration file; flags override it");
        app.add_option("--red", c.red, "Red channel TIFF");
        app.add_option("--green", c.green, "Green channel TIFF");
        app.add_option("--out", c.out, "Output directory");
        app.add_option("--truth", c.truth, "Directory written by `synth`, for scoring against ground truth");
        app.add_option("--grid-rows", c.grid_rows, "Spot grid rows")->check(CLI::PositiveNumber);
        app.add_option("--grid-cols", c.grid_cols, "Spot grid columns")->check(CLI::PositiveNumber);
        app.add_option("--rmin", c.rmin, "Smallest spot radius (px)")->check(CLI::PositiveNumber);
        app.add_option("--rmax", c.rmax, "Largest spot radius (px)")->check(CLI::PositiveNumber);
        app.add_option("--median-window", c.median_window, "Median filter window side (odd)");
        app.add_option("--canny-high", c.canny_high, "Strong edge threshold as a percentile of gradient magnitudes");
        app.add_option("--canny-low", c.canny_low, "Weak edge threshold as a fraction of the strong one");
        app.add_option("--peak-frac", c.peak_frac, "Accumulator peak threshold as a fraction of the global maximum");
        app.add_option("--separation", c.separation, "Minimum distance between circle centers (default 2*rmin)");
        app.add_flag("--unidirectional", c.unidirectional, "Vote only against the gradient direction");
        app.add_option("--radius-angle-tol", c.radius_angle_tol,
                       "Max angle (degrees) between an edge gradient and the radius for it to count toward the radius; 90 counts all edges");
        app.add_option("--methods", c.methods, "Comma-separated segmentation methods: cht,kmeans,svm,fixed");
        app.add_option("--channel", c.channel, "Channel driving kmeans/svm segmentation: red or green");
        app.add_option("--seed", c.seed, "Random seed");
        app.add_option("--margin", c.margin, "Spot window margin around the circle (px)");
        app.add_option("--epsilon", c.epsilon, "Floor for background-subtracted intensities");
        app.add_option("--fixed-radius", c.fixed_radius, "Radius for fixed-circle segmentation (default median)");
        app.add_option("--svm-train", c.svm_train, "Labeled pixel CSV (intensity,radial,label) for the margin classifier");
        app.add_option("--svm-plates", c.svm_plates, "Synthetic plates used to train the margin classifier by default");
        app.add_option("--pitch", c.pitch, "synth: grid pitch (px)");
        app.add_option("--fg-lo", c.fg_lo, "synth: lowest foreground intensity");
        app.add_option("--fg-hi", c.fg_hi, "synth: highest foreground intensity");
        app.add_option("--background", c.background, "synth: background level");
        app.add_option("--noise-sigma", c.noise_sigma, "synth: Gaussian noise sigma");
        app.add_option("--dropout", c.dropout, "synth: probability that a spot is missing");
        app.add_option("--jitter", c.jitter, "synth: max center offset per axis (px)");
        app.add_option("--bit-depth", c.bit_depth, "synth: 8 or 16");
        app.add_option("--profile", c.profile, "synth: spot profile, flat or gaussian");
        app.add_flag("--equal-channels", c.equal_channels, "synth: identical red and green foregrounds");
    }

    fs::path require_out(const RunConfig &c)
    {
        if (c.out.empty())
            throw UsageError("--out is required");
        fs::create_directories(c.out);
        return c.out;
    }

    ChannelPair load_pair(const RunConfig &c)
    {
        if (c.red.empty() || c.green.empty())
            throw UsageError("--red and --green are required");
        for (const auto &p : {c.red, c.green})
            if (!fs::exists(p))
                throw UsageError("input not found: " + p);
        return ChannelPair(load_gray_tiff(c.red), load_gray_tiff(c.green));
    }

    void echo_config(const CLI::App &app, const fs::path &dir) { write_text_atomic(dir / "config.ini", app.config_to_str(true, false)); }

    fs::path mask_path(const fs::path &out, Method m, int spot_id)
    {
        return out / "masks" / to_string(m) / ("spot_" + std::to_string(spot_id) + ".png");
    }

    MarginModel margin_model(const RunConfig &c, int margin)
    {
        if (!c.svm_train.empty())
            return train_margin_classifier(read_training_csv(c.svm_train));
        SynthParams s;
        s.rows = 6;
        s.cols = 6;
        s.r_lo = c.rmin;
        s.r_hi = c.rmax;
        s.pitch = std::max(s.pitch, 2 * c.rmax + 2 * s.jitter + 2 * margin);
        s.seed = c.seed;
        return train_on_synthetic(s, c.svm_plates, c.channel_sel(), margin);
    }

    std::string model_csv(const MarginModel &m)
    {
        std::string s = "w_intensity,w_radial,b\n";
        s += fmt_fixed(m.w.at(0), 9) + "," + fmt_fixed(m.w.at(1), 9) + "," + fmt_fixed(m.b, 9) + "\n";
        return s;
    }

    int cmd_synth(const CLI::App &app, const RunConfig &c)
    {
        const fs::path out = require_out(c);
        const SyntheticPlate plate = generate(c.synth());
        write_gray_tiff(plate.channels.red(), out / "red.tif");
        write_gray_tiff(plate.channels.green(), out / "green.tif");
        write_text_atomic(out / "truth.csv", truth_csv(plate));
        write_mask_png(plate.red_mask, out / "truth_mask.png");
        echo_config(app, out);
        std::printf("synth: %dx%d plate, %zu spots -> %s\n", plate.channels.width(), plate.channels.height(),
                    plate.truth_circles().size(), out.string().c_str());
        return 0;
    }

    int cmd_detect(const CLI::App &app, const RunConfig &c)
    {
        const ChannelPair pair = load_pair(c);
        const fs::path out = require_out(c);
        const Detection d = detect_plate(pair, c.pipeline());
        write_text_atomic(out / "circles.csv", circles_csv(d.circles));
        write_text_atomic(out / "grid.csv", grid_csv(d.grid));
        std::vector<Circle> drawn;
        for (const auto &cell : d.grid.cells)
            drawn.push_back(cell.circle);
        overlay_circles(composite(pair), drawn, out / "overlay.png");
        echo_config(app, out);
        const auto interpolated = std::count_if(d.grid.cells.begin(), d.grid.cells.end(),
                                                [](const GridCell &g) { return g.provenance == Provenance::interpolated; });
        std::printf("detect: %zu circles, %zu grid cells (%td interpolated)\n", d.circles.size(), d.grid.cells.size(), interpolated);
        return 0;
    }

    int cmd_segment(const CLI::App &app, const RunConfig &c)
    {
        const ChannelPair pair = load_pair(c);
        const fs::path out = require_out(c);
        if (!fs::exists(out / "grid.csv"))
            throw UsageError("no grid.csv in " + out.string() + "; run `detect` first");
        const SpotGrid grid = read_grid_csv(out / "grid.csv");
        const auto methods = c.method_list();

        CompareOptions opt;
        opt.margin = c.margin;
        opt.channel = c.channel_sel();
        if (std::find(methods.begin(), methods.end(), Method::svm) != methods.end())
        {
            opt.svm = margin_model(c, c.margin);
            write_text_atomic(out / "svm_model.csv", model_csv(*opt.svm));
        }
        const int fixed_r = c.fixed_radius >= 0 ? c.fixed_radius : median_grid_radius(grid);

        const auto regions = extract_all(pair, grid, c.margin);
        write_text_atomic(out / "spots.csv", spots_csv(regions, grid.spec.cols));
        for (auto m : methods)
        {
            fs::create_directories(out / "masks" / to_string(m));
            for (const auto &reg : regions)
                write_mask_png(segment_spot(reg, m, opt, fixed_r).mask, mask_path(out, m, grid.spot_id(reg.row, reg.col)));
        }
        echo_config(app, out);
        std::printf("segment: %zu spots x %zu methods\n", regions.size(), methods.size());
        return 0;
    }

    int cmd_quantify(const CLI::App &app, const RunConfig &c)
    {
        const fs::path out = require_out(c);
        if (!fs::exists(out / "spots.csv"))
            throw UsageError("no spots.csv in " + out.string() + "; run `segment` first");
        const ChannelPair pair = load_pair(c);
        const auto windows = read_spots_csv(out / "spots.csv");
        const auto methods = c.method_list();
        int cols = 0;
        for (const auto &w : windows)
            cols = std::max(cols, w.col + 1);

        std::vector<SpotRegion> regions;
        regions.reserve(windows.size());
        for (const auto &w : windows)
            regions.push_back(region_from_window(pair, w, c.margin));

        std::vector<ExpressionRecord> records;
        for (auto m : methods)
        {
            std::vector<SegmentedSpot> segs;
            for (std::size_t i = 0; i < regions.size(); ++i)
            {
                const auto path = mask_path(out, m, windows[i].spot_id);
                if (!fs::exists(path))
                    throw UsageError("missing mask " + path.string() + "; run `segment` with --methods including " + to_string(m));
                BinaryMap mask = read_mask_png(path);
                if (mask.width != regions[i].width() || mask.height != regions[i].height())
                    throw UsageError("mask " + path.string() + " does not match its spot window");
                segs.push_back({&regions[i], SpotSegmentation{std::move(mask), m, false}});
            }
            const auto recs = quantify_spots(segs, cols, c.epsilon);
            records.insert(records.end(), recs.begin(), recs.end());
        }
        write_text_atomic(out / "quant.csv", quant_csv(records));
        echo_config(app, out);
        std::printf("quantify: %zu records\n", records.size());
        return 0;
    }

    int cmd_compare(const CLI::App &app, const RunConfig &c)
    {
        const ChannelPair pair = load_pair(c);
        const fs::path out = require_out(c);
        const auto methods = c.method_list();
        const PipelineParams params = c.pipeline();
        const Detection d = detect_plate(pair, params);

        CompareOptions opt;
        opt.margin = c.margin;
        opt.channel = c.channel_sel();
        opt.epsilon = c.epsilon;
        if (c.fixed_radius >= 0)
            opt.fixed_radius = c.fixed_radius;
        if (std::find(methods.begin(), methods.end(), Method::svm) != methods.end())
            opt.svm = margin_model(c, c.margin);
        BinaryMap truth;
        if (!c.truth.empty())
        {
            const fs::path tm = fs::path(c.truth) / "truth_mask.png";
            if (!fs::exists(tm))
                throw UsageError("no truth_mask.png in " + c.truth);
            truth = read_mask_png(tm);
            if (truth.width != pair.width() || truth.height != pair.height())
                throw UsageError("truth mask does not match the plate size");
            opt.truth_mask = &truth;
        }
        const ComparisonReport report = compare_methods(pair, d.grid, methods, opt);
        write_text_atomic(out / "comparison.csv", quant_csv(report.records));
        write_text_atomic(out / "comparison_summary.csv", summary_csv(report.summaries));
        write_text_atomic(out / "comparison.json", report_json(report).dump(2) + "\n");
        echo_config(app, out);
        for (const auto &s : report.summaries)
            std::printf("%-7s level [%.4f, %.4f] mean q_index %.4f%s\n", to_string(s.method), s.level_min, s.level_max,
                        s.q_index_mean, s.f1_mean ? (" F1 " + fmt_fixed(*s.f1_mean, 4)).c_str() : "");
        return 0;
    }

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Circular-Hough microarray spot analysis"};
    RunConfig cfg;
    add_options(app, cfg);
    app.fallthrough();
    app.require_subcommand(1);
    auto *synth = app.add_subcommand("synth", "Generate a synthetic benchmark plate");
    auto *detect = app.add_subcommand("detect", "Localize spots and address the grid");
    auto *segment = app.add_subcommand("segment", "Write per-spot masks for each method");
    auto *quantify = app.add_subcommand("quantify", "Expression levels and Q-index from stored masks");
    auto *compare = app.add_subcommand("compare", "Compare segmentation methods end to end");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return 2;
    }

    try
    {
        if (synth->parsed())
            return cmd_synth(app, cfg);
        if (detect->parsed())
            return cmd_detect(app, cfg);
        if (segment->parsed())
            return cmd_segment(app, cfg);
        if (quantify->parsed())
            return cmd_quantify(app, cfg);
        if (compare->parsed())
            return cmd_compare(app, cfg);
    }
    catch (const UsageError &e)
    {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }
    catch (const mcht::Error &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
