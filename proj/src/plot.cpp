#include "gim/plot.hpp"

#include "gim/errors.hpp"
#include "gim/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace gim {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

} // namespace

RewardSeries load_reward_series(const std::filesystem::path& csv, int stride) {
    if (stride < 1) {
        throw ParamError("stride must be positive");
    }
    std::ifstream in(csv);
    if (!in) {
        throw IoError(fmt::format("cannot open '{}'", csv.string()));
    }
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kEpisodeCsvHeader) {
        throw SchemaError(fmt::format("'{}' is not a per-episode CSV", csv.string()));
    }
    std::map<int, std::pair<double, int>> by_episode;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != 6) {
            throw SchemaError(fmt::format("{}:{}: expected 6 columns", csv.string(), lineno));
        }
        int episode = 0;
        double reward = 0.0;
        const auto& e = cells[1];
        const auto& r = cells[2];
        if (std::from_chars(e.data(), e.data() + e.size(), episode).ec != std::errc{} ||
            std::from_chars(r.data(), r.data() + r.size(), reward).ec != std::errc{}) {
            throw SchemaError(fmt::format("{}:{}: bad episode or reward", csv.string(), lineno));
        }
        auto& acc = by_episode[episode];
        acc.first += reward;
        acc.second += 1;
    }
    if (by_episode.empty()) {
        throw EmptyInputError(fmt::format("'{}' has no rows", csv.string()));
    }

    RewardSeries series;
    series.label = csv.stem().string();
    constexpr std::string_view kSuffix = "_episodes";
    if (series.label.size() > kSuffix.size() && series.label.ends_with(kSuffix)) {
        series.label.resize(series.label.size() - kSuffix.size());
    }
    double block = 0.0;
    int filled = 0;
    int last_episode = 0;
    for (const auto& [episode, acc] : by_episode) {
        block += acc.first / acc.second;
        last_episode = episode;
        if (++filled == stride) {
            series.points.emplace_back(episode, block / filled);
            block = 0.0;
            filled = 0;
        }
    }
    if (filled > 0) {
        series.points.emplace_back(last_episode, block / filled);
    }
    return series;
}

std::string render_reward_svg(const std::vector<RewardSeries>& series) {
    constexpr double kWidth = 720, kHeight = 440;
    constexpr double kLeft = 70, kRight = 170, kTop = 30, kBottom = 50;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    double x_max = 1.0;
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (!(y_min <= y_max)) {
        y_min = 0.0;
        y_max = 1.0;
    }
    if (y_max - y_min < 1e-12) {
        y_min -= 0.5;
        y_max += 0.5;
    }
    const auto px = [&](double x) { return kLeft + plot_w * x / x_max; };
    const auto py = [&](double y) { return kTop + plot_h * (1.0 - (y - y_min) / (y_max - y_min)); };

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
        "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n",
        kWidth, kHeight);
    svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
    svg += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        kLeft, kTop, plot_w, plot_h);
    for (int i = 0; i <= 4; ++i) {
        const double y = y_min + (y_max - y_min) * i / 4.0;
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n",
                           kLeft - 6, py(y) + 4, y);
        const double x = x_max * i / 4.0;
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.0f}</text>\n",
                           px(x), kTop + plot_h + 18, x);
    }
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">episode</text>\n",
                       kLeft + plot_w / 2, kHeight - 10);
    svg += fmt::format("<text x=\"16\" y=\"{:.1f}\" text-anchor=\"middle\" "
                       "transform=\"rotate(-90 16 {:.1f})\">average reward</text>\n",
                       kTop + plot_h / 2, kTop + plot_h / 2);

    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % kPalette.size()];
        std::string pts;
        for (const auto& [x, y] : series[i].points) {
            if (!pts.empty()) {
                pts += ' ';
            }
            pts += fmt::format("{:.2f},{:.2f}", px(x), py(y));
        }
        svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" "
                           "points=\"{}\"/>\n",
                           color, pts);
        const double ly = kTop + 14 + 18.0 * i;
        svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" "
                           "stroke=\"{3}\" stroke-width=\"2\"/>\n",
                           kLeft + plot_w + 12, ly, kLeft + plot_w + 32, color);
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", kLeft + plot_w + 38,
                           ly + 4, escape(series[i].label));
    }
    svg += "</svg>\n";
    return svg;
}

void emit_plot(const std::vector<std::filesystem::path>& csvs, const std::filesystem::path& out,
               int stride) {
    if (csvs.empty()) {
        throw EmptyInputError("no CSV files to plot");
    }
    std::vector<RewardSeries> series;
    for (const auto& csv : csvs) {
        series.push_back(load_reward_series(csv, stride));
    }
    std::ofstream file(out, std::ios::binary);
    if (!file) {
        throw IoError(fmt::format("cannot write '{}'", out.string()));
    }
    file << render_reward_svg(series);
    if (!file) {
        throw IoError(fmt::format("failed writing '{}'", out.string()));
    }
}

} // namespace gim
