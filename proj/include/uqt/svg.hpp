#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace uqt::svg {

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::string colour = "#1f77b4";
    bool dashed = false;
};

struct Band {
    std::vector<double> x, lower, upper;
    std::string colour = "#1f77b4";
};

struct BoxGroup {
    std::string label;
    std::vector<double> values;
};

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series, const std::vector<Band>& bands = {});
std::string box_plot(const std::string& title, const std::string& y_label, const std::vector<BoxGroup>& groups,
                     double reference_line);

void write(const std::filesystem::path& path, const std::string& document);

}  // namespace uqt::svg
