#pragma once

// Output plumbing for experiment runs: CSV tables, SVG line charts and
// content hashes for run manifests.

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rotcert {

/// Shortest round-trip decimal form.
std::string format_number(double v);

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path &path,
              std::vector<std::string> header);

    void row(const std::vector<std::string> &fields);
    [[nodiscard]] std::size_t rows_written() const { return rows_; }

  private:
    std::ofstream out_;
    std::size_t width_;
    std::size_t rows_ = 0;
};

/// Parses a CSV written by CsvWriter: header plus rows of raw fields.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv_table(const std::filesystem::path &path);

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> y_low;   // optional error bar, same length as y
    std::vector<double> y_high;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
};

/// 800x500 self-contained SVG: axes, legend, one polyline per series with a
/// circle marker on every point. Throws std::invalid_argument on no data.
std::string emit_svg(std::span<const Series> series, const ChartSpec &chart);

std::string sha1_hex(std::string_view data);
/// Hash git assigns to a blob with this content.
std::string git_blob_hash(std::string_view content);
std::string read_file(const std::filesystem::path &path);

}  // namespace rotcert
