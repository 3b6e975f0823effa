#include "rotcert/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace rotcert {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 180.0;
constexpr double kTop = 45.0;
constexpr double kBottom = 60.0;

constexpr std::array<const char *, 8> kPalette{
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string escape_xml(std::string_view s) {
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

std::string escape_csv(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

// "Nice" tick positions covering [lo, hi].
std::vector<double> linear_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        step = m * mag;
        if (span / step <= 6.0) {
            break;
        }
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span;
         t += step) {
        ticks.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
    }
    return ticks;
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

CsvWriter::CsvWriter(const std::filesystem::path &path,
                     std::vector<std::string> header)
    : out_(path), width_(header.size()) {
    if (!out_) {
        throw std::runtime_error("cannot write " + path.string());
    }
    row(header);
    rows_ = 0;
}

void CsvWriter::row(const std::vector<std::string> &fields) {
    if (fields.size() != width_) {
        throw std::invalid_argument("CsvWriter: row has " +
                                    std::to_string(fields.size()) +
                                    " fields, header has " +
                                    std::to_string(width_));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
        out_ << (i ? "," : "") << escape_csv(fields[i]);
    }
    out_ << '\n';
    ++rows_;
}

CsvTable read_csv_table(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto fields = split_csv_line(line);
        if (first) {
            t.header = std::move(fields);
            first = false;
        } else {
            t.rows.push_back(std::move(fields));
        }
    }
    return t;
}

std::string emit_svg(std::span<const Series> series, const ChartSpec &chart) {
    if (series.empty()) {
        throw std::invalid_argument("emit_svg: no series");
    }
    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -xmin;
    double ymin = xmin;
    double ymax = -xmin;
    for (const auto &s : series) {
        if (s.x.empty() || s.x.size() != s.y.size()) {
            throw std::invalid_argument("emit_svg: series '" + s.name +
                                        "' is empty or ragged");
        }
        if ((!s.y_low.empty() && s.y_low.size() != s.y.size()) ||
            (!s.y_high.empty() && s.y_high.size() != s.y.size())) {
            throw std::invalid_argument("emit_svg: error bars of '" + s.name +
                                        "' do not match its points");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double x = chart.log_x ? std::log10(s.x[i]) : s.x[i];
            if (!std::isfinite(x) || !std::isfinite(s.y[i])) {
                throw std::invalid_argument("emit_svg: non-finite point");
            }
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, s.y_low.empty() ? s.y[i] : s.y_low[i]);
            ymax = std::max(ymax, s.y_high.empty() ? s.y[i] : s.y_high[i]);
        }
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double x) {
        const double v = chart.log_x ? std::log10(x) : x;
        return kLeft + (v - xmin) / (xmax - xmin) * pw;
    };
    auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" "
         "width=\"800\" height=\"500\" font-family=\"sans-serif\" "
         "font-size=\"12\">\n";
    o << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
    o << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\"25\" "
         "text-anchor=\"middle\" font-size=\"15\">"
      << escape_xml(chart.title) << "</text>\n";

    // axes
    o << "<g stroke=\"#333\" stroke-width=\"1\">\n";
    o << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kTop + ph)
      << "\" x2=\"" << fixed(kLeft + pw) << "\" y2=\"" << fixed(kTop + ph)
      << "\"/>\n";
    o << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kTop)
      << "\" x2=\"" << fixed(kLeft) << "\" y2=\"" << fixed(kTop + ph)
      << "\"/>\n";
    o << "</g>\n";

    o << "<g fill=\"#333\">\n";
    std::vector<double> xt;
    if (chart.log_x) {
        for (double e = std::ceil(xmin - 1e-9); e <= xmax + 1e-9; e += 1.0) {
            xt.push_back(e);
        }
    } else {
        xt = linear_ticks(xmin, xmax);
    }
    for (double t : xt) {
        const double x = kLeft + (t - xmin) / (xmax - xmin) * pw;
        const std::string label =
            chart.log_x ? "1e" + fixed(t, 0) : format_number(t);
        o << "<line x1=\"" << fixed(x) << "\" y1=\"" << fixed(kTop + ph)
          << "\" x2=\"" << fixed(x) << "\" y2=\"" << fixed(kTop + ph + 5)
          << "\" stroke=\"#333\"/>\n";
        o << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(kTop + ph + 20)
          << "\" text-anchor=\"middle\">" << escape_xml(label) << "</text>\n";
    }
    for (double t : linear_ticks(ymin, ymax)) {
        const double y = py(t);
        o << "<line x1=\"" << fixed(kLeft - 5) << "\" y1=\"" << fixed(y)
          << "\" x2=\"" << fixed(kLeft) << "\" y2=\"" << fixed(y)
          << "\" stroke=\"#333\"/>\n";
        o << "<text x=\"" << fixed(kLeft - 8) << "\" y=\"" << fixed(y + 4)
          << "\" text-anchor=\"end\">" << fixed(t, 3) << "</text>\n";
    }
    o << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\""
      << fixed(kHeight - 15) << "\" text-anchor=\"middle\">"
      << escape_xml(chart.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << fixed(kTop + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(chart.y_label)
      << "</text>\n";
    o << "</g>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto &s = series[si];
        const char *color = kPalette[si % kPalette.size()];
        o << "<g class=\"series\" stroke=\"" << color << "\" fill=\"" << color
          << "\">\n";
        o << "<polyline fill=\"none\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            o << (i ? " " : "") << fixed(px(s.x[i])) << "," << fixed(py(s.y[i]));
        }
        o << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!s.y_low.empty() && !s.y_high.empty()) {
                o << "<line x1=\"" << fixed(px(s.x[i])) << "\" y1=\""
                  << fixed(py(s.y_low[i])) << "\" x2=\"" << fixed(px(s.x[i]))
                  << "\" y2=\"" << fixed(py(s.y_high[i])) << "\"/>\n";
            }
            o << "<circle cx=\"" << fixed(px(s.x[i])) << "\" cy=\""
              << fixed(py(s.y[i])) << "\" r=\"3\"/>\n";
        }
        o << "</g>\n";
        const double ly = kTop + 10.0 + 20.0 * static_cast<double>(si);
        const double lx = kWidth - kRight + 15.0;
        o << "<g class=\"legend\"><rect x=\"" << fixed(lx) << "\" y=\""
          << fixed(ly - 6) << "\" width=\"14\" height=\"4\" fill=\"" << color
          << "\"/><text x=\"" << fixed(lx + 20) << "\" y=\"" << fixed(ly)
          << "\">" << escape_xml(s.name) << "</text></g>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string sha1_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha1(),
                   nullptr) != 1) {
        throw std::runtime_error("sha1 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

std::string git_blob_hash(std::string_view content) {
    std::string blob = "blob " + std::to_string(content.size());
    blob.push_back('\0');
    blob.append(content);
    return sha1_hex(blob);
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace rotcert
