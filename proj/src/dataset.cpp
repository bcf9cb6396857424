#include "bnn/dataset.hpp"

#include "bnn/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace bnn {

void Dataset::validate() const {
    if (rows.empty()) return;
    const auto d = rows.front().x.size();
    const auto k = rows.front().y.size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Sample& s = rows[r];
        if (s.x.size() != d || s.y.size() != k) throw ConfigError("row " + std::to_string(r) + " has inconsistent width");
        if (!s.x.allFinite()) throw ConfigError("row " + std::to_string(r) + " has non-finite features");
        int ones = 0;
        for (Eigen::Index i = 0; i < s.y.size(); ++i) {
            if (s.y[i] == 1.0) {
                ++ones;
            } else if (s.y[i] != 0.0) {
                throw ConfigError("row " + std::to_string(r) + " label entries must be 0 or 1");
            }
        }
        if (ones > 1) throw ConfigError("row " + std::to_string(r) + " has more than one active label");
    }
}

Eigen::VectorXd encode_label(std::size_t cls, std::size_t n_classes) {
    if (n_classes < 2 || cls >= n_classes) {
        throw ConfigError("class " + std::to_string(cls) + " out of range for " + std::to_string(n_classes) + " classes");
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_classes - 1));
    if (cls + 1 < n_classes) y[static_cast<Eigen::Index>(cls)] = 1.0;
    return y;
}

std::size_t decode_label(const Eigen::VectorXd& y) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] == 1.0) return static_cast<std::size_t>(i);
    }
    return static_cast<std::size_t>(y.size());
}

std::size_t wedge_class(double x1, double x2) {
    const double a = x1 + x2;
    const double b = -x1 + x2;
    if (a > 0.0 && b > 0.0) return 0;
    if (a < 0.0 && b < 0.0) return 1;
    return 2;
}

namespace {

void append_number(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

double parse_number(const std::string& field, std::size_t line) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
        throw IoError("line " + std::to_string(line) + ": cannot parse '" + field + "' as a number");
    }
    return v;
}

}  // namespace

void write_dataset_csv(const Dataset& data, std::size_t n_classes, const std::filesystem::path& path) {
    data.validate();
    std::string out;
    const Eigen::Index d = data.empty() ? 2 : data.rows.front().x.size();
    for (Eigen::Index i = 0; i < d; ++i) out += "x" + std::to_string(i + 1) + ",";
    out += "label\n";
    for (const Sample& s : data.rows) {
        for (Eigen::Index i = 0; i < s.x.size(); ++i) {
            append_number(out, s.x[i]);
            out += ',';
        }
        if (static_cast<std::size_t>(s.y.size()) + 1 != n_classes) throw ConfigError("label width does not match class count");
        out += std::to_string(decode_label(s.y) + 1);
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << out;
    if (!f) throw IoError("failed writing " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path, std::size_t n_classes) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw IoError(path.string() + " is empty");
    std::size_t columns = 1;
    for (char c : line) columns += c == ',' ? 1 : 0;
    if (columns < 2) throw IoError(path.string() + ": expected a header with features and a label column");

    Dataset data;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != columns) throw IoError("line " + std::to_string(lineno) + ": wrong number of fields");
        Sample s;
        s.x.resize(static_cast<Eigen::Index>(columns - 1));
        for (std::size_t i = 0; i + 1 < columns; ++i) s.x[static_cast<Eigen::Index>(i)] = parse_number(fields[i], lineno);
        const double label = parse_number(fields.back(), lineno);
        if (label != std::floor(label) || label < 1.0 || label > static_cast<double>(n_classes)) {
            throw IoError("line " + std::to_string(lineno) + ": label must be an integer in 1.." + std::to_string(n_classes));
        }
        s.y = encode_label(static_cast<std::size_t>(label) - 1, n_classes);
        data.rows.push_back(std::move(s));
    }
    data.validate();
    return data;
}

}  // namespace bnn
