// result_table.hpp — Named-column scalar tables with lossless CSV/JSON round
// trips: 17 significant digits, comma delimiter, '#' comment lines.

#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace unravel {

class ResultTable {
public:
    ResultTable(std::vector<std::string> columns, std::vector<std::string> comments = {})
        : columns_(std::move(columns)), comments_(std::move(comments)) {
        if (columns_.empty()) throw std::invalid_argument("ResultTable: no columns");
    }

    void add_row(std::vector<double> row) {
        if (row.size() != columns_.size())
            throw std::invalid_argument("ResultTable: row width " + std::to_string(row.size()) +
                                        " does not match " + std::to_string(columns_.size()) +
                                        " columns");
        rows_.push_back(std::move(row));
    }

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::string>& comments() const { return comments_; }
    const std::vector<std::vector<double>>& rows() const { return rows_; }
    std::size_t n_rows() const { return rows_.size(); }

    double at(std::size_t row, const std::string& column) const {
        for (std::size_t c = 0; c < columns_.size(); ++c)
            if (columns_[c] == column) return rows_.at(row).at(c);
        throw std::out_of_range("ResultTable: no column named " + column);
    }

    std::vector<double> column(const std::string& name) const {
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            if (columns_[c] != name) continue;
            std::vector<double> out;
            out.reserve(rows_.size());
            for (const auto& r : rows_) out.push_back(r[c]);
            return out;
        }
        throw std::out_of_range("ResultTable: no column named " + name);
    }

    static std::string format_value(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

    void write_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("ResultTable: cannot write " + path);
        for (const auto& c : comments_) out << "# " << c << "\n";
        for (std::size_t c = 0; c < columns_.size(); ++c)
            out << columns_[c] << (c + 1 < columns_.size() ? "," : "\n");
        for (const auto& row : rows_) {
            for (std::size_t c = 0; c < row.size(); ++c)
                out << format_value(row[c]) << (c + 1 < row.size() ? "," : "\n");
        }
        if (!out) throw std::runtime_error("ResultTable: write failed for " + path);
    }

    static ResultTable read_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("ResultTable: cannot read " + path);
        std::vector<std::string> comments;
        std::string line;
        bool have_header = false;
        std::vector<std::string> columns;
        std::vector<std::vector<double>> rows;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (line.front() == '#') {
                comments.push_back(line.size() > 2 ? line.substr(2) : "");
                continue;
            }
            std::stringstream ss(line);
            std::string cell;
            if (!have_header) {
                while (std::getline(ss, cell, ',')) columns.push_back(cell);
                have_header = true;
                continue;
            }
            std::vector<double> row;
            while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
            rows.push_back(std::move(row));
        }
        if (!have_header) throw std::runtime_error("ResultTable: no header in " + path);
        ResultTable table(std::move(columns), std::move(comments));
        for (auto& r : rows) table.add_row(std::move(r));
        return table;
    }

    // JSON mirror: rows as objects keyed by the column names.
    void write_json(const std::string& path) const {
        nlohmann::json j;
        j["comments"] = comments_;
        j["columns"] = columns_;
        nlohmann::json data = nlohmann::json::array();
        for (const auto& row : rows_) {
            nlohmann::json obj;
            for (std::size_t c = 0; c < columns_.size(); ++c) obj[columns_[c]] = row[c];
            data.push_back(std::move(obj));
        }
        j["rows"] = std::move(data);
        std::ofstream out(path);
        if (!out) throw std::runtime_error("ResultTable: cannot write " + path);
        out << j.dump(2) << "\n";
    }

    static ResultTable read_json(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("ResultTable: cannot read " + path);
        nlohmann::json j;
        in >> j;
        ResultTable table(j.at("columns").get<std::vector<std::string>>(),
                          j.at("comments").get<std::vector<std::string>>());
        for (const auto& obj : j.at("rows")) {
            std::vector<double> row;
            row.reserve(table.columns().size());
            for (const auto& c : table.columns()) row.push_back(obj.at(c).get<double>());
            table.add_row(std::move(row));
        }
        return table;
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::string> comments_;
    std::vector<std::vector<double>> rows_;
};

}  // namespace unravel
