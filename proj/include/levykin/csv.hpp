#pragma once

// Minimal CSV writing/reading for the CLI's file contracts.

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "levykin/errors.hpp"

namespace levykin::csv {

class Writer {
  public:
    explicit Writer(const std::string& path) : out_(path) {
        if (!out_) throw ValidationError("cannot open for writing: " + path);
        out_ << std::setprecision(17);
    }

    void header(const std::vector<std::string>& cols) {
        for (size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
        out_ << "\n";
    }

    template <typename... Ts>
    void row(Ts... vals) {
        bool first = true;
        ((out_ << (first ? "" : ","), first = false, out_ << vals), ...);
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column_index(const std::string& name) const {
        for (size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return (int)i;
        throw ValidationError("csv column not found: " + name);
    }
};

inline Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open csv: " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty csv: " + path);
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != t.columns.size()) throw ValidationError("ragged csv row in " + path);
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace levykin::csv
