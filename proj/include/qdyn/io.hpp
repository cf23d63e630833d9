#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qdyn/dynamics.hpp"
#include "qdyn/errors.hpp"
#include "qdyn/pulse.hpp"

// Tabular output: CSV (one header, `# params:` comment lines separating
// parameter blocks) and an equivalent JSON form.

namespace qdyn {

inline std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using ParamList = std::vector<std::pair<std::string, std::string>>;

struct TableBlock {
    ParamList params;
    std::vector<std::vector<double>> rows;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<TableBlock> blocks;
};

inline ParamList pulse_params(const BiasPulse& pulse) {
    const auto& p = pulse.params();
    ParamList out{{"family", family_name(p.family)}, {"xi", g17(p.xi)}};
    if (p.family == Family::Family3) {
        out.emplace_back("omega", g17(p.omega));
        out.emplace_back("phi", g17(p.phi));
        out.emplace_back("b", g17(pulse.b()));
    }
    return out;
}

inline Table trajectory_table(const Trajectory& traj, ParamList params = {}) {
    Table t;
    t.columns = {"tau", "epsilon", "X", "Y", "Z", "p_up", "p_plus"};
    TableBlock blk;
    params.emplace_back("tol", g17(traj.meta.tol));
    params.emplace_back("steps", std::to_string(traj.meta.steps));
    params.emplace_back("rejections", std::to_string(traj.meta.rejections));
    blk.params = std::move(params);
    blk.rows.reserve(traj.samples.size());
    for (const auto& s : traj.samples)
        blk.rows.push_back({s.tau, s.epsilon, s.x, s.y, s.z, s.p_up, s.p_plus});
    t.blocks.push_back(std::move(blk));
    return t;
}

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        os << (c ? "," : "") << t.columns[c];
    os << '\n';
    for (const auto& blk : t.blocks) {
        os << "# params:";
        for (const auto& [k, v] : blk.params) os << ' ' << k << '=' << v;
        os << '\n';
        for (const auto& row : blk.rows) {
            for (std::size_t c = 0; c < row.size(); ++c)
                os << (c ? "," : "") << g17(row[c]);
            os << '\n';
        }
    }
}

inline nlohmann::json table_json(const Table& t) {
    nlohmann::json j;
    j["columns"] = t.columns;
    j["blocks"] = nlohmann::json::array();
    for (const auto& blk : t.blocks) {
        nlohmann::json jb;
        jb["params"] = nlohmann::json::object();
        for (const auto& [k, v] : blk.params) jb["params"][k] = v;
        jb["rows"] = blk.rows;
        j["blocks"].push_back(std::move(jb));
    }
    return j;
}

inline void write_table(std::ostream& os, const Table& t, const std::string& format) {
    if (format == "csv")
        write_csv(os, t);
    else if (format == "json")
        os << table_json(t).dump(2) << '\n';
    else
        throw InvalidParams("unknown output format '" + format + "'");
}

inline Table read_csv(std::istream& is) {
    Table t;
    std::string line;
    bool have_header = false;
    auto split = [](const std::string& s, char sep) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, sep)) parts.push_back(item);
        return parts;
    };
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# params:", 0) == 0) {
            TableBlock blk;
            std::stringstream ss(line.substr(9));
            std::string tok;
            while (ss >> tok) {
                const auto eq = tok.find('=');
                if (eq != std::string::npos)
                    blk.params.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
            }
            t.blocks.push_back(std::move(blk));
            continue;
        }
        if (line[0] == '#') continue;
        if (!have_header) {
            t.columns = split(line, ',');
            have_header = true;
            continue;
        }
        if (t.blocks.empty()) t.blocks.emplace_back();
        std::vector<double> row;
        for (const auto& cell : split(line, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw InvalidParams("non-numeric cell '" + cell + "' in CSV row");
            }
        }
        if (row.size() != t.columns.size())
            throw InvalidParams("CSV row has " + std::to_string(row.size()) +
                                " cells, expected " +
                                std::to_string(t.columns.size()));
        t.blocks.back().rows.push_back(std::move(row));
    }
    if (!have_header) throw InvalidParams("CSV input has no header line");
    return t;
}

} // namespace qdyn
