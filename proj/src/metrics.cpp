#include "mrn/metrics.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mrn {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_metrics_header(std::ostream& os) {
    os << "round,codec,train_loss,eval_accuracy,uplink_bytes,elapsed_ms\n";
    os.flush();
}

void write_metrics_row(std::ostream& os, const RoundMetrics& m) {
    os << m.round << ',' << codec_name(m.codec) << ',' << fmt_double(m.train_loss) << ','
       << fmt_double(m.eval_accuracy) << ',' << m.uplink_bytes << ',' << m.elapsed_ms << '\n';
    os.flush();
}

void write_metrics(std::ostream& os, std::span<const RoundMetrics> rows) {
    write_metrics_header(os);
    for (const auto& m : rows) write_metrics_row(os, m);
}

std::vector<RoundMetrics> parse_metrics(std::istream& is) {
    std::vector<RoundMetrics> out;
    std::string line;
    bool saw_header = false;
    long line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line != "round,codec,train_loss,eval_accuracy,uplink_bytes,elapsed_ms")
                throw std::runtime_error("parse_metrics: unexpected header at line " +
                                         std::to_string(line_no));
            saw_header = true;
            continue;
        }
        RoundMetrics m;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const auto comma = line.find(',', pos);
            cells.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                        : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (cells.size() != 6)
            throw std::runtime_error("parse_metrics: malformed row at line " +
                                     std::to_string(line_no));
        m.round = std::stoi(cells[0]);
        m.codec = codec_from_name(cells[1]);
        m.train_loss = std::stod(cells[2]);
        m.eval_accuracy = std::stod(cells[3]);
        m.uplink_bytes = std::stol(cells[4]);
        m.elapsed_ms = std::stol(cells[5]);
        if (!out.empty() && out.back().codec == m.codec && m.round <= out.back().round)
            throw std::runtime_error("parse_metrics: rounds not increasing at line " +
                                     std::to_string(line_no));
        out.push_back(m);
    }
    if (!saw_header) throw std::runtime_error("parse_metrics: missing header");
    return out;
}

}  // namespace mrn
