#include "turbgen/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "turbgen/error.hpp"

namespace turb {

namespace {

void write_row(std::ostream& out, const char* tag, const std::vector<double>& v) {
    if (v.empty()) return;
    out << tag;
    char buf[32];
    for (double x : v) {
        std::snprintf(buf, sizeof buf, " %.17g", x);
        out << buf;
    }
    out << "\n";
}

}  // namespace

void write_reports(std::ostream& out, const std::vector<std::string>& headerLines,
                   const std::vector<EstimatorReport>& reports) {
    for (const auto& line : headerLines) out << "# " << line << "\n";
    for (const auto& r : reports) {
        out << "report " << r.name << " rows " << r.rows << " cols " << r.cols << " n "
            << r.nSamples << "\n";
        write_row(out, "estimate", r.estimate);
        write_row(out, "stderr", r.stdError);
        write_row(out, "target", r.target);
        write_row(out, "zscore", r.zScore);
        out << "end\n";
    }
}

void write_reports_file(const std::string& path, const std::vector<std::string>& headerLines,
                        const std::vector<EstimatorReport>& reports) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write report file: " + path);
    write_reports(out, headerLines, reports);
}

std::vector<EstimatorReport> read_reports(std::istream& in) {
    std::vector<EstimatorReport> out;
    std::string line;
    EstimatorReport cur;
    bool open = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "report") {
            if (open) throw ParseError("report stream: nested record");
            cur = EstimatorReport{};
            std::string kw;
            if (!(ls >> cur.name >> kw >> cur.rows) || kw != "rows")
                throw ParseError("report stream: bad record header");
            if (!(ls >> kw >> cur.cols) || kw != "cols")
                throw ParseError("report stream: bad record header");
            if (!(ls >> kw >> cur.nSamples) || kw != "n")
                throw ParseError("report stream: bad record header");
            open = true;
        } else if (tag == "end") {
            if (!open) throw ParseError("report stream: stray end");
            out.push_back(cur);
            open = false;
        } else if (tag == "estimate" || tag == "stderr" || tag == "target" || tag == "zscore") {
            if (!open) throw ParseError("report stream: data outside record");
            std::vector<double>* dst = tag == "estimate" ? &cur.estimate
                                      : tag == "stderr"  ? &cur.stdError
                                      : tag == "target"  ? &cur.target
                                                         : &cur.zScore;
            double v;
            while (ls >> v) dst->push_back(v);
        } else {
            throw ParseError("report stream: unknown tag '" + tag + "'");
        }
    }
    if (open) throw ParseError("report stream: unterminated record");
    return out;
}

std::vector<EstimatorReport> read_reports_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open report file: " + path);
    return read_reports(in);
}

}  // namespace turb
