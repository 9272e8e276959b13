#include "sketchlra/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace sketchlra {

std::string format_dmat(const DenseMatrix& M) {
    std::ostringstream os;
    os << "DMAT " << M.rows() << " " << M.cols() << " "
       << (M.is_complex() ? "complex" : "real") << "\n";
    char buf[64];
    const int per_line = M.is_complex() ? 2 : 4;
    int on_line = 0;
    for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j) {
            if (M.is_complex()) {
                const cd z = M.cat(i, j);
                std::snprintf(buf, sizeof buf, "%.17g %.17g", z.real(), z.imag());
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", M.at(i, j));
            }
            os << buf << (++on_line % per_line == 0 ? "\n" : " ");
        }
    std::string out = os.str();
    if (out.back() != '\n') out.push_back('\n');
    return out;
}

DenseMatrix parse_dmat(const std::string& text) {
    std::istringstream is(text);
    std::string magic, kind;
    int rows = 0, cols = 0;
    if (!(is >> magic >> rows >> cols >> kind) || magic != "DMAT")
        throw IoError("not a DMAT header");
    if (kind != "real" && kind != "complex") throw IoError("DMAT: bad scalar kind");
    if (rows < 0 || cols < 0) throw IoError("DMAT: bad shape");
    const bool cx = kind == "complex";
    DenseMatrix M(rows, cols, cx);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            double re = 0, im = 0;
            if (!(is >> re)) throw IoError("DMAT: truncated data");
            if (cx && !(is >> im)) throw IoError("DMAT: truncated complex data");
            M.cset(i, j, cd(re, im));
        }
    if (!M.all_finite()) throw IoError("DMAT: non-finite entry");
    return M;
}

void write_dmat(const std::string& path, const DenseMatrix& M) {
    write_text_file(path, format_dmat(M));
}

DenseMatrix read_dmat(const std::string& path) { return parse_dmat(read_text_file(path)); }

// ---- key=value config ---------------------------------------------------------

bool KvConfig::has(const std::string& key) const {
    for (const auto& [k, v] : items)
        if (k == key) return true;
    return false;
}

std::string KvConfig::get(const std::string& key, const std::string& fallback) const {
    for (const auto& [k, v] : items)
        if (k == key) return v;
    return fallback;
}

double KvConfig::get_num(const std::string& key, double fallback) const {
    const std::string v = get(key);
    return v.empty() ? fallback : std::stod(v);
}

long long KvConfig::get_int(const std::string& key, long long fallback) const {
    const std::string v = get(key);
    return v.empty() ? fallback : std::stoll(v);
}

std::vector<std::string> KvConfig::get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream is(get(key));
    std::string tok;
    while (std::getline(is, tok, ',')) {
        // trim
        const auto a = tok.find_first_not_of(" \t");
        const auto b = tok.find_last_not_of(" \t");
        if (a != std::string::npos) out.push_back(tok.substr(a, b - a + 1));
    }
    return out;
}

KvConfig parse_kv(const std::string& text) {
    KvConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ParseError("config line " + std::to_string(lineno) +
                                 ": expected key=value");
            continue;
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        cfg.items.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

KvConfig read_kv_file(const std::string& path) { return parse_kv(read_text_file(path)); }

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << text;
    if (!f) throw IoError("write failed: " + path);
}

} // namespace sketchlra
