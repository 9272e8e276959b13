#ifndef SKETCHLRA_IO_HPP
#define SKETCHLRA_IO_HPP

#include <string>
#include <vector>

#include "sketchlra/dense.hpp"

namespace sketchlra {

// DMAT text format:
//   line 1: "DMAT <rows> <cols> <real|complex>"
//   then rows*cols whitespace-separated scalars in row-major order,
//   complex entries as two numbers "re im".
// Values are printed with 17 significant digits so reading back is exact.
void write_dmat(const std::string& path, const DenseMatrix& M);
DenseMatrix read_dmat(const std::string& path);

std::string format_dmat(const DenseMatrix& M);
DenseMatrix parse_dmat(const std::string& text);

// simple key=value config files; '#' starts a comment
struct KvConfig {
    std::vector<std::pair<std::string, std::string>> items;
    bool has(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback = "") const;
    double get_num(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::vector<std::string> get_list(const std::string& key) const; // comma split
};
KvConfig parse_kv(const std::string& text);
KvConfig read_kv_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace sketchlra

#endif
