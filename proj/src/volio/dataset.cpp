#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>

#include "mia/volio.hpp"

namespace mia {

namespace fs = std::filesystem;

std::string_view split_name(Split s) { return s == Split::train ? "train" : "validation"; }

Split parse_split(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "validation" || name == "val") return Split::validation;
    throw std::invalid_argument("unknown split '" + std::string(name) + "' (expected train or validation)");
}

std::vector<std::string> label_space(Variant variant) {
    if (variant == Variant::detection) return {"non-covid", "covid"};
    return {"mild", "moderate", "severe", "critical"};
}

std::vector<std::size_t> DatasetIndex::class_counts() const {
    std::vector<std::size_t> counts(labels.size(), 0);
    for (const auto& s : samples) ++counts.at(s.label_index);
    return counts;
}

void write_index(const fs::path& path, const std::vector<IndexEntry>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write index '" + path.string() + "'");
    for (const auto& e : entries) out << e.path.generic_string() << '\t' << e.label << '\n';
    if (!out) throw IoError("failed writing index '" + path.string() + "'");
}

std::vector<IndexEntry> read_index_entries(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read index '" + path.string() + "'");
    std::vector<IndexEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() || line.find('\t', tab + 1) != std::string::npos) {
            throw FormatError(FormatError::Kind::invalid,
                              path.string() + ":" + std::to_string(lineno) + ": expected `path<TAB>label`");
        }
        entries.push_back({fs::path(line.substr(0, tab)), line.substr(tab + 1)});
    }
    return entries;
}

namespace {

std::optional<Split> split_of(const fs::path& p) {
    for (const auto& part : p) {
        const auto s = part.string();
        if (s == "train") return Split::train;
        if (s == "validation" || s == "val") return Split::validation;
    }
    return std::nullopt;
}

}  // namespace

DatasetIndex load_index(const fs::path& index_path, Split split, Variant variant) {
    DatasetIndex index;
    index.split = split;
    index.labels = label_space(variant);
    const fs::path base = index_path.parent_path();
    std::set<std::string> seen;
    for (const auto& e : read_index_entries(index_path)) {
        if (!seen.insert(e.path.generic_string()).second) {
            throw FormatError(FormatError::Kind::invalid, "duplicate index path '" + e.path.generic_string() + "'");
        }
        const auto it = std::find(index.labels.begin(), index.labels.end(), e.label);
        if (it == index.labels.end()) {
            throw FormatError(FormatError::Kind::invalid, "label '" + e.label + "' is not in the " +
                                                              std::string(variant_name(variant)) + " label space");
        }
        if (split_of(e.path) != split) continue;
        Sample s;
        s.path = e.path.is_absolute() ? e.path : base / e.path;
        s.label = e.label;
        s.label_index = static_cast<std::size_t>(it - index.labels.begin());
        index.samples.push_back(std::move(s));
    }
    return index;
}

}  // namespace mia
