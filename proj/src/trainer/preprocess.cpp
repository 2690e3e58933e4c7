#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "mia/trainer.hpp"

namespace mia {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> sorted_children(const fs::path& dir, bool directories_only) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.empty() || name[0] == '.') continue;
        if (directories_only && !e.is_directory()) continue;
        out.push_back(e.path());
    }
    std::sort(out.begin(), out.end(),
              [](const fs::path& a, const fs::path& b) { return natural_less(a.filename().string(), b.filename().string()); });
    return out;
}

}  // namespace

std::vector<PreprocessItem> scan_dataset_tree(const fs::path& in) {
    if (!fs::is_directory(in)) throw IoError("input directory '" + in.string() + "' does not exist");
    std::vector<PreprocessItem> items;
    for (const auto& split_dir : sorted_children(in, true)) {
        const std::string split = split_dir.filename().string();
        for (const auto& class_dir : sorted_children(split_dir, true)) {
            const std::string label = class_dir.filename().string();
            for (const auto& scan : sorted_children(class_dir, false)) {
                const bool is_miav = fs::is_regular_file(scan) && scan.extension() == ".miav";
                if (!fs::is_directory(scan) && !is_miav) continue;
                const std::string id = is_miav ? scan.stem().string() : scan.filename().string();
                items.push_back({scan, fs::path(split) / label / (id + ".miav"), label});
            }
        }
    }
    if (items.empty()) throw IoError("no scans found under '" + in.string() + "' (expected <split>/<class>/<scan>)");
    return items;
}

fs::path preprocess_dataset(const fs::path& in, const fs::path& out, Dims dims, std::size_t jobs) {
    const auto items = scan_dataset_tree(in);
    jobs = std::clamp<std::size_t>(jobs, 1, items.size());
    std::vector<std::exception_ptr> errors(items.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
            try {
                Volume v = load_volume(items[i].source);
                if (v.dims() != dims) v = resample_volume(v, dims);
                const fs::path dst = out / items[i].relative_output;
                fs::create_directories(dst.parent_path());
                write_miav(v, dst);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // Report the first failure in item order so the message does not depend on scheduling.
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<IndexEntry> entries;
    for (const auto& it : items) entries.push_back({it.relative_output, it.label});
    const fs::path index_path = out / "index.tsv";
    write_index(index_path, entries);
    return index_path;
}

}  // namespace mia
