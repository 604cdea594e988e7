#include "melanet/dataset.hpp"

#include <fstream>
#include <unordered_set>

#include "melanet/errors.hpp"
#include "melanet/image_io.hpp"
#include "melanet/rng.hpp"

namespace melanet {

std::string label_name(ClassLabel label) {
    return label == ClassLabel::benign ? "benign" : "malignant";
}

ClassLabel label_from_name(const std::string& name) {
    if (name == "benign") return ClassLabel::benign;
    if (name == "malignant") return ClassLabel::malignant;
    throw DataError("unknown label: " + name);
}

std::string provenance_name(Provenance p) {
    switch (p) {
        case Provenance::original: return "original";
        case Provenance::synthetic: return "synthetic";
        case Provenance::augmented: return "augmented";
    }
    return "original";
}

Provenance provenance_from_name(const std::string& name) {
    if (name == "original") return Provenance::original;
    if (name == "synthetic") return Provenance::synthetic;
    if (name == "augmented") return Provenance::augmented;
    throw DataError("unknown provenance: " + name);
}

ClassCounts LabelledDataset::class_counts() const {
    ClassCounts counts;
    for (const auto& s : samples) {
        if (s.label == ClassLabel::benign)
            ++counts.benign;
        else
            ++counts.malignant;
    }
    return counts;
}

void LabelledDataset::require_unique_ids() const {
    std::unordered_set<std::string> seen;
    for (const auto& s : samples) {
        if (!seen.insert(s.id).second)
            throw DataError("duplicate sample id: " + s.id);
    }
}

std::vector<const LabelledSample*> LabelledDataset::of_label(ClassLabel label) const {
    std::vector<const LabelledSample*> out;
    for (const auto& s : samples)
        if (s.label == label) out.push_back(&s);
    return out;
}

LabelledDataset LabelledDataset::filter_label(ClassLabel label) const {
    LabelledDataset out;
    for (const auto& s : samples)
        if (s.label == label) out.samples.push_back(s);
    return out;
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    size_t b = s.find_last_not_of(" \t");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace

LabelledDataset load_manifest(const std::filesystem::path& manifest_path,
                              const std::filesystem::path& image_root) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest: " + manifest_path.string());

    LabelledDataset ds;
    std::string line;
    int row = 0;
    // column indices resolved from the header; path and label are required
    int col_path = -1, col_label = -1, col_prov = -1, col_src = -1, col_id = -1;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto fields = split_csv_row(line);
        if (!header_seen) {
            header_seen = true;
            for (int i = 0; i < static_cast<int>(fields.size()); ++i) {
                std::string name = trim(fields[static_cast<size_t>(i)]);
                if (name == "path") col_path = i;
                else if (name == "label") col_label = i;
                else if (name == "provenance") col_prov = i;
                else if (name == "source_id") col_src = i;
                else if (name == "id") col_id = i;
            }
            if (col_path != 0 || col_label != 1)
                throw DataError("manifest row 1: expected header starting with 'path,label'");
            continue;
        }
        auto field = [&](int col) -> std::string {
            return col >= 0 && col < static_cast<int>(fields.size())
                       ? trim(fields[static_cast<size_t>(col)])
                       : std::string();
        };
        if (fields.size() < 2)
            throw DataError("manifest row " + std::to_string(row) + ": expected 'path,label'");
        LabelledSample s;
        std::string rel = field(col_path);
        try {
            s.label = label_from_name(field(col_label));
        } catch (const DataError&) {
            throw DataError("manifest row " + std::to_string(row) + ": unknown label '" +
                            field(col_label) + "'");
        }
        if (!field(col_prov).empty()) s.provenance = provenance_from_name(field(col_prov));
        s.source_id = field(col_src);
        s.id = field(col_id).empty() ? rel : field(col_id);
        try {
            s.image = decode_image(image_root / rel);
        } catch (const DataError& e) {
            throw DataError("manifest row " + std::to_string(row) + ": " + e.what());
        }
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw DataError("empty dataset: " + manifest_path.string());
    ds.require_unique_ids();
    return ds;
}

LabelledDataset undersample_balance(const LabelledDataset& dataset, uint64_t seed) {
    ClassCounts counts = dataset.class_counts();
    if (counts.benign == 0 || counts.malignant == 0)
        throw DataError("undersample_balance: both classes must be non-empty");
    ClassLabel majority =
        counts.benign >= counts.malignant ? ClassLabel::benign : ClassLabel::malignant;
    int64_t minority_count = std::min(counts.benign, counts.malignant);
    int64_t majority_count = std::max(counts.benign, counts.malignant);

    // choose which majority samples to keep, by position among majority samples
    std::vector<int64_t> majority_positions(static_cast<size_t>(majority_count));
    for (int64_t i = 0; i < majority_count; ++i) majority_positions[static_cast<size_t>(i)] = i;
    Rng rng(derive_seed(seed, "undersample_balance"));
    rng.shuffle(majority_positions);
    std::vector<bool> keep(static_cast<size_t>(majority_count), false);
    for (int64_t i = 0; i < minority_count; ++i)
        keep[static_cast<size_t>(majority_positions[static_cast<size_t>(i)])] = true;

    LabelledDataset out;
    out.order_seed = dataset.order_seed;
    int64_t maj_seen = 0;
    for (const auto& s : dataset.samples) {
        if (s.label == majority) {
            if (keep[static_cast<size_t>(maj_seen)]) out.samples.push_back(s);
            ++maj_seen;
        } else {
            out.samples.push_back(s);
        }
    }
    return out;
}

LabelledDataset merge_and_shuffle(const LabelledDataset& original,
                                  const LabelledDataset& synthetic, uint64_t seed) {
    LabelledDataset out;
    out.samples.reserve(original.samples.size() + synthetic.samples.size());
    out.samples.insert(out.samples.end(), original.samples.begin(), original.samples.end());
    out.samples.insert(out.samples.end(), synthetic.samples.begin(), synthetic.samples.end());
    out.require_unique_ids();
    Rng rng(derive_seed(seed, "merge_and_shuffle"));
    rng.shuffle(out.samples);
    out.order_seed = seed;
    return out;
}

void write_snapshot(const LabelledDataset& dataset, const std::filesystem::path& dir,
                    const nlohmann::json& metadata) {
    std::filesystem::create_directories(dir / "images");
    std::ofstream manifest(dir / "manifest.csv");
    if (!manifest) throw DataError("cannot write snapshot manifest in " + dir.string());
    manifest << "path,label,provenance,source_id,id\n";
    for (const auto& s : dataset.samples) {
        // sample ids may contain path separators; flatten for file names
        std::string flat = s.id;
        for (char& ch : flat)
            if (ch == '/' || ch == '\\') ch = '_';
        std::string file = "images/" + flat;
        if (file.size() < 4 || file.substr(file.size() - 4) != ".png") file += ".png";
        encode_png(quantize_to_raw(s.image), dir / file);
        manifest << file << "," << label_name(s.label) << "," << provenance_name(s.provenance)
                 << "," << s.source_id << "," << s.id << "\n";
    }
    manifest.close();

    nlohmann::json meta = metadata;
    meta["sample_count"] = dataset.size();
    meta["order_seed"] = dataset.order_seed;
    auto counts = dataset.class_counts();
    meta["class_counts"] = {{"benign", counts.benign}, {"malignant", counts.malignant}};
    std::ofstream mf(dir / "metadata.json");
    mf << meta.dump(2) << "\n";
}

LabelledDataset read_snapshot(const std::filesystem::path& dir) {
    LabelledDataset ds = load_manifest(dir / "manifest.csv", dir);
    auto meta = read_snapshot_metadata(dir);
    if (meta.contains("order_seed")) ds.order_seed = meta["order_seed"].get<uint64_t>();
    // restore original ids: snapshot manifests store the flattened image path
    return ds;
}

nlohmann::json read_snapshot_metadata(const std::filesystem::path& dir) {
    std::ifstream in(dir / "metadata.json");
    if (!in) throw DataError("missing snapshot metadata: " + (dir / "metadata.json").string());
    nlohmann::json j;
    in >> j;
    return j;
}

}  // namespace melanet
