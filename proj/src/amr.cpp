#include "mspl/amr.hpp"

#include <array>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "mspl/csv.hpp"
#include "mspl/errors.hpp"

namespace mspl::amr {

namespace {

//                                         S  I  R  1  0  N
constexpr std::array<std::array<int, kAmrSymbolCount>, kAmrSymbolCount> kSimilarity{{
    {1, 0, 0, 0, 1, 0},  // S
    {0, 1, 0, 1, 0, 0},  // I
    {0, 0, 1, 1, 0, 0},  // R
    {0, 1, 1, 1, 0, 0},  // 1
    {1, 0, 0, 0, 1, 0},  // 0
    {0, 0, 0, 0, 0, 0},  // N
}};

}  // namespace

AmrSymbol parse_symbol(const std::string& text, const std::string& sample_id) {
    if (text.empty() || text == "N") return AmrSymbol::unknown;
    if (text.size() == 1) switch (text[0]) {
            case 'S': return AmrSymbol::S;
            case 'I': return AmrSymbol::I;
            case 'R': return AmrSymbol::R;
            case '1': return AmrSymbol::one;
            case '0': return AmrSymbol::zero;
            default: break;
        }
    throw DataError("unknown AMR label '" + text + "' for sample " + sample_id);
}

char symbol_char(AmrSymbol s) {
    constexpr std::array<char, kAmrSymbolCount> chars{'S', 'I', 'R', '1', '0', 'N'};
    return chars[static_cast<int>(s)];
}

int amr_label_similarity(AmrSymbol a, AmrSymbol b) { return kSimilarity[static_cast<int>(a)][static_cast<int>(b)]; }

int amr_dissimilarity(const AmrProfile& p, const AmrProfile& q) {
    if (p.labels.size() != q.labels.size())
        throw DataError("AMR profiles " + p.id + " and " + q.id + " have different lengths (" +
                        std::to_string(p.labels.size()) + " vs " + std::to_string(q.labels.size()) + ")");
    int similarity = 0;
    for (std::size_t d = 0; d < p.labels.size(); ++d) similarity += amr_label_similarity(p.labels[d], q.labels[d]);
    return static_cast<int>(p.labels.size()) - similarity;
}

DissimilarityMatrix amr_matrix(const std::vector<AmrProfile>& profiles) {
    DissimilarityMatrix m;
    const std::size_t n = profiles.size();
    m.values = Matrix(n, n);
    for (const auto& p : profiles) m.ids.push_back(p.id);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            int v = 0;
            try {
                v = amr_dissimilarity(profiles[i], profiles[j]);
            } catch (const DataError& e) {
                throw DataError("AMR matrix entry (" + std::to_string(i) + ", " + std::to_string(j) + "): " + e.what());
            }
            m.values(i, j) = m.values(j, i) = static_cast<double>(v);
        }
    return m;
}

cluster::ClusterAssignment derive_gt_clusters(const DissimilarityMatrix& matrix, double threshold) {
    if (!(threshold > 0.0)) throw UsageError("ground-truth threshold must be positive");
    return cluster::cut_by_threshold(cluster::agglomerate_complete(matrix.values), threshold);
}

std::vector<AmrProfile> read_amr_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::size_t id_col = table.column("id");
    std::vector<AmrProfile> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        AmrProfile p;
        p.id = row.fields[id_col];
        for (std::size_t c = 0; c < row.fields.size(); ++c) {
            if (c == id_col) continue;
            try {
                p.labels.push_back(parse_symbol(row.fields[c], p.id));
            } catch (const DataError& e) {
                throw DataError(path.string() + ":" + std::to_string(row.line) + ": " + e.what());
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

void write_amr_csv(const std::vector<AmrProfile>& profiles, const std::vector<std::string>& drugs,
                   const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "id";
    for (const auto& d : drugs) out << ',' << d;
    out << '\n';
    for (const auto& p : profiles) {
        if (p.labels.size() != drugs.size()) throw UsageError("profile " + p.id + " does not match the drug list");
        out << p.id;
        for (auto s : p.labels) out << ',' << symbol_char(s);
        out << '\n';
    }
}

PairedDataset load_paired_dataset(const std::filesystem::path& features_path, const StructureSource& structure,
                                  DatasetKind kind) {
    const auto table = csv::read(features_path);
    const std::string src = features_path.string();
    const std::size_t id_col = table.column("id");
    const std::size_t species_col = table.column("species");
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < table.header.size(); ++c)
        if (c != id_col && c != species_col) feature_cols.push_back(c);
    if (feature_cols.empty()) throw DataError(src + ": no feature columns");

    PairedDataset out;
    Dataset& d = out.dataset;
    d.kind = kind;
    d.features = Matrix(table.rows.size(), feature_cols.size());
    std::unordered_map<std::string, int> species_ids;
    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto& id = row.fields[id_col];
        if (!row_of.emplace(id, i).second)
            throw DataError(src + ":" + std::to_string(row.line) + ": duplicate id '" + id + "'");
        d.ids.push_back(id);
        const auto& species = row.fields[species_col];
        auto [it, inserted] = species_ids.emplace(species, static_cast<int>(d.label_names.size()));
        if (inserted) d.label_names.push_back(species);
        d.labels.push_back(it->second);
        for (std::size_t j = 0; j < feature_cols.size(); ++j)
            d.features(i, j) = csv::parse_double(row.fields[feature_cols[j]], src, row.line);
    }

    auto align = [&](const std::vector<std::string>& ids, const std::string& other) {
        std::vector<std::size_t> pos(d.size(), static_cast<std::size_t>(-1));
        for (std::size_t k = 0; k < ids.size(); ++k) {
            auto it = row_of.find(ids[k]);
            if (it == row_of.end()) throw DataError(other + ": id '" + ids[k] + "' is not in " + src);
            pos[it->second] = k;
        }
        for (std::size_t i = 0; i < d.size(); ++i)
            if (pos[i] == static_cast<std::size_t>(-1)) throw DataError(other + ": missing id '" + d.ids[i] + "'");
        return pos;
    };

    if (structure.kind == StructureSource::Kind::amr_profiles) {
        auto profiles = read_amr_csv(structure.path);
        const auto pos = align([&] {
            std::vector<std::string> ids;
            for (const auto& p : profiles) ids.push_back(p.id);
            return ids;
        }(), structure.path.string());
        std::vector<AmrProfile> ordered;
        for (std::size_t i = 0; i < d.size(); ++i) ordered.push_back(profiles[pos[i]]);
        out.num_drugs = ordered.empty() ? 0 : ordered.front().labels.size();
        d.dissimilarity = amr_matrix(ordered);
        out.profiles = std::move(ordered);
    } else {
        const auto raw = read_dissimilarity_csv(structure.path);
        const auto pos = align(raw.ids, structure.path.string());
        d.dissimilarity = raw.subset(pos);
    }
    d.validate();
    return out;
}

void write_manifest(const PairedDataset& data, const std::filesystem::path& path,
                    const std::vector<std::filesystem::path>& sources) {
    const auto& d = data.dataset;
    nlohmann::json j;
    j["kind"] = to_string(d.kind);
    j["samples"] = d.size();
    j["features"] = d.features.cols;
    j["num_drugs"] = data.num_drugs;
    nlohmann::json labels = nlohmann::json::array();
    for (std::size_t i = 0; i < d.label_names.size(); ++i) labels.push_back({{"id", i}, {"name", d.label_names[i]}});
    j["labels"] = labels;
    j["sources"] = nlohmann::json::array();
    for (const auto& s : sources) j["sources"].push_back(s.string());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace mspl::amr
