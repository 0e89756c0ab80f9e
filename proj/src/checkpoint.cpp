#include "mspl/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "mspl/errors.hpp"

namespace mspl::model {

namespace {

constexpr std::array<char, 8> kMagic{'M', 'S', 'P', 'L', 'C', 'K', 'P', 'T'};
constexpr int kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in, const std::string& src) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError(src + ": truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const MsplModel& model, std::uint64_t epoch, const std::filesystem::path& path) {
    nlohmann::json header;
    header["format"] = "mspl-checkpoint";
    header["version"] = kVersion;
    header["config"] = model.config();
    header["seed"] = model.seed();
    header["epoch"] = epoch;
    header["parameters"] = nlohmann::json::array();
    for (const auto* p : model.parameters())
        header["parameters"].push_back({{"name", p->name}, {"shape", p->value.shape()}});
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(kMagic.data(), kMagic.size());
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto* p : model.parameters())
        for (double v : p->value.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    if (!out) throw DataError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string src = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + src);
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw DataError(src + ": not an MSPL checkpoint");
    const std::uint64_t len = get_u64(in, src);
    std::string text(len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw DataError(src + ": truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(src + ": bad header: " + e.what());
    }
    if (header.value("version", 0) != kVersion) throw DataError(src + ": unsupported checkpoint version");

    Checkpoint ck;
    ck.model = std::make_unique<MsplModel>(header.at("config").get<ModelConfig>(), header.at("seed").get<std::uint64_t>());
    ck.epoch = header.at("epoch").get<std::uint64_t>();
    const auto& listed = header.at("parameters");
    auto params = ck.model->parameters();
    if (listed.size() != params.size()) throw DataError(src + ": parameter list does not match the configuration");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (listed[i].at("name").get<std::string>() != params[i]->name ||
            listed[i].at("shape").get<ad::Shape>() != params[i]->value.shape())
            throw DataError(src + ": parameter " + std::to_string(i) + " does not match " + params[i]->name);
        for (auto& v : params[i]->value.data()) v = std::bit_cast<double>(get_u64(in, src));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw DataError(src + ": trailing bytes after parameters");
    return ck;
}

}  // namespace mspl::model
