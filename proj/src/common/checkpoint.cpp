#include "common/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "common/error.hpp"

namespace ranopt {

static_assert(std::endian::native == std::endian::little, "checkpoint blob assumes little-endian host");

namespace {
constexpr const char* kMagic = "RANOPT-CKPT 1";
}

const NamedTensor& Checkpoint::tensor(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return t;
    throw Error("checkpoint", "tensor '" + name + "' missing from " + kind + " checkpoint");
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    nlohmann::json header;
    header["kind"] = ckpt.kind;
    header["meta"] = ckpt.meta;
    std::size_t total = 0;
    auto shapes = nlohmann::json::array();
    for (const auto& t : ckpt.tensors) {
        if (t.data.size() != t.rows * t.cols) throw Error("checkpoint", "tensor '" + t.name + "' shape mismatch");
        shapes.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
        total += t.data.size() * sizeof(double);
    }
    header["tensors"] = shapes;
    header["blob_bytes"] = total;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("checkpoint", "cannot write " + path);
    out << kMagic << '\n' << header.dump() << '\n';
    for (const auto& t : ckpt.tensors)
        out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!out) throw Error("checkpoint", "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path, const std::string& expected_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("checkpoint", "required file not found: " + path);
    std::string magic, header_line;
    std::getline(in, magic);
    if (magic != kMagic) throw Error("checkpoint", "not a checkpoint file (bad magic): " + path);
    std::getline(in, header_line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const std::exception& e) {
        throw Error("checkpoint", std::string("corrupt header: ") + e.what());
    }
    Checkpoint ckpt;
    ckpt.kind = header.at("kind").get<std::string>();
    if (ckpt.kind != expected_kind)
        throw Error("checkpoint", "expected a " + expected_kind + " checkpoint, got " + ckpt.kind);
    ckpt.meta = header.at("meta");
    for (const auto& s : header.at("tensors")) {
        NamedTensor t;
        t.name = s.at("name").get<std::string>();
        t.rows = s.at("rows").get<std::size_t>();
        t.cols = s.at("cols").get<std::size_t>();
        t.data.resize(t.rows * t.cols);
        in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!in) throw Error("checkpoint", "truncated blob in " + path);
        ckpt.tensors.push_back(std::move(t));
    }
    return ckpt;
}

} // namespace ranopt
