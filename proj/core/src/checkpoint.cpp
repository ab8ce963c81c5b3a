#include "cqda/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <nlohmann/json.hpp>

#include "cqda/errors.hpp"
#include "cqda/io_util.hpp"
#include "cqda/log.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace cqda {

namespace {

using json = nlohmann::json;

void append_u32(std::string& out, std::uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

void append_f32(std::string& out, const std::vector<float>& values) {
    std::size_t off = out.size();
    out.resize(off + values.size() * 4);
    std::memcpy(out.data() + off, values.data(), values.size() * 4);
}

json adapter_header(const AdapterParams& a) {
    json j;
    j["adapter_variant"] = to_string(a.variant);
    j["adapter_dim"] = a.dim;
    j["adapter_hidden"] = a.hidden;
    j["adapter_params"] = a.param_count();
    return j;
}

std::vector<float> adapter_block(const AdapterParams& a) {
    std::vector<float> out(a.params.size());
    for (std::size_t i = 0; i < a.params.size(); ++i) out[i] = static_cast<float>(a.params[i]);
    return out;
}

struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n, const char* what) {
        if (pos + n > bytes.size()) {
            throw IoError(path + ": unexpected end of checkpoint while reading " +
                          std::string(what));
        }
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v;
        std::memcpy(&v, bytes.data() + pos, 4);
        pos += 4;
        return v;
    }
    std::vector<float> f32(std::size_t count, const char* what) {
        need(count * 4, what);
        std::vector<float> v(count);
        std::memcpy(v.data(), bytes.data() + pos, count * 4);
        pos += count * 4;
        return v;
    }
};

json read_header(Reader& r) {
    r.need(5, "magic");
    if (std::memcmp(r.bytes.data(), kCheckpointMagic, 5) != 0) {
        throw IoError(r.path + ": bad checkpoint magic");
    }
    r.pos = 5;
    std::uint32_t len = r.u32("header length");
    r.need(len, "header");
    json header;
    try {
        header = json::parse(r.bytes.substr(r.pos, len));
    } catch (const json::exception& e) {
        throw IoError(r.path + ": corrupt checkpoint header: " + e.what());
    }
    r.pos += len;
    return header;
}

AdapterParams adapter_from_header(const json& header, const std::vector<float>& block) {
    AdapterParams a;
    a.variant = adapter_variant_from_string(header.at("adapter_variant").get<std::string>());
    a.dim = header.at("adapter_dim").get<std::int64_t>();
    a.hidden = header.at("adapter_hidden").get<std::int64_t>();
    a.params.assign(block.begin(), block.end());
    AdapterParams shape = init_adapter(a.variant, std::max<std::int64_t>(a.dim, 1), 0, a.hidden);
    if (a.variant != AdapterVariant::global && a.params.size() != shape.params.size()) {
        throw IoError("adapter block size does not match its declared variant");
    }
    log::info("loaded adapter (" + to_string(a.variant) + ", " +
              std::to_string(a.param_count()) + " parameters)");
    return a;
}

std::string encode(const json& header, const std::vector<const std::vector<float>*>& blocks) {
    std::string out(kCheckpointMagic, 5);
    std::string header_bytes = header.dump();
    append_u32(out, static_cast<std::uint32_t>(header_bytes.size()));
    out += header_bytes;
    for (const auto* block : blocks) append_f32(out, *block);
    return out;
}

}  // namespace

std::string vocab_sha256(const Vocab& vocab) {
    return sha256_hex(vocab.entities_to_tsv() + vocab.relations_to_tsv());
}

void save_checkpoint(const std::string& path, const Embeddings& emb,
                     const std::string& vocab_sha, const AdapterParams* adapter) {
    json header;
    header["format_version"] = kCheckpointFormatVersion;
    header["kind"] = "embeddings";
    header["dim"] = emb.dim;
    header["n_entities"] = emb.n_entities;
    header["n_relations"] = emb.n_relations;
    header["dtype"] = "f32le";
    header["vocab_sha256"] = vocab_sha;
    std::vector<const std::vector<float>*> blocks{&emb.entity, &emb.relation};
    std::vector<float> ablock;
    if (adapter != nullptr) {
        header.update(adapter_header(*adapter));
        ablock = adapter_block(*adapter);
        blocks.push_back(&ablock);
    }
    atomic_write(path, encode(header, blocks));
}

Checkpoint load_checkpoint(const std::string& path) {
    std::string bytes = read_file(path);
    Reader r{bytes, 0, path};
    json header = read_header(r);
    if (header.at("kind").get<std::string>() != "embeddings") {
        throw IoError(path + ": not an embeddings checkpoint (kind = " +
                      header.at("kind").get<std::string>() + ")");
    }
    if (header.at("dtype").get<std::string>() != "f32le") {
        throw IoError(path + ": unsupported dtype");
    }
    Checkpoint ckpt;
    ckpt.embeddings.dim = header.at("dim").get<std::int64_t>();
    ckpt.embeddings.n_entities = header.at("n_entities").get<std::size_t>();
    ckpt.embeddings.n_relations = header.at("n_relations").get<std::size_t>();
    ckpt.vocab_sha256 = header.at("vocab_sha256").get<std::string>();
    std::size_t row = 2 * static_cast<std::size_t>(ckpt.embeddings.dim);
    ckpt.embeddings.entity = r.f32(ckpt.embeddings.n_entities * row, "entity table");
    ckpt.embeddings.relation = r.f32(ckpt.embeddings.n_relations * row, "relation table");
    if (header.contains("adapter_variant")) {
        auto count = header.at("adapter_params").get<std::size_t>();
        ckpt.adapter = adapter_from_header(header, r.f32(count, "adapter block"));
    }
    if (r.pos != bytes.size()) {
        throw IoError(path + ": trailing bytes after checkpoint payload");
    }
    log::info("loaded checkpoint " + path + " (" +
              std::to_string(ckpt.embeddings.n_entities) + " entities, " +
              std::to_string(ckpt.embeddings.n_relations) + " relations, dim " +
              std::to_string(ckpt.embeddings.dim) + ")");
    return ckpt;
}

void save_adapter_checkpoint(const std::string& path, const AdapterParams& adapter,
                             const std::string& backbone_sha) {
    json header;
    header["format_version"] = kCheckpointFormatVersion;
    header["kind"] = "adapter";
    header["dtype"] = "f32le";
    header["backbone_sha256"] = backbone_sha;
    header.update(adapter_header(adapter));
    std::vector<float> block = adapter_block(adapter);
    atomic_write(path, encode(header, {&block}));
}

AdapterCheckpoint load_adapter_checkpoint(const std::string& path) {
    std::string bytes = read_file(path);
    Reader r{bytes, 0, path};
    json header = read_header(r);
    if (header.at("kind").get<std::string>() != "adapter") {
        throw IoError(path + ": not an adapter checkpoint");
    }
    AdapterCheckpoint out;
    out.backbone_sha256 = header.at("backbone_sha256").get<std::string>();
    auto count = header.at("adapter_params").get<std::size_t>();
    out.adapter = adapter_from_header(header, r.f32(count, "adapter block"));
    if (r.pos != bytes.size()) {
        throw IoError(path + ": trailing bytes after checkpoint payload");
    }
    return out;
}

std::string inspect_checkpoint(const std::string& path) {
    std::string bytes = read_file(path);
    Reader r{bytes, 0, path};
    json header = read_header(r);
    std::string kind = header.at("kind").get<std::string>();
    std::string out = header.dump(2) + "\n";
    if (kind == "embeddings") {
        auto n_ent = header.at("n_entities").get<std::size_t>();
        auto n_rel = header.at("n_relations").get<std::size_t>();
        auto dim = header.at("dim").get<std::int64_t>();
        std::size_t backbone = (n_ent + n_rel) * 2 * static_cast<std::size_t>(dim);
        out += "entity table:   " + std::to_string(n_ent) + " x " + std::to_string(dim) +
               " (complex)\n";
        out += "relation table: " + std::to_string(n_rel) + " x " + std::to_string(dim) +
               " (complex)\n";
        out += "backbone parameters: " + std::to_string(backbone) + " (frozen)\n";
        if (header.contains("adapter_variant")) {
            out += "adapter parameters:  " +
                   std::to_string(header.at("adapter_params").get<std::size_t>()) + " (" +
                   header.at("adapter_variant").get<std::string>() + ")\n";
        }
    } else if (kind == "adapter") {
        out += "adapter parameters: " +
               std::to_string(header.at("adapter_params").get<std::size_t>()) + " (" +
               header.at("adapter_variant").get<std::string>() + ")\n";
        out += "backbone checkpoint sha256: " +
               header.at("backbone_sha256").get<std::string>() + "\n";
    } else {
        throw IoError(path + ": unknown checkpoint kind " + kind);
    }
    // Validate payload length against the header so truncation is reported.
    std::size_t expect = 0;
    if (kind == "embeddings") {
        auto dim = header.at("dim").get<std::size_t>();
        expect = (header.at("n_entities").get<std::size_t>() +
                  header.at("n_relations").get<std::size_t>()) *
                 2 * dim;
    }
    if (header.contains("adapter_params")) {
        expect += header.at("adapter_params").get<std::size_t>();
    }
    if (bytes.size() - r.pos != expect * 4) {
        throw IoError(path + ": unexpected end of checkpoint (payload " +
                      std::to_string(bytes.size() - r.pos) + " bytes, header declares " +
                      std::to_string(expect * 4) + ")");
    }
    return out;
}

}  // namespace cqda
