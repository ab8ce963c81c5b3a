#pragma once

#include <optional>
#include <string>

#include "cqda/adapter.hpp"
#include "cqda/embeddings.hpp"
#include "cqda/vocab.hpp"

namespace cqda {

// Binary layout (all little-endian):
//   bytes 0..4   magic "CQDA1"
//   uint32       header byte length
//   header       UTF-8 JSON {format_version, kind, dim, n_entities,
//                n_relations, dtype:"f32le", vocab_sha256, ...}
//   payload      float32 tensors, row-major, [re, im] interleaved per dim:
//                entity table, relation table, then the adapter block when
//                present. Standalone adapter files carry kind:"adapter" and
//                a backbone_sha256 reference instead of the tables.

inline constexpr char kCheckpointMagic[5] = {'C', 'Q', 'D', 'A', '1'};
inline constexpr int kCheckpointFormatVersion = 1;

// sha256 over the canonical vocab file bytes (entity table then relation
// table).
std::string vocab_sha256(const Vocab& vocab);

void save_checkpoint(const std::string& path, const Embeddings& emb,
                     const std::string& vocab_sha, const AdapterParams* adapter = nullptr);

struct Checkpoint {
    Embeddings embeddings;
    std::optional<AdapterParams> adapter;
    std::string vocab_sha256;
};

Checkpoint load_checkpoint(const std::string& path);

void save_adapter_checkpoint(const std::string& path, const AdapterParams& adapter,
                             const std::string& backbone_sha);

struct AdapterCheckpoint {
    AdapterParams adapter;
    std::string backbone_sha256;
};

AdapterCheckpoint load_adapter_checkpoint(const std::string& path);

// Header echo, tensor shapes, and frozen-vs-adapter parameter counts.
std::string inspect_checkpoint(const std::string& path);

}  // namespace cqda
