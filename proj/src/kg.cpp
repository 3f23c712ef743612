#include "pathqa/kg.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "pathqa/io_util.hpp"
#include "pathqa/rng.hpp"

namespace pathqa {

namespace {

constexpr char kGraphMagic[5] = "PQKG";

std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        std::uint64_t k = (std::uint64_t{t.head} << 40) ^ (std::uint64_t{t.relation} << 20) ^ t.tail;
        return std::hash<std::uint64_t>{}(k);
    }
};

}  // namespace

KnowledgeGraph KnowledgeGraph::build(std::vector<std::string> entity_names,
                                     std::vector<std::string> relation_names,
                                     std::vector<Triple> triples) {
    KnowledgeGraph kg;
    kg.entity_names_ = std::move(entity_names);
    kg.relation_names_ = std::move(relation_names);
    if (kg.relation_names_.size() % 2 != 0)
        throw ContractError("relation vocabulary must be inverse-augmented (even size)");
    for (std::size_t i = 0; i < kg.entity_names_.size(); ++i)
        kg.entity_index_.emplace(kg.entity_names_[i], static_cast<EntityId>(i));
    for (std::size_t i = 0; i < kg.relation_names_.size(); ++i)
        kg.relation_index_.emplace(kg.relation_names_[i], static_cast<RelationId>(i));

    std::unordered_set<Triple, TripleHash> seen;
    kg.triples_.reserve(triples.size());
    for (const Triple& t : triples) {
        if (t.head >= kg.entity_names_.size() || t.tail >= kg.entity_names_.size() ||
            t.relation >= kg.relation_names_.size())
            throw ContractError("triple references an id outside the vocabularies");
        if (seen.insert(t).second) kg.triples_.push_back(t);
    }
    kg.build_adjacency();
    return kg;
}

void KnowledgeGraph::build_adjacency() {
    const std::size_t n = entity_names_.size();
    std::vector<std::uint64_t> degree(n, 0);
    for (const Triple& t : triples_) {
        ++degree[t.head];
        ++degree[t.tail];
    }
    offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
    edges_.resize(offsets_[n]);
    std::vector<std::uint64_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const Triple& t : triples_) {
        edges_[cursor[t.head]++] = Edge{t.relation, t.tail};
        edges_[cursor[t.tail]++] = Edge{inverse(t.relation), t.head};
    }
    for (std::size_t i = 0; i < n; ++i)
        std::sort(edges_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                  edges_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
}

std::span<const Edge> KnowledgeGraph::neighbors(EntityId e) const {
    if (e >= entity_names_.size()) throw ContractError("entity id out of range");
    return {edges_.data() + offsets_[e], edges_.data() + offsets_[e + 1]};
}

const std::string& KnowledgeGraph::entity_name(EntityId e) const {
    if (e >= entity_names_.size()) throw ContractError("entity id out of range");
    return entity_names_[e];
}

const std::string& KnowledgeGraph::relation_name(RelationId r) const {
    if (r >= relation_names_.size()) throw ContractError("relation id out of range");
    return relation_names_[r];
}

std::optional<EntityId> KnowledgeGraph::find_entity(std::string_view name) const {
    auto it = entity_index_.find(std::string(name));
    if (it == entity_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view name) const {
    auto it = relation_index_.find(std::string(name));
    if (it == relation_index_.end()) return std::nullopt;
    return it->second;
}

KnowledgeGraph KnowledgeGraph::subsample_half(std::uint64_t seed) const {
    if (triples_.empty()) throw ContractError("cannot subsample an empty graph");
    std::vector<std::size_t> idx(triples_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(triples_.size() / 2);
    std::sort(idx.begin(), idx.end());
    std::vector<Triple> kept;
    kept.reserve(idx.size());
    for (std::size_t i : idx) kept.push_back(triples_[i]);
    return build(entity_names_, relation_names_, std::move(kept));
}

KnowledgeGraph load_kb(std::istream& in) {
    std::vector<std::string> entity_names;
    std::vector<std::string> relation_names;
    std::unordered_map<std::string, EntityId> entity_index;
    std::unordered_map<std::string, RelationId> relation_index;
    std::vector<Triple> triples;

    auto intern_entity = [&](std::string_view name) {
        auto it = entity_index.find(std::string(name));
        if (it != entity_index.end()) return it->second;
        EntityId id = static_cast<EntityId>(entity_names.size());
        entity_names.emplace_back(name);
        entity_index.emplace(entity_names.back(), id);
        return id;
    };
    auto intern_relation = [&](std::string_view name) {
        auto it = relation_index.find(std::string(name));
        if (it != relation_index.end()) return it->second;
        RelationId id = static_cast<RelationId>(relation_names.size());
        relation_names.emplace_back(name);
        relation_names.emplace_back(std::string(name) + std::string(kInverseSuffix));
        relation_index.emplace(relation_names[id], id);
        relation_index.emplace(relation_names[id + 1], id + 1);
        return id;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = trim(line);
        if (view.empty()) continue;
        std::size_t p1 = view.find('|');
        std::size_t p2 = p1 == std::string_view::npos ? std::string_view::npos : view.find('|', p1 + 1);
        std::size_t p3 = p2 == std::string_view::npos ? std::string_view::npos : view.find('|', p2 + 1);
        if (p1 == std::string_view::npos || p2 == std::string_view::npos || p3 != std::string_view::npos)
            throw ParseError("expected head|relation|tail", line_no);
        std::string_view head = trim(view.substr(0, p1));
        std::string_view rel = trim(view.substr(p1 + 1, p2 - p1 - 1));
        std::string_view tail = trim(view.substr(p2 + 1));
        if (head.empty() || rel.empty() || tail.empty())
            throw ParseError("empty field in triple", line_no);
        triples.push_back(Triple{intern_entity(head), intern_relation(rel), intern_entity(tail)});
    }
    if (triples.empty()) throw ParseError("empty knowledge graph");
    return KnowledgeGraph::build(std::move(entity_names), std::move(relation_names), std::move(triples));
}

KnowledgeGraph load_kb_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open KB file: " + path);
    return load_kb(in);
}

void KnowledgeGraph::save(std::ostream& out) const {
    out.write(kGraphMagic, 4);
    io::write_u8(out, kGraphFormatVersion);
    io::write_u64(out, entity_names_.size());
    io::write_u64(out, relation_names_.size());
    io::write_u64(out, triples_.size());
    for (const auto& s : entity_names_) io::write_string(out, s);
    for (const auto& s : relation_names_) io::write_string(out, s);
    for (const Triple& t : triples_) {
        io::write_u32(out, t.head);
        io::write_u32(out, t.relation);
        io::write_u32(out, t.tail);
    }
    if (!out) throw IoError("failed writing graph");
}

KnowledgeGraph KnowledgeGraph::load(std::istream& in) {
    io::expect_magic(in, kGraphMagic, "knowledge graph");
    std::uint8_t version = io::read_u8(in);
    if (version != kGraphFormatVersion)
        throw IoError("unsupported graph format version " + std::to_string(version));
    std::uint64_t n_ent = io::read_u64(in);
    std::uint64_t n_rel = io::read_u64(in);
    std::uint64_t n_tri = io::read_u64(in);
    std::vector<std::string> entity_names(n_ent);
    for (auto& s : entity_names) s = io::read_string(in);
    std::vector<std::string> relation_names(n_rel);
    for (auto& s : relation_names) s = io::read_string(in);
    std::vector<Triple> triples(n_tri);
    for (auto& t : triples) {
        t.head = io::read_u32(in);
        t.relation = io::read_u32(in);
        t.tail = io::read_u32(in);
    }
    return build(std::move(entity_names), std::move(relation_names), std::move(triples));
}

void KnowledgeGraph::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    save(out);
}

KnowledgeGraph KnowledgeGraph::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open graph file: " + path);
    return load(in);
}

namespace io {

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for checksum: " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!in) break;
    }
    return h;
}

std::string fnv1a_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

}  // namespace io

}  // namespace pathqa
