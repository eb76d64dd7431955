#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rmtl/errors.hpp"

namespace rmtl {

struct CatField {
    std::string name;
    std::size_t vocab = 0;
};

/// Field layout of a session dataset: user/item vocabularies, extra
/// categorical fields, numerical field names, and the embedding width d_e.
struct FeatureSchema {
    std::size_t user_vocab = 0;
    std::size_t item_vocab = 0;
    std::vector<CatField> cat_fields;
    std::vector<std::string> num_fields;
    std::size_t embed_dim = 128;

    void validate() const {
        if (user_vocab < 1 || item_vocab < 1)
            throw ValidationError("schema: user_vocab and item_vocab must be >= 1");
        if (embed_dim < 1) throw ValidationError("schema: embed_dim must be >= 1");
        std::set<std::string> names{"session_id", "timestamp", "user_id", "item_id",
                                    "y_click", "y_convert"};
        for (const auto& f : cat_fields) {
            if (f.vocab < 1)
                throw ValidationError("schema: vocab of " + f.name + " must be >= 1");
            if (!names.insert(f.name).second)
                throw ValidationError("schema: duplicate field name " + f.name);
        }
        for (const auto& f : num_fields)
            if (!names.insert(f).second)
                throw ValidationError("schema: duplicate field name " + f);
    }

    /// Expected CSV header, in order.
    std::vector<std::string> header() const {
        std::vector<std::string> h{"session_id", "timestamp", "user_id", "item_id"};
        for (const auto& f : cat_fields) h.push_back(f.name);
        for (const auto& f : num_fields) h.push_back(f);
        h.push_back("y_click");
        h.push_back("y_convert");
        return h;
    }

    bool operator==(const FeatureSchema& o) const {
        if (user_vocab != o.user_vocab || item_vocab != o.item_vocab ||
            embed_dim != o.embed_dim || cat_fields.size() != o.cat_fields.size() ||
            num_fields != o.num_fields)
            return false;
        for (std::size_t i = 0; i < cat_fields.size(); ++i)
            if (cat_fields[i].name != o.cat_fields[i].name ||
                cat_fields[i].vocab != o.cat_fields[i].vocab)
                return false;
        return true;
    }
};

/// Sidecar format: one key=value per line. Keys: user_vocab, item_vocab,
/// embed_dim, cat_field=name:vocab (repeatable), num_field=name (repeatable).
/// '#' starts a comment.
inline FeatureSchema parse_schema(std::istream& in) {
    FeatureSchema s;
    bool saw_user = false, saw_item = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t'))
            line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        line.erase(0, start);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("schema line " + std::to_string(lineno) + ": missing '='");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        try {
            if (key == "user_vocab") {
                s.user_vocab = std::stoull(val);
                saw_user = true;
            } else if (key == "item_vocab") {
                s.item_vocab = std::stoull(val);
                saw_item = true;
            } else if (key == "embed_dim") {
                s.embed_dim = std::stoull(val);
            } else if (key == "cat_field") {
                const auto colon = val.find(':');
                if (colon == std::string::npos)
                    throw ParseError("schema line " + std::to_string(lineno) +
                                     ": cat_field needs name:vocab");
                s.cat_fields.push_back({val.substr(0, colon), std::stoull(val.substr(colon + 1))});
            } else if (key == "num_field") {
                s.num_fields.push_back(val);
            } else {
                throw ParseError("schema line " + std::to_string(lineno) + ": unknown key " + key);
            }
        } catch (const std::invalid_argument&) {
            throw ParseError("schema line " + std::to_string(lineno) + ": bad number in " + val);
        } catch (const std::out_of_range&) {
            throw ParseError("schema line " + std::to_string(lineno) + ": number out of range");
        }
    }
    if (!saw_user || !saw_item)
        throw ParseError("schema: user_vocab and item_vocab are required");
    s.validate();
    return s;
}

inline FeatureSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("schema: cannot open " + path);
    return parse_schema(in);
}

inline std::string schema_to_text(const FeatureSchema& s) {
    std::ostringstream os;
    os << "user_vocab=" << s.user_vocab << "\n";
    os << "item_vocab=" << s.item_vocab << "\n";
    os << "embed_dim=" << s.embed_dim << "\n";
    for (const auto& f : s.cat_fields) os << "cat_field=" << f.name << ":" << f.vocab << "\n";
    for (const auto& f : s.num_fields) os << "num_field=" << f << "\n";
    return os.str();
}

inline void save_schema(const FeatureSchema& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("schema: cannot open " + path + " for writing");
    out << schema_to_text(s);
    if (!out) throw IoError("schema: write failed for " + path);
}

}  // namespace rmtl
