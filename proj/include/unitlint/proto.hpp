#pragma once

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "unitlint/vocab.hpp"

namespace unitlint {

/// One "control_field = value implies target_field : type" relationship.
struct ControlRelation {
    std::string control_field;  // qualified, e.g. "vision_speed_estimate.frame"
    std::string control_value;  // a frame identifier
    std::string target_field;   // qualified, e.g. "vision_speed_estimate.x"
    UnitType implied_type;      // frame is Concrete(control_value)
};

struct MessageDef {
    int id = 0;
    std::string name;
    std::map<std::string, UnitType> field_units;  // frame Any unless controlled
    std::vector<std::string> control_fields;      // fields declared type="frame"
    std::vector<std::string> untyped_fields;      // fields without a units attribute
    std::vector<ControlRelation> control_relations;
};

/// Field-unit map plus control relationships extracted from a protocol file.
struct ProtocolModel {
    std::map<std::string, MessageDef> messages;  // keyed by message name
    std::set<std::string> frame_universe;

    /// Resolves a mini-language struct type ("vision_speed_estimate_t",
    /// optional "mavlink_" prefix accepted) to its message definition.
    const MessageDef* message_for_struct(std::string_view struct_name) const {
        std::string_view base = struct_name;
        if (base.size() > 8 && base.substr(0, 8) == "mavlink_") base = base.substr(8);
        if (base.size() < 2 || base.substr(base.size() - 2) != "_t") return nullptr;
        base = base.substr(0, base.size() - 2);
        std::string upper;
        for (char c : base) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        auto it = messages.find(upper);
        return it == messages.end() ? nullptr : &it->second;
    }
};

struct ProtoError {
    std::string message;
};

template <typename T>
using ProtoResult = Result<T, ProtoError>;

inline std::string message_struct_name(const std::string& message_name) {
    std::string out;
    for (char c : message_name) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out + "_t";
}

inline std::string qualified_field(const std::string& message_name, const std::string& field) {
    std::string out;
    for (char c : message_name) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out + "." + field;
}

/// Parses the protocol XML subset: <mavlink> with an optional
/// <enums><enum name="frames"> block and a <messages> list. Unknown
/// attributes are ignored; unknown elements are an error.
inline ProtoResult<ProtocolModel> parse_protocol(const std::string& xml_text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(xml_text);
        pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
    } catch (const std::exception& e) {
        return ProtoError{std::string("malformed protocol XML: ") + e.what()};
    }
    auto root = tree.get_child_optional("mavlink");
    if (!root) return ProtoError{"malformed protocol: missing <mavlink> root"};

    ProtocolModel model;
    std::set<int> seen_ids;

    for (const auto& [tag, node] : *root) {
        if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
        if (tag == "enums") {
            for (const auto& [etag, enode] : node) {
                if (etag == "<xmlattr>" || etag == "<xmlcomment>") continue;
                if (etag != "enum") return ProtoError{"unknown element <" + etag + "> in <enums>"};
                auto name = enode.get_optional<std::string>("<xmlattr>.name");
                if (!name || *name != "frames")
                    return ProtoError{"unsupported enum '" + name.value_or("") + "'"};
                for (const auto& [entag, ennode] : enode) {
                    if (entag == "<xmlattr>" || entag == "<xmlcomment>") continue;
                    if (entag != "entry")
                        return ProtoError{"unknown element <" + entag + "> in <enum>"};
                    auto ename = ennode.get_optional<std::string>("<xmlattr>.name");
                    if (!ename) return ProtoError{"<entry> missing name attribute"};
                    model.frame_universe.insert(*ename);
                }
            }
        } else if (tag == "messages") {
            for (const auto& [mtag, mnode] : node) {
                if (mtag == "<xmlattr>" || mtag == "<xmlcomment>") continue;
                if (mtag != "msg") return ProtoError{"unknown element <" + mtag + "> in <messages>"};
                MessageDef def;
                auto id = mnode.get_optional<int>("<xmlattr>.id");
                auto name = mnode.get_optional<std::string>("<xmlattr>.name");
                if (!id || !name) return ProtoError{"<msg> missing id or name"};
                def.id = *id;
                def.name = *name;
                if (!seen_ids.insert(def.id).second)
                    return ProtoError{"duplicate message id " + std::to_string(def.id)};
                if (model.messages.count(def.name))
                    return ProtoError{"duplicate message name " + def.name};
                for (const auto& [ftag, fnode] : mnode) {
                    if (ftag == "<xmlattr>" || ftag == "<xmlcomment>") continue;
                    if (ftag == "description") continue;
                    if (ftag != "field") return ProtoError{"unknown element <" + ftag + "> in <msg>"};
                    auto fname = fnode.get_optional<std::string>("<xmlattr>.name");
                    if (!fname) return ProtoError{"<field> missing name attribute"};
                    auto ftype = fnode.get_optional<std::string>("<xmlattr>.type");
                    auto funits = fnode.get_optional<std::string>("<xmlattr>.units");
                    if (ftype && *ftype == "frame") {
                        def.control_fields.push_back(*fname);
                    } else if (funits) {
                        auto unit = parse_unit_string(*funits);
                        if (!unit)
                            return ProtoError{"unknown unit '" + unit.error().detail + "' in field " +
                                              qualified_field(def.name, *fname)};
                        def.field_units[*fname] = unit.value();
                    } else {
                        def.untyped_fields.push_back(*fname);
                    }
                }
                model.messages.emplace(def.name, std::move(def));
            }
        } else {
            return ProtoError{"unknown element <" + tag + "> in <mavlink>"};
        }
    }

    // Each frame-typed field scopes over every measurement-bearing sibling,
    // one relation per frame identifier in the universe.
    bool any_control = false;
    for (auto& [mname, def] : model.messages) {
        for (const auto& cf : def.control_fields) {
            any_control = true;
            for (const auto& frame_id : model.frame_universe) {
                for (const auto& [fname, funit] : def.field_units) {
                    ControlRelation rel;
                    rel.control_field = qualified_field(mname, cf);
                    rel.control_value = frame_id;
                    rel.target_field = qualified_field(mname, fname);
                    rel.implied_type = funit.with_frame(FrameSpec::concrete(frame_id));
                    def.control_relations.push_back(std::move(rel));
                }
            }
        }
    }
    if (any_control && model.frame_universe.empty())
        return ProtoError{"a field has type=\"frame\" but no frames enum is declared"};
    return model;
}

inline std::optional<UnitType> lookup_field_unit(const ProtocolModel& model,
                                                 std::string_view struct_name,
                                                 const std::string& field) {
    const MessageDef* def = model.message_for_struct(struct_name);
    if (!def) return std::nullopt;
    auto it = def->field_units.find(field);
    if (it == def->field_units.end()) return std::nullopt;
    return it->second;
}

/// The set of frame identifiers a controlled field may assume, or nullopt if
/// the field is not the target of any control relation.
inline std::optional<std::set<std::string>> controlled_frames(const ProtocolModel& model,
                                                              std::string_view struct_name,
                                                              const std::string& field) {
    const MessageDef* def = model.message_for_struct(struct_name);
    if (!def) return std::nullopt;
    std::set<std::string> frames;
    for (const auto& rel : def->control_relations) {
        if (rel.target_field == qualified_field(def->name, field)) frames.insert(rel.control_value);
    }
    if (frames.empty()) return std::nullopt;
    return frames;
}

inline bool is_control_field(const ProtocolModel& model, std::string_view struct_name,
                             const std::string& field) {
    const MessageDef* def = model.message_for_struct(struct_name);
    if (!def) return false;
    for (const auto& cf : def->control_fields)
        if (cf == field) return true;
    return false;
}

}  // namespace unitlint
