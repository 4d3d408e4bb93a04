#include <catch2/catch_amalgamated.hpp>

#include "unitlint/proto.hpp"

using namespace unitlint;

namespace {

const char* kVisionXml = R"(<?xml version="1.0"?>
<mavlink>
  <enums>
    <enum name="frames">
      <entry name="GLOBAL"/>
      <entry name="LOCAL"/>
    </enum>
  </enums>
  <messages>
    <msg id="103" name="VISION_SPEED_ESTIMATE">
      <description>Speed estimate.</description>
      <field type="frame" name="frame">Frame</field>
      <field name="usec" units="us">Timestamp</field>
      <field name="x" units="m/s">Global X speed</field>
      <field name="raw">Uncommented payload</field>
    </msg>
  </messages>
</mavlink>
)";

}  // namespace

TEST_CASE("parse_protocol extracts field units and control relations") {
    auto r = parse_protocol(kVisionXml);
    REQUIRE(r.ok());
    const auto& model = r.value();
    REQUIRE(model.frame_universe == std::set<std::string>{"GLOBAL", "LOCAL"});
    const auto& msg = model.messages.at("VISION_SPEED_ESTIMATE");
    REQUIRE(msg.id == 103);
    REQUIRE(msg.field_units.size() == 2);
    REQUIRE(msg.field_units.at("usec").scalar_log10 == rat(-6));
    REQUIRE(msg.field_units.at("usec").frame.is_any());
    REQUIRE(msg.field_units.at("x").exponents[1] == -1);
    // 1 control field x 2 measurement fields x 2 frames.
    REQUIRE(msg.control_relations.size() == 4);
    bool found = false;
    for (const auto& rel : msg.control_relations) {
        if (rel.control_value == "GLOBAL" && rel.target_field == "vision_speed_estimate.x") {
            found = true;
            REQUIRE(rel.control_field == "vision_speed_estimate.frame");
            REQUIRE(rel.implied_type.frame == FrameSpec::concrete("GLOBAL"));
            REQUIRE(rel.implied_type.same_dimension(msg.field_units.at("x")));
        }
    }
    REQUIRE(found);
    // Fields without units stay unconstrained, not dimensionless.
    REQUIRE(msg.field_units.count("raw") == 0);
    REQUIRE(msg.untyped_fields == std::vector<std::string>{"raw"});
}

TEST_CASE("control relations differ from the base entry only in frame") {
    auto model = parse_protocol(kVisionXml).value();
    const auto& msg = model.messages.at("VISION_SPEED_ESTIMATE");
    for (const auto& rel : msg.control_relations) {
        auto dot = rel.target_field.find('.');
        const auto& base = msg.field_units.at(rel.target_field.substr(dot + 1));
        REQUIRE(rel.implied_type.same_dimension(base));
        REQUIRE(rel.implied_type.frame != base.frame);
    }
}

TEST_CASE("message with no fields") {
    auto r = parse_protocol(R"(<mavlink><messages><msg id="1" name="EMPTY"></msg></messages></mavlink>)");
    REQUIRE(r.ok());
    const auto& msg = r.value().messages.at("EMPTY");
    REQUIRE(msg.field_units.empty());
    REQUIRE(msg.control_relations.empty());
}

TEST_CASE("two messages may bind the same field name to different units") {
    auto r = parse_protocol(R"(<mavlink><messages>
      <msg id="1" name="A"><field name="alt" units="m">doc</field></msg>
      <msg id="2" name="B"><field name="alt" units="cm">doc</field></msg>
    </messages></mavlink>)");
    REQUIRE(r.ok());
    REQUIRE(r.value().messages.at("A").field_units.at("alt").scalar_log10 == rat(0));
    REQUIRE(r.value().messages.at("B").field_units.at("alt").scalar_log10 == rat(-2));
}

TEST_CASE("determinism: identical input yields identical models") {
    auto a = parse_protocol(kVisionXml).value();
    auto b = parse_protocol(kVisionXml).value();
    REQUIRE(a.frame_universe == b.frame_universe);
    REQUIRE(a.messages.size() == b.messages.size());
    const auto& ra = a.messages.at("VISION_SPEED_ESTIMATE").control_relations;
    const auto& rb = b.messages.at("VISION_SPEED_ESTIMATE").control_relations;
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
        REQUIRE(ra[i].control_value == rb[i].control_value);
        REQUIRE(ra[i].target_field == rb[i].target_field);
    }
}

TEST_CASE("errors: malformed XML, duplicates, unknown units, unknown elements") {
    REQUIRE_FALSE(parse_protocol("<mavlink><messages>").ok());
    REQUIRE_FALSE(parse_protocol("<notmavlink/>").ok());
    REQUIRE_FALSE(parse_protocol(R"(<mavlink><messages>
      <msg id="1" name="A"/><msg id="1" name="B"/></messages></mavlink>)").ok());
    REQUIRE_FALSE(parse_protocol(R"(<mavlink><messages>
      <msg id="1" name="A"><field name="x" units="furlong">d</field></msg></messages></mavlink>)").ok());
    REQUIRE_FALSE(parse_protocol(R"(<mavlink><bogus/></mavlink>)").ok());
    // Unknown attributes are ignored.
    REQUIRE(parse_protocol(R"(<mavlink><messages>
      <msg id="1" name="A" crc="77"><field name="x" units="m" display="alt">d</field></msg></messages></mavlink>)").ok());
}

TEST_CASE("lookup_field_unit resolves struct naming conventions") {
    auto model = parse_protocol(kVisionXml).value();
    auto u = lookup_field_unit(model, "vision_speed_estimate_t", "x");
    REQUIRE(u.has_value());
    REQUIRE(u->exponents[0] == 1);
    REQUIRE(u->frame.is_any());
    REQUIRE(lookup_field_unit(model, "mavlink_vision_speed_estimate_t", "usec").has_value());
    REQUIRE_FALSE(lookup_field_unit(model, "vision_speed_estimate_t", "nonexistent").has_value());
    REQUIRE_FALSE(lookup_field_unit(model, "unknown_t", "x").has_value());
}

TEST_CASE("controlled_frames and is_control_field") {
    auto model = parse_protocol(kVisionXml).value();
    auto frames = controlled_frames(model, "vision_speed_estimate_t", "x");
    REQUIRE(frames.has_value());
    REQUIRE(*frames == std::set<std::string>{"GLOBAL", "LOCAL"});
    REQUIRE(is_control_field(model, "vision_speed_estimate_t", "frame"));
    REQUIRE_FALSE(is_control_field(model, "vision_speed_estimate_t", "x"));
}
