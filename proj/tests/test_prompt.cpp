#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "semsteer/backend.hpp"
#include "semsteer/errors.hpp"
#include "semsteer/prompt.hpp"
#include "support.hpp"

using namespace semsteer;

namespace {

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

const std::string kInstr = "put the knife away";

std::vector<SteeringMode> all_modes() {
  std::vector<SteeringMode> out = {SteeringMode::instruction_following(), SteeringMode::in_context(),
                                   SteeringMode::focus_general(), SteeringMode::focus_region({40, 60, 200, 220})};
  for (MarkerColor c : kAllMarkerColors) out.push_back(SteeringMode::focus_color(c));
  return out;
}

}  // namespace

TEST(Prompt, InContextPreamble) {
  const auto p = render_prompt(kInstr, SteeringMode::in_context());
  EXPECT_EQ(p.user_text.rfind("First check whether there is a potential safety risk", 0), 0u);
  EXPECT_NE(p.user_text.find("Answer: Yes"), std::string::npos);
  EXPECT_NE(p.user_text.find("Answer: No"), std::string::npos);
}

TEST(Prompt, ColorFocusSentence) {
  const auto p = render_prompt(kInstr, SteeringMode::focus_color(MarkerColor::Red));
  EXPECT_NE(p.user_text.find("First check if there is a red circle. If yes, focus on it."), std::string::npos);
}

TEST(Prompt, ColorPromptNamesOnlyItsColor) {
  for (MarkerColor c : kAllMarkerColors) {
    const std::string text = lower(render_prompt(kInstr, SteeringMode::focus_color(c)).user_text);
    for (MarkerColor other : kAllMarkerColors) {
      const bool present = text.find(std::string(color_word(other))) != std::string::npos;
      EXPECT_EQ(present, other == c) << to_string(c) << " vs " << to_string(other);
    }
  }
}

TEST(Prompt, RegionSentence) {
  const auto p = render_prompt(kInstr, SteeringMode::focus_region({40, 60, 200, 220}));
  EXPECT_NE(p.user_text.find("Focus on the region defined by [40, 60, 200, 220]."), std::string::npos);
  const auto ic = render_prompt(kInstr, SteeringMode::in_context());
  EXPECT_EQ(p.user_text.rfind(ic.user_text, 0), 0u);  // IC text, then the focus sentence
}

TEST(Prompt, InstructionFollowingHasNoSafetyLanguage) {
  const std::string text = lower(render_prompt(kInstr, SteeringMode::instruction_following()).user_text);
  for (const char* w : {"safety", "risk", "circle"}) EXPECT_EQ(text.find(w), std::string::npos) << w;
}

TEST(Prompt, InstructionAppearsExactlyOnce) {
  for (const auto& m : all_modes()) {
    const auto p = render_prompt(kInstr, m);
    EXPECT_EQ(count_of(p.system_text + "\n" + p.user_text, kInstr), 1u) << to_string(m.kind);
  }
}

TEST(Prompt, DeterministicAndVersioned) {
  for (const auto& m : all_modes()) {
    const auto a = render_prompt(kInstr, m);
    const auto b = render_prompt(kInstr, m);
    EXPECT_EQ(a.user_text, b.user_text);
    EXPECT_EQ(a.system_text, b.system_text);
    EXPECT_EQ(a.template_version.size(), 12u);
  }
  EXPECT_NE(render_prompt(kInstr, SteeringMode::in_context()).template_version,
            render_prompt(kInstr, SteeringMode::instruction_following()).template_version);
}

TEST(Prompt, ModeArgumentsValidated) {
  EXPECT_THROW(render_prompt(kInstr, {SteeringMode::Kind::ICF_color, std::nullopt, std::nullopt}), ArgumentError);
  EXPECT_THROW(render_prompt(kInstr, {SteeringMode::Kind::Mt, std::nullopt, std::nullopt}), ArgumentError);
  EXPECT_THROW(render_prompt("", SteeringMode::in_context()), ArgumentError);
  EXPECT_EQ(parse_steering_kind("ICF_general"), SteeringMode::Kind::ICF_general);
  EXPECT_THROW(parse_steering_kind("XYZ"), ArgumentError);
}

TEST(Prompt, TriggerConditions) {
  EXPECT_EQ(trigger_condition(MarkerColor::Red, SteeringMode::focus_color(MarkerColor::Red)), TriggerCondition::Matched);
  EXPECT_EQ(trigger_condition(MarkerColor::White, SteeringMode::focus_color(MarkerColor::Red)),
            TriggerCondition::Mismatched);
  EXPECT_EQ(trigger_condition(MarkerColor::Red, SteeringMode::in_context()), TriggerCondition::None);
  EXPECT_EQ(trigger_condition(MarkerColor::Green, SteeringMode::focus_general()), TriggerCondition::General);
}

TEST(Templates, SubstituteIsSinglePass) {
  EXPECT_EQ(substitute("{a} and {b} and {c}", {{"a", "{b}"}, {"b", "B"}}), "{b} and B and {c}");
  EXPECT_EQ(substitute("{unterminated", {{"unterminated", "x"}}), "{unterminated");
}

TEST(Templates, ParseSectionsAndVersion) {
  const std::string file = "[system]\nS line\n[user]\nU {x}\n";
  const auto t = parse_template("demo", file);
  EXPECT_EQ(t.system_text, "S line");
  EXPECT_EQ(t.user_text, "U {x}");
  EXPECT_EQ(t.version, sha256_hex(std::string_view(file)).substr(0, 12));
  EXPECT_THROW(parse_template("bad", "no sections"), ParseError);
}

TEST(Templates, StoreLoadsDirectory) {
  const auto dir = testsupport::temp_dir("templates");
  std::ofstream(dir / "ic.txt") << "[system]\nsys\n[user]\nCustom {instruction}\n";
  const auto store = TemplateStore::load(dir);
  EXPECT_TRUE(store.has("ic"));
  EXPECT_FALSE(store.has("mt"));
  EXPECT_EQ(render_prompt("go", SteeringMode::in_context(), store).user_text, "Custom go");
  EXPECT_THROW(store.get("mt"), Error);
  std::filesystem::remove_all(dir);
}

TEST(KeyLine, AttachExtractStrip) {
  const std::string text = attach_key("hello\nworld", "a/safe/IC");
  EXPECT_EQ(extract_key(text), std::optional<std::string>("a/safe/IC"));
  EXPECT_EQ(strip_key(text), "hello\nworld");
  EXPECT_EQ(extract_key("no key here"), std::nullopt);
  EXPECT_EQ(strip_key("no key here"), "no key here");
}
