from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from t2ieval.descriptor import (
    DESCRIPTION_INSTRUCTION,
    NO_REGIONS_SENTINEL,
    GlobalDescription,
    LocalDescription,
    compose_description_prompt,
    format_global,
    format_region,
    parse_region_line,
    synthesize_description,
)
from t2ieval.errors import BackendUnavailable, PromptTooLong
from t2ieval.gateway import BackendEndpoint, ChatReply, RegionProposal

from conftest import ScriptedChatGateway

CHAT = BackendEndpoint(role="chat", base_url="http://backend.test", model_id="chat-1")


def region(label="sheep", caption="a white sheep standing",
           bbox=(310, 60, 490, 230), confidence=0.88):
    return RegionProposal(object_label=label, dense_caption=caption,
                          bbox=bbox, confidence=confidence)


class TestFormatGlobal:
    def test_template(self):
        g = GlobalDescription("a red car and a white sheep", 512, 512)
        assert format_global(g) == ("Image caption: a red car and a white sheep. "
                                    "Image resolution: 512x512.")

    def test_no_double_period(self):
        g = GlobalDescription("a boat at sunset.", 640, 480)
        assert format_global(g) == ("Image caption: a boat at sunset. "
                                    "Image resolution: 640x480.")

    def test_one_by_one_boundary(self):
        assert format_global(GlobalDescription("dot", 1, 1)).endswith(
            "Image resolution: 1x1.")

    def test_invariants(self):
        with pytest.raises(ValueError):
            GlobalDescription("", 10, 10)
        with pytest.raises(ValueError):
            GlobalDescription("x", 0, 10)


class TestFormatRegion:
    def test_template(self):
        assert format_region(region()) == \
            "sheep: a white sheep standing: [310, 60, 490, 230]"

    def test_colon_in_label_preserved(self):
        r = region(label="sign: stop", caption="a stop sign")
        assert format_region(r) == "sign: stop: a stop sign: [310, 60, 490, 230]"

    def test_zero_area_bbox_allowed(self):
        r = region(label="obj", caption="cap", bbox=(5, 5, 5, 5))
        assert format_region(r) == "obj: cap: [5, 5, 5, 5]"


class TestComposePrompt:
    def test_two_regions_and_instruction(self):
        g = GlobalDescription("a red car and a white sheep", 512, 512)
        l = LocalDescription.of([
            region("car", "a red car parked", (12, 40, 300, 210), 0.93),
            region("sheep", "a white sheep", (310, 60, 490, 230), 0.88)])
        request = compose_description_prompt(g, l)
        lines = request.user_text.splitlines()
        assert lines[0] == format_global(g)
        assert lines[1:3] == [format_region(r) for r in l.regions]
        assert lines[3] == DESCRIPTION_INSTRUCTION
        assert request.decode_mode == "greedy"

    def test_region_lines_appear_once_in_input_order(self):
        g = GlobalDescription("three things", 100, 100)
        labels = ["b", "a", "c"]
        l = LocalDescription.of([region(lbl, f"a {lbl}", (0, 0, 1, 1), 0.9)
                                 for lbl in labels])
        text = compose_description_prompt(g, l).user_text
        positions = [text.index(format_region(r)) for r in l.regions]
        assert positions == sorted(positions)
        for r in l.regions:
            assert text.count(format_region(r)) == 1

    def test_empty_regions_sentinel(self):
        g = GlobalDescription("blank scene", 64, 64)
        text = compose_description_prompt(g, LocalDescription.of([])).user_text
        assert NO_REGIONS_SENTINEL in text
        assert DESCRIPTION_INSTRUCTION in text

    def test_determinism(self):
        g = GlobalDescription("a dog", 32, 32)
        l = LocalDescription.of([region("dog", "a small dog", (1, 2, 3, 4), 0.7)])
        assert (compose_description_prompt(g, l).user_text
                == compose_description_prompt(g, l).user_text)

    def test_prompt_too_long_reports_region_count(self):
        g = GlobalDescription("scene", 512, 512)
        l = LocalDescription.of([region(f"object{i}", "a long caption " * 5,
                                        (0, 0, 10, 10), 0.9) for i in range(4)])
        with pytest.raises(PromptTooLong) as exc_info:
            compose_description_prompt(g, l, max_chars=80)
        assert exc_info.value.region_count == 4


_label = st.text(st.characters(whitelist_categories=("Ll",), max_codepoint=0x7F),
                 min_size=1, max_size=12)
_caption = _label.map(lambda s: f"a {s}")
_coord = st.integers(0, 999)


@given(_label, _caption, _coord, _coord, _coord, _coord)
@settings(max_examples=200)
def test_region_line_round_trip(label, caption, x0, y0, x1, y1):
    bbox = (min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))
    r = region(label, caption, bbox, 0.5)
    assert parse_region_line(format_region(r)) == (label, caption, bbox)


def test_parse_region_line_rejects_non_region_text():
    assert parse_region_line("Image caption: a cat. Image resolution: 1x1.") is None
    assert parse_region_line(DESCRIPTION_INSTRUCTION) is None


class TestSynthesizeDescription:
    def g_l(self):
        g = GlobalDescription("a red car and a white sheep", 512, 512)
        l = LocalDescription.of([
            region("car", "a red car parked", (12, 40, 300, 210), 0.93),
            region("sheep", "a white sheep", (310, 60, 490, 230), 0.88)])
        return g, l

    def test_echo_mock_contains_all_labels(self):
        g, l = self.g_l()
        gw = ScriptedChatGateway([])
        gw.chat = lambda request, endpoint: ChatReply(text=request.user_text)
        description = synthesize_description(g, l, gw, CHAT)
        assert "car" in description.text and "sheep" in description.text
        assert description.source_global is g
        assert description.descriptor_model_id == "chat-1"

    def test_gateway_error_tagged_with_stage(self):
        g, l = self.g_l()
        gw = ScriptedChatGateway([BackendUnavailable("down", attempts=3)])
        with pytest.raises(BackendUnavailable) as exc_info:
            synthesize_description(g, l, gw, CHAT)
        assert exc_info.value.stage == "descriptor"

    def test_truncation_triggers_one_reask_at_double_budget(self):
        g, l = self.g_l()
        gw = ScriptedChatGateway([ChatReply(text="partial...", truncated=True),
                                  "the full fused description"])
        description = synthesize_description(g, l, gw, CHAT)
        assert description.text == "the full fused description"
        assert gw.requests[1].max_tokens == 2 * gw.requests[0].max_tokens

    def test_still_truncated_keeps_text(self):
        g, l = self.g_l()
        gw = ScriptedChatGateway([ChatReply(text="partial a", truncated=True),
                                  ChatReply(text="partial b", truncated=True)])
        assert synthesize_description(g, l, gw, CHAT).text == "partial b"
