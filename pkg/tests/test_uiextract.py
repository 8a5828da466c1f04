import logging

import pytest

from reviewprune.textprep import StopList
from reviewprune.uiextract import (
    LayoutParseError,
    StringTable,
    UIElement,
    description_tokens,
    elements_from_csv,
    elements_to_csv,
    parse_layouts,
    parse_strings,
    split_identifier,
)

ANDROID_XMLNS = 'xmlns:android="http://schemas.android.com/apk/res/android"'


def write_strings(tmp_path, body):
    path = tmp_path / "strings.xml"
    path.write_text(f'<?xml version="1.0" encoding="utf-8"?>\n<resources>{body}</resources>')
    return path


def write_layout(tmp_path, name, body):
    d = tmp_path / "layout"
    d.mkdir(exist_ok=True)
    path = d / name
    path.write_text(
        f'<?xml version="1.0" encoding="utf-8"?>\n<LinearLayout {ANDROID_XMLNS}>{body}</LinearLayout>'
    )
    return d


class TestParseStrings:
    def test_single_entry(self, tmp_path):
        path = write_strings(tmp_path, '<string name="start_listening">Start Listening</string>')
        assert parse_strings(path) == {"start_listening": "Start Listening"}

    def test_empty_resources(self, tmp_path):
        path = write_strings(tmp_path, "")
        assert parse_strings(path) == {}

    def test_duplicate_key_last_wins(self, tmp_path, caplog):
        path = write_strings(
            tmp_path,
            '<string name="k">first</string><string name="k">second</string>',
        )
        with caplog.at_level(logging.WARNING):
            table = parse_strings(path)
        assert table == {"k": "second"}
        assert any("duplicate" in r.message for r in caplog.records)

    def test_inner_markup_flattened(self, tmp_path):
        path = write_strings(tmp_path, '<string name="k">Hello <b>bold</b> world</string>')
        assert parse_strings(path)["k"] == "Hello bold world"

    def test_malformed_is_fatal_with_location(self, tmp_path):
        path = tmp_path / "strings.xml"
        path.write_text("<resources><string name='k'>oops")
        with pytest.raises(LayoutParseError, match="strings.xml"):
            parse_strings(path)


class TestParseLayouts:
    def test_button_with_string_reference(self, tmp_path):
        strings = StringTable({"start_listening": "Start Listening"})
        d = write_layout(
            tmp_path,
            "main.xml",
            '<Button android:id="@+id/btn_mic" android:text="@string/start_listening"/>',
        )
        elements = parse_layouts(d, strings, release_ordinal=0)
        assert elements == [
            UIElement(
                element_id="btn_mic",
                release_ordinal=0,
                element_type="Button",
                variable_name="btn_mic",
                label="Start Listening",
                icon_name="",
            )
        ]
        assert elements[0].description() == ("Button", "btn_mic", "Start Listening", "")

    def test_widget_without_id_skipped(self, tmp_path):
        d = write_layout(tmp_path, "main.xml", '<TextView android:text="hello"/>')
        assert parse_layouts(d, StringTable(), 0) == []

    def test_image_button_icon(self, tmp_path):
        d = write_layout(
            tmp_path,
            "main.xml",
            '<ImageButton android:id="@+id/share" android:src="@drawable/ic_share"/>',
        )
        (element,) = parse_layouts(d, StringTable(), 1)
        assert element.description() == ("ImageButton", "share", "", "ic_share")
        assert element.release_ordinal == 1

    def test_unresolvable_string_reference_keeps_key(self, tmp_path, caplog):
        d = write_layout(
            tmp_path,
            "main.xml",
            '<Button android:id="@+id/b" android:text="@string/missing_key"/>',
        )
        with caplog.at_level(logging.WARNING):
            (element,) = parse_layouts(d, StringTable(), 0)
        assert element.label == "missing_key"
        assert any("unresolvable" in r.message for r in caplog.records)

    def test_hint_and_content_description_feed_label(self, tmp_path):
        d = write_layout(
            tmp_path,
            "main.xml",
            '<EditText android:id="@+id/q" android:hint="Search here"/>'
            '<View android:id="@+id/v" android:contentDescription="Overflow menu"/>',
        )
        by_id = {e.element_id: e for e in parse_layouts(d, StringTable(), 0)}
        assert by_id["q"].label == "Search here"
        assert by_id["v"].label == "Overflow menu"

    def test_unreadable_file_skipped(self, tmp_path, caplog):
        d = write_layout(tmp_path, "good.xml", '<Button android:id="@+id/ok"/>')
        (d / "broken.xml").write_text("<LinearLayout><unclosed")
        with caplog.at_level(logging.ERROR):
            elements = parse_layouts(d, StringTable(), 0)
        assert [e.element_id for e in elements] == ["ok"]
        assert any("skipping unreadable" in r.message for r in caplog.records)

    def test_deterministic(self, tmp_path):
        d = write_layout(
            tmp_path,
            "a.xml",
            '<Button android:id="@+id/one"/><Button android:id="@+id/two"/>',
        )
        write_layout(tmp_path, "b.xml", '<Button android:id="@+id/three"/>')
        first = parse_layouts(d.parent / "layout", StringTable(), 0)
        second = parse_layouts(d.parent / "layout", StringTable(), 0)
        assert first == second
        assert all(e.element_id and e.release_ordinal == 0 for e in first)


class TestSplitIdentifier:
    def test_snake_case(self):
        assert split_identifier("btn_mic") == ["btn", "mic"]

    def test_camel_case(self):
        assert split_identifier("shareButton") == ["share", "Button"]

    def test_dotted(self):
        assert split_identifier("com.example.MyView") == ["com", "example", "My", "View"]


class TestDescriptionTokens:
    def test_paper_style_button(self):
        element = UIElement(
            element_id="btn_mic",
            release_ordinal=0,
            element_type="Button",
            variable_name="btn_mic",
            label="Start Listening",
        )
        assert description_tokens(element) == ["button", "btn", "mic", "start", "listen"]

    def test_minimal_description(self):
        element = UIElement(
            element_id="x", release_ordinal=0, element_type="View", variable_name="x"
        )
        assert description_tokens(element) == ["view", "x"]

    def test_camel_case_id(self):
        element = UIElement(
            element_id="shareButton",
            release_ordinal=0,
            element_type="ImageView",
            variable_name="shareButton",
        )
        tokens = description_tokens(element)
        assert "share" in tokens and "button" in tokens

    def test_obeys_textprep_invariants(self):
        stoplist = StopList.default()
        element = UIElement(
            element_id="the_user_id",
            release_ordinal=0,
            element_type="TextView",
            variable_name="the_user_id",
            label="The Items!",
            icon_name="ic_items_24dp",
        )
        tokens = description_tokens(element, stoplist)
        for token in tokens:
            assert token.isalpha() and token == token.lower()
            assert token not in stoplist


class TestManifestRoundTrip:
    def test_csv_round_trip(self):
        elements = [
            UIElement("a", 0, "Button", "a", "Go", ""),
            UIElement("b", 1, "Switch", "b", "", "ic_b"),
        ]
        text = elements_to_csv(elements)
        assert elements_from_csv(text) == elements
