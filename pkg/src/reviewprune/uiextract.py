"""Android layout / strings.xml mining: one UIElement per identified widget,
described by type, variable name, label, and icon."""

from __future__ import annotations

import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

from . import textprep

log = logging.getLogger(__name__)

ANDROID_NS = "http://schemas.android.com/apk/res/android"

# label attributes, in resolution priority order
_LABEL_ATTRS = ("text", "hint", "contentDescription")
_CAMEL_SPLIT = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")


class LayoutParseError(Exception):
    """Malformed strings.xml (fatal) with file location attached."""


@dataclass(frozen=True)
class UIElement:
    element_id: str
    release_ordinal: int
    element_type: str
    variable_name: str
    label: str = ""
    icon_name: str = ""

    def description(self) -> tuple[str, str, str, str]:
        return (self.element_type, self.variable_name, self.label, self.icon_name)


class StringTable(dict):
    """Mapping from string resource key to display text."""


def parse_strings(path) -> StringTable:
    """Parse res/values/strings.xml; inner markup is flattened to text and a
    duplicated key keeps the last value (with a warning)."""
    path = Path(path)
    try:
        tree = ET.parse(path)
    except ET.ParseError as exc:
        raise LayoutParseError(f"{path}: {exc}") from exc
    table = StringTable()
    for node in tree.getroot().iter("string"):
        key = node.get("name")
        if not key:
            continue
        value = "".join(node.itertext()).strip()
        if key in table:
            log.warning("%s: duplicate string key %r, keeping the later value", path, key)
        table[key] = value
    return table


def _local_name(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _android_attr(node, name: str) -> str | None:
    return node.get(f"{{{ANDROID_NS}}}{name}") or node.get(f"android:{name}")


def _id_token(raw: str) -> str:
    for prefix in ("@+id/", "@id/", "@android:id/"):
        if raw.startswith(prefix):
            return raw[len(prefix):]
    return raw


def _resolve_label(node, strings: StringTable) -> str:
    for attr in _LABEL_ATTRS:
        raw = _android_attr(node, attr)
        if not raw:
            continue
        if raw.startswith("@string/"):
            key = raw[len("@string/"):]
            if key in strings:
                return strings[key]
            log.warning("unresolvable string reference %r, keeping the key", raw)
            return key
        return raw
    return ""


def _resolve_icon(node) -> str:
    for attr_name, raw in _iter_android_attrs(node):
        if attr_name == "src" or attr_name.startswith("drawable"):
            if raw.startswith("@drawable/"):
                return raw[len("@drawable/"):]
            if raw.startswith("@mipmap/"):
                return raw[len("@mipmap/"):]
    return ""


def _iter_android_attrs(node):
    ns_prefix = f"{{{ANDROID_NS}}}"
    for key, value in node.attrib.items():
        if key.startswith(ns_prefix):
            yield key[len(ns_prefix):], value
        elif key.startswith("android:"):
            yield key[len("android:"):], value


def parse_layout_file(path, strings: StringTable, release_ordinal: int) -> list[UIElement]:
    path = Path(path)
    tree = ET.parse(path)
    elements = []
    for node in tree.getroot().iter():
        if not isinstance(node.tag, str):
            continue
        raw_id = _android_attr(node, "id")
        if not raw_id:
            continue
        variable = _id_token(raw_id)
        if not variable:
            continue
        elements.append(
            UIElement(
                element_id=variable,
                release_ordinal=release_ordinal,
                element_type=_local_name(node.tag),
                variable_name=variable,
                label=_resolve_label(node, strings),
                icon_name=_resolve_icon(node),
            )
        )
    return elements


def parse_layouts(layout_dir, strings: StringTable, release_ordinal: int) -> list[UIElement]:
    """Parse every layout XML under `layout_dir` (sorted by path, document
    order within a file). Unreadable files are skipped with a logged error;
    widgets without android:id carry no stable identity and are ignored.
    A later occurrence of an id supersedes earlier ones."""
    layout_dir = Path(layout_dir)
    by_id: dict[str, UIElement] = {}
    for path in sorted(layout_dir.rglob("*.xml")):
        try:
            parsed = parse_layout_file(path, strings, release_ordinal)
        except (ET.ParseError, OSError) as exc:
            log.error("skipping unreadable layout %s: %s", path, exc)
            continue
        for element in parsed:
            by_id[element.element_id] = element
    return [by_id[k] for k in sorted(by_id)]


def split_identifier(name: str) -> list[str]:
    """Split snake_case / camelCase / dotted identifiers into words."""
    parts = re.split(r"[_\-./]+", name)
    words = []
    for part in parts:
        if not part:
            continue
        words.extend(p for p in _CAMEL_SPLIT.split(part) if p)
    return words


def description_tokens(element: UIElement, stoplist: textprep.StopList | None = None) -> list[str]:
    """Normalized bag of words describing an element, built from its type,
    variable name, label, and icon name."""
    pieces = []
    pieces.extend(split_identifier(element.element_type))
    pieces.extend(split_identifier(element.variable_name))
    if element.label:
        pieces.append(element.label)
    if element.icon_name:
        pieces.extend(split_identifier(element.icon_name))
    text = " ".join(pieces)
    return list(textprep.preprocess(text, stoplist, source_id=element.element_id).tokens)


def elements_to_csv(elements: list[UIElement]) -> str:
    """Element manifest rows: element_id, type, variable, label, icon, release."""
    import csv as _csv
    import io

    buf = io.StringIO()
    writer = _csv.writer(buf, lineterminator="\n")
    writer.writerow(["element_id", "element_type", "variable_name", "label", "icon_name", "release_ordinal"])
    for e in sorted(elements, key=lambda x: (x.release_ordinal, x.element_id)):
        writer.writerow(
            [e.element_id, e.element_type, e.variable_name, e.label, e.icon_name, e.release_ordinal]
        )
    return buf.getvalue()


def elements_from_csv(text: str) -> list[UIElement]:
    import csv as _csv

    out = []
    for row in _csv.DictReader(text.splitlines()):
        out.append(
            UIElement(
                element_id=row["element_id"],
                release_ordinal=int(row["release_ordinal"]),
                element_type=row["element_type"],
                variable_name=row["variable_name"],
                label=row["label"],
                icon_name=row["icon_name"],
            )
        )
    return out
