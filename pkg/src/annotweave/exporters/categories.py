"""Category lists mapping annotation tags to integer class IDs.

Lists are plain text files, one class per line; the file stem names the
list and line order fixes the IDs (0-based). MSCOCO and PASCAL VOC ship
with the package.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import DuplicateName, EmptyCategoryFileWarning
from ..storage import natural_sort_key


@dataclass(frozen=True)
class CategoryList:
    name: str
    entries: tuple[str, ...]

    def __post_init__(self):
        seen = {}
        for line_no, entry in enumerate(self.entries, start=1):
            if entry in seen:
                raise DuplicateName(
                    f"category list {self.name!r}: {entry!r} on line {line_no} "
                    f"repeats line {seen[entry]}"
                )
            seen[entry] = line_no

    def id_of(self, tag: str):
        """0-based category ID for a tag, or None when unmapped."""
        try:
            return self.entries.index(tag)
        except ValueError:
            return None


def parse_category_file(path: Path) -> CategoryList:
    lines = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines()]
    entries = tuple(ln for ln in lines if ln)
    return CategoryList(path.stem, entries)


def load_category_lists(directory) -> list[CategoryList]:
    """One list per text file in the directory; empty files are skipped
    with a warning."""
    directory = Path(directory)
    out = []
    for path in sorted(directory.glob("*.txt"), key=lambda p: natural_sort_key(p.name)):
        parsed = parse_category_file(path)
        if not parsed.entries:
            warnings.warn(
                f"category list file {path.name} is empty, skipped",
                EmptyCategoryFileWarning,
                stacklevel=2,
            )
            continue
        out.append(parsed)
    return out


def builtin_category_list(name: str) -> CategoryList:
    """Lists shipped with the package: 'mscoco' (80) and 'pascal_voc' (20)."""
    ref = resources.files("annotweave.exporters").joinpath(f"data/{name}.txt")
    with resources.as_file(ref) as path:
        if not path.exists():
            raise FileNotFoundError(f"no built-in category list named {name!r}")
        return parse_category_file(path)
