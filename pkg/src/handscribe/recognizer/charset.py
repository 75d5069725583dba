"""Character inventory for the recognizer.

The class axis of the logit matrix is the charset followed by one extra
class, the CTC blank. The standard inventory shipped with the package has
79 characters, making 80 classes in total.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from ..errors import InfeasibleLabelError, IoFailure, ValidationError

STANDARD_SIZE = 79


@dataclass(frozen=True)
class CharSet:
    """Ordered alphabet; index in `chars` is the class index, blank is the
    last class and never a member of `chars`."""

    chars: str

    def __post_init__(self):
        if not self.chars:
            raise ValidationError("charset must not be empty")
        if len(set(self.chars)) != len(self.chars):
            raise ValidationError("charset characters must be distinct")

    @property
    def blank_index(self) -> int:
        return len(self.chars)

    @property
    def num_classes(self) -> int:
        return len(self.chars) + 1

    def encode(self, text: str) -> list[int]:
        try:
            return [self.chars.index(ch) for ch in text]
        except ValueError:
            bad = sorted({ch for ch in text if ch not in self.chars})
            raise InfeasibleLabelError(f"characters not in charset: {bad!r}") from None

    def decode(self, indices) -> str:
        return "".join(self.chars[i] for i in indices)


def load_charset(path) -> CharSet:
    """Read the one-character-per-line class file; exactly 79 lines."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read charset {path}: {exc}") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if len(lines) != STANDARD_SIZE:
        raise ValidationError(f"charset file must have exactly {STANDARD_SIZE} lines, found {len(lines)}")
    for lineno, line in enumerate(lines, start=1):
        if len(line) != 1:
            raise ValidationError(f"charset line {lineno} must hold exactly one character")
    return CharSet("".join(lines))


def default_charset() -> CharSet:
    text = resources.files("handscribe.data").joinpath("charset.txt").read_text("utf-8")
    lines = text.split("\n")[:-1]
    return CharSet("".join(lines))
