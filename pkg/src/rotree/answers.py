"""Answer extraction and canonicalization for free-text answers."""
from fractions import Fraction
import re

_NUMBER = re.compile(r"-?\$?\d[\d,]*(?:\.\d+)?")


def parse_number(text):
    """``Fraction`` for a bare numeric string (currency and commas allowed), else ``None``."""
    cleaned = text.strip().replace(",", "").replace("$", "").rstrip(".")
    try:
        return Fraction(cleaned)
    except (ValueError, ZeroDivisionError):
        return None


def last_number(text):
    """The last number in ``text`` as a string, or ``None``."""
    found = _NUMBER.findall(text or "")
    if not found:
        return None
    return found[-1].replace("$", "").replace(",", "")


def canonical(answer):
    """Numbers compare by value; everything else by stripped, lowercased text."""
    value = parse_number(answer)
    if value is not None:
        return ("num", value)
    return ("text", " ".join(answer.split()).lower())


def answers_match(predicted, gold) -> bool:
    if predicted is None or gold is None:
        return False
    return canonical(str(predicted)) == canonical(str(gold))
