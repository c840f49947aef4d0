import re

SLUG_PATTERN = re.compile(r"[^a-z0-9]+")
DEFAULT_CURRENCY = "EUR"


def slugify(text: str) -> str:
    lowered = text.lower()
    slug = SLUG_PATTERN.sub("-", lowered)
    return slug.strip("-")


def chunks(items, size):
    out = []
    for start in range(0, len(items), size):
        out.append(items[start:start + size])
    return out


def clamp(value, low, high):
    if value < low:
        return low
    if value > high:
        return high
    return value


def money(amount: float, currency: str = DEFAULT_CURRENCY) -> str:
    return "%.2f %s" % (amount, currency)


def first(items, default=None):
    for item in items:
        return item
    return default
