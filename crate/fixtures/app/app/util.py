class Helper:
    """Small formatting helper."""

    def format(self, text: str) -> str:
        return text.strip()


def shout(text):
    return text.upper()
