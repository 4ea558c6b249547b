"""Exception types shared by all modules.

Every error carries the name of the module that raised it, the utterance it
concerns (if any) and a short remediation hint, so the CLI can print a
structured message without guessing.
"""


class NbfError(Exception):
    module = "nbf"

    def __init__(self, message, *, utt=None, hint=None, module=None):
        super().__init__(message)
        self.message = message
        self.utt = utt
        self.hint = hint
        if module is not None:
            self.module = module

    def as_dict(self):
        return {
            "error": type(self).__name__,
            "module": self.module,
            "message": self.message,
            "utt": self.utt,
            "hint": self.hint,
        }


class FormatError(NbfError):
    """Malformed input file. ``lineno`` is 1-based when known."""

    def __init__(self, message, *, path=None, lineno=None, **kw):
        where = ""
        if path is not None:
            where = f"{path}"
            if lineno is not None:
                where += f":{lineno}"
            where += ": "
        super().__init__(where + message, **kw)
        self.path = path
        self.lineno = lineno


class ConfigError(NbfError):
    pass


class ResourceError(NbfError):
    """A scorer resource (posteriorgram, score, lexicon entry...) is missing."""


class UtteranceMismatchError(NbfError):
    def __init__(self, message, only_a=(), only_b=(), **kw):
        only_a, only_b = sorted(only_a), sorted(only_b)
        detail = f" (only in first: {only_a[:10]}, only in second: {only_b[:10]})"
        super().__init__(message + detail, **kw)
        self.only_a = only_a
        self.only_b = only_b
