"""Line-oriented sectioned key-value experiment configs.

Grammar (one statement per line):

    # comment                     blank lines and #-comments are ignored
    seed = 42                     top-level keys come before any section
    [system]                      sections: system, command, output
    kind = toral
    matrix = 2 1; 1 1

Values are raw strings; typed access goes through ConfigSection.take_* which
records consumption so unknown keys can be rejected with their exact path and
line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

KNOWN_SECTIONS = ("system", "command", "output")


@dataclass
class ConfigEntry:
    value: str
    line: int
    used: bool = False


@dataclass
class ConfigSection:
    name: str
    path: str
    entries: dict[str, ConfigEntry] = field(default_factory=dict)

    def _entry(self, key: str) -> ConfigEntry | None:
        entry = self.entries.get(key)
        if entry is not None:
            entry.used = True
        return entry

    def _keypath(self, key: str) -> str:
        return f"{self.name}.{key}" if self.name else key

    def take_str(self, key: str, default: str | None = None, required: bool = False) -> str | None:
        entry = self._entry(key)
        if entry is None:
            if required:
                raise ConfigError(f"missing required key '{self._keypath(key)}'", self.path)
            return default
        return entry.value

    def _convert(self, key: str, conv, what: str):
        entry = self._entry(key)
        if entry is None:
            return None
        try:
            return conv(entry.value)
        except ValueError as exc:
            raise ConfigError(
                f"key '{self._keypath(key)}' must be {what}, got {entry.value!r}",
                self.path,
                entry.line,
            ) from exc

    def take_int(self, key: str, default: int | None = None, required: bool = False):
        value = self._convert(key, int, "an integer")
        if value is None:
            if required:
                raise ConfigError(f"missing required key '{self._keypath(key)}'", self.path)
            return default
        return value

    def take_float(self, key: str, default: float | None = None, required: bool = False):
        value = self._convert(key, float, "a number")
        if value is None:
            if required:
                raise ConfigError(f"missing required key '{self._keypath(key)}'", self.path)
            return default
        return value

    def take_floats(self, key: str, default=None, required: bool = False):
        value = self._convert(key, lambda s: [float(v) for v in s.split()], "numbers")
        if value is None:
            if required:
                raise ConfigError(f"missing required key '{self._keypath(key)}'", self.path)
            return default
        return value

    def take_ints(self, key: str, default=None, required: bool = False):
        value = self._convert(key, lambda s: [int(v) for v in s.split()], "integers")
        if value is None:
            if required:
                raise ConfigError(f"missing required key '{self._keypath(key)}'", self.path)
            return default
        return value

    def take_matrix(self, key: str, required: bool = False):
        def conv(text: str):
            rows = [r.strip() for r in text.split(";") if r.strip()]
            mat = [[float(v) for v in r.split()] for r in rows]
            if not mat or any(len(r) != len(mat) for r in mat):
                raise ValueError(text)
            return mat

        value = self._convert(key, conv, "a square matrix like '2 1; 1 1'")
        if value is None and required:
            raise ConfigError(f"missing required key '{self._keypath(key)}'", self.path)
        return value

    def reject_unused(self) -> None:
        for key, entry in self.entries.items():
            if not entry.used:
                raise ConfigError(
                    f"unknown key '{self._keypath(key)}'", self.path, entry.line
                )


@dataclass
class Config:
    path: str
    top: ConfigSection
    sections: dict[str, ConfigSection]

    def section(self, name: str) -> ConfigSection:
        if name not in self.sections:
            self.sections[name] = ConfigSection(name, self.path)
        return self.sections[name]

    def reject_unused(self) -> None:
        self.top.reject_unused()
        for section in self.sections.values():
            section.reject_unused()


def parse_config(path) -> Config:
    path = str(path)
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(str(exc), path) from exc
    top = ConfigSection("", path)
    sections: dict[str, ConfigSection] = {}
    current = top
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in KNOWN_SECTIONS:
                raise ConfigError(f"unknown section '[{name}]'", path, lineno)
            if name in sections:
                raise ConfigError(f"duplicate section '[{name}]'", path, lineno)
            current = ConfigSection(name, path)
            sections[name] = current
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError("expected 'key = value' or '[section]'", path, lineno)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError("empty key", path, lineno)
        if key in current.entries:
            raise ConfigError(
                f"duplicate key '{current._keypath(key)}'", path, lineno
            )
        current.entries[key] = ConfigEntry(value, lineno)
    return Config(path=path, top=top, sections=sections)
